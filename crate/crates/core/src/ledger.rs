//! Append-only UAV registration ledger.
//!
//! Mirrors the registration contract: `join_bcsfl` stores `(owner, node_id)`
//! under the next sequential id and emits a `NodeJoined` event. Events are
//! hash-chained with SHA-256 over a length-prefixed canonical encoding:
//!
//! ```text
//! hash_i = SHA256(hash_{i-1} || id:u64be || len(owner):u32be || owner || len(node_id):u32be || node_id)
//! hash_{-1} = 32 zero bytes
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type Digest32 = [u8; 32];

pub const GENESIS_HASH: Digest32 = [0u8; 32];

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("node id must not be empty")]
    EmptyNodeId,
    #[error("no node with id {id} (total nodes: {total})")]
    NotFound { id: u64, total: u64 },
    #[error("ledger dump line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UavNodeRecord {
    pub owner: String,
    pub node_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeJoined {
    pub id: u64,
    pub owner: String,
    pub node_id: String,
}

impl NodeJoined {
    pub fn canonical_encoding(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.owner.len() + self.node_id.len());
        out.extend_from_slice(&self.id.to_be_bytes());
        for field in [&self.owner, &self.node_id] {
            let len = u32::try_from(field.len()).expect("field longer than u32::MAX bytes");
            out.extend_from_slice(&len.to_be_bytes());
            out.extend_from_slice(field.as_bytes());
        }
        out
    }
}

pub fn chain_hash(prev: &Digest32, event: &NodeJoined) -> Digest32 {
    let mut hasher = Sha256::new();
    hasher.update(prev);
    hasher.update(event.canonical_encoding());
    let mut out = [0u8; 32];
    out.copy_from_slice(&hasher.finalize());
    out
}

/// One line of the audit dump.
#[derive(Debug, Serialize, Deserialize)]
struct DumpLine {
    id: u64,
    owner: String,
    node_id: String,
    hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LedgerState {
    records: Vec<UavNodeRecord>,
    events: Vec<NodeJoined>,
    chain: Vec<Digest32>,
}

impl LedgerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_nodes(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn events(&self) -> &[NodeJoined] {
        &self.events
    }

    pub fn chain(&self) -> &[Digest32] {
        &self.chain
    }

    pub fn head(&self) -> Digest32 {
        self.chain.last().copied().unwrap_or(GENESIS_HASH)
    }

    /// Register a node on behalf of `caller`; returns the assigned id.
    /// On error the ledger is left untouched.
    pub fn join_bcsfl(&mut self, caller: &str, node_id: &str) -> Result<u64, LedgerError> {
        if node_id.is_empty() {
            return Err(LedgerError::EmptyNodeId);
        }
        let id = self.total_nodes();
        let event = NodeJoined {
            id,
            owner: caller.to_owned(),
            node_id: node_id.to_owned(),
        };
        let hash = chain_hash(&self.head(), &event);
        self.records.push(UavNodeRecord {
            owner: caller.to_owned(),
            node_id: node_id.to_owned(),
        });
        self.events.push(event);
        self.chain.push(hash);
        Ok(id)
    }

    /// Returns `(owner, node_id)`.
    pub fn get_node_by_id(&self, id: u64) -> Result<(&str, &str), LedgerError> {
        let record = usize::try_from(id)
            .ok()
            .and_then(|i| self.records.get(i))
            .ok_or(LedgerError::NotFound {
                id,
                total: self.total_nodes(),
            })?;
        Ok((&record.owner, &record.node_id))
    }

    /// Recompute the chain from genesis and compare with the stored hashes.
    /// Also checks that records agree with their events.
    pub fn verify_chain(&self) -> bool {
        if self.events.len() != self.chain.len() || self.events.len() != self.records.len() {
            return false;
        }
        let mut prev = GENESIS_HASH;
        for (i, (event, stored)) in self.events.iter().zip(&self.chain).enumerate() {
            let record = &self.records[i];
            if event.id != i as u64 || event.owner != record.owner || event.node_id != record.node_id
            {
                return false;
            }
            let hash = chain_hash(&prev, event);
            if &hash != stored {
                return false;
            }
            prev = hash;
        }
        true
    }

    /// Write one JSON object per event: `{"id","owner","node_id","hash"}`.
    pub fn dump<W: Write>(&self, mut out: W) -> Result<(), LedgerError> {
        for (event, hash) in self.events.iter().zip(&self.chain) {
            let line = DumpLine {
                id: event.id,
                owner: event.owner.clone(),
                node_id: event.node_id.clone(),
                hash: hex::encode(hash),
            };
            serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Load a dump as stored. Structure is validated here; hash integrity is
    /// left to [`LedgerState::verify_chain`] so tampering stays observable.
    pub fn load<R: BufRead>(input: R) -> Result<Self, LedgerError> {
        let mut state = Self::new();
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| LedgerError::Malformed {
                line: line_no,
                reason,
            };
            let parsed: DumpLine =
                serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            if parsed.id != state.total_nodes() {
                return Err(malformed(format!(
                    "expected id {}, found {}",
                    state.total_nodes(),
                    parsed.id
                )));
            }
            let bytes = hex::decode(&parsed.hash).map_err(|e| malformed(e.to_string()))?;
            let hash: Digest32 = bytes
                .try_into()
                .map_err(|_| malformed("hash must be 32 bytes".into()))?;
            state.records.push(UavNodeRecord {
                owner: parsed.owner.clone(),
                node_id: parsed.node_id.clone(),
            });
            state.events.push(NodeJoined {
                id: parsed.id,
                owner: parsed.owner,
                node_id: parsed.node_id,
            });
            state.chain.push(hash);
        }
        Ok(state)
    }
}
