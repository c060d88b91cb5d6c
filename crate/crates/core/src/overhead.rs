//! Per-round message accounting.
//!
//! One exchange is one model copy crossing one communication-graph edge.
//! Uploads and downloads both count, routes are shortest paths.

use serde::Serialize;
use thiserror::Error;

use crate::aggregation::{pick_aggregator, Scheme};
use crate::clustering::ClusterLayout;
use crate::graph::Graph;
use crate::topology::{Topology, UavId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OverheadError {
    #[error("UAV {from} cannot reach UAV {to} over the communication graph")]
    Unreachable { from: UavId, to: UavId },
    #[error("CH of cluster {from} cannot reach CH of cluster {to} over the CH graph")]
    ChUnreachable { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MessageCount {
    pub intra_cluster: u64,
    pub inter_cluster: u64,
}

impl MessageCount {
    pub fn total(&self) -> u64 {
        self.intra_cluster + self.inter_cluster
    }
}

/// Every UAV uploads to `aggregator` and receives the global model back.
pub fn count_conventional(topology: &Topology, aggregator: UavId) -> Result<MessageCount, OverheadError> {
    let hops = topology.graph().bfs_hops(aggregator);
    let mut inter = 0u64;
    for (u, h) in hops.iter().enumerate() {
        let h = h.ok_or(OverheadError::Unreachable { from: u, to: aggregator })?;
        inter += 2 * h as u64;
    }
    Ok(MessageCount {
        intra_cluster: 0,
        inter_cluster: inter,
    })
}

/// Round trips between each training member and its CH, routed over the
/// full communication graph.
pub fn count_intra(topology: &Topology, layout: &ClusterLayout) -> Result<u64, OverheadError> {
    let mut total = 0u64;
    for (cluster, &head) in layout.heads.iter().enumerate() {
        let hops = topology.graph().bfs_hops(head);
        for u in layout.training_members(cluster) {
            let h = hops[u].ok_or(OverheadError::Unreachable { from: u, to: head })?;
            total += 2 * h as u64;
        }
    }
    Ok(total)
}

/// Every CH sends its cluster model to the aggregator CH and gets the
/// global model back.
pub fn count_fca(ch_graph: &Graph, aggregator: usize) -> Result<u64, OverheadError> {
    let hops = ch_graph.bfs_hops(aggregator);
    let mut total = 0u64;
    for (c, h) in hops.iter().enumerate() {
        let h = h.ok_or(OverheadError::ChUnreachable { from: c, to: aggregator })?;
        total += 2 * h as u64;
    }
    Ok(total)
}

/// Each CH floods its model along a BFS tree truncated at depth `k`: one
/// delivery per CH reached, i.e. `sum_c (|N_k(c)| - 1)`.
pub fn count_kha(ch_graph: &Graph, k: usize) -> u64 {
    assert!(k >= 1, "k must be at least 1");
    (0..ch_graph.len())
        .map(|c| ch_graph.k_hop_neighborhood(c, k).len() as u64 - 1)
        .sum()
}

/// Messages of one training round under `scheme`. Aggregators are drawn
/// from `seed` exactly as the training round draws them.
pub fn count_round(
    scheme: Scheme,
    topology: &Topology,
    layout: &ClusterLayout,
    seed: u64,
) -> Result<MessageCount, OverheadError> {
    match scheme {
        Scheme::Conventional => {
            count_conventional(topology, pick_aggregator(seed, topology.num_uavs()))
        }
        Scheme::Fca => Ok(MessageCount {
            intra_cluster: count_intra(topology, layout)?,
            inter_cluster: count_fca(&layout.ch_graph, pick_aggregator(seed, layout.num_clusters()))?,
        }),
        Scheme::Kha { k } => Ok(MessageCount {
            intra_cluster: count_intra(topology, layout)?,
            inter_cluster: count_kha(&layout.ch_graph, k),
        }),
    }
}
