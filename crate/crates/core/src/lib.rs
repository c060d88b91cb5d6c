//! Simulator for blockchain-registered, clustered federated learning over
//! UAV swarms.
//!
//! The pipeline is: deploy a connected swarm ([`topology`]), split it into
//! cluster-head groups ([`clustering`]), register every UAV on an
//! append-only ledger ([`ledger`]), train locally and average within
//! clusters ([`flcore`]), combine clusters by FCA or k-hop aggregation
//! ([`aggregation`]), count message exchanges ([`overhead`]), and drive it
//! all from a config file ([`runner`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod clustering;
pub mod flcore;
pub mod graph;
pub mod ledger;
pub mod overhead;
pub mod runner;
pub mod seed;
pub mod topology;

pub use aggregation::{Hyperparams, RoundMetrics, RoundState, Scheme};
pub use clustering::{cluster_swarm, ClusterLayout, ClusteringConfig};
pub use flcore::{DatasetShard, ModelVector, Sample, TaskSpec};
pub use graph::Graph;
pub use ledger::LedgerState;
pub use overhead::MessageCount;
pub use runner::{run_experiment, ExperimentConfig, RunnerError};
pub use topology::{deploy_swarm, Position, SwarmConfig, Topology, UavId};
