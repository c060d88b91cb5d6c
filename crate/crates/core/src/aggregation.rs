//! Inter-cluster aggregation and the per-round training workflow.
//!
//! A round runs five steps. (1) Each CH hands its distributed model to its
//! training members. (2) Members run one epoch of local SGD. (3) Each CH
//! averages its members' models weighted by shard size. (4) CHs combine
//! cluster models by FCA (one uniform average over all clusters) or kHA
//! (uniform average over the k-hop CH neighborhood). (5) Metrics are recorded.
//! The conventional baseline skips clustering and averages every training
//! UAV at one randomly chosen aggregator.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::clustering::ClusterLayout;
use crate::flcore::{evaluate, fedavg, local_sgd, size_weights, DatasetShard, FlError, ModelVector, Sample, TaskSpec};
use crate::graph::Graph;
use crate::overhead::{count_round, MessageCount, OverheadError};
use crate::seed::{derive_seed, rng_from_seed};
use crate::topology::{Topology, UavId};

#[derive(Debug, Error)]
pub enum AggregationError {
    #[error(transparent)]
    Fl(#[from] FlError),
    #[error(transparent)]
    Overhead(#[from] OverheadError),
    #[error("training UAV {0} has no data shard")]
    MissingShard(UavId),
    #[error("no model for training UAV {0}")]
    MissingModel(UavId),
    #[error("no training UAVs in the swarm")]
    NoTrainingUavs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Scheme {
    Conventional,
    Fca,
    Kha { k: usize },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Conventional => "conventional",
            Scheme::Fca => "fca",
            Scheme::Kha { .. } => "kha",
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Scheme::Kha { k } => Some(*k),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Kha { k } => write!(f, "kha(k={k})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Conventional,
    Fca,
    Kha,
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conventional" => Ok(Self::Conventional),
            "fca" => Ok(Self::Fca),
            "kha" => Ok(Self::Kha),
            other => Err(format!("unknown scheme `{other}` (expected conventional, fca or kha)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub lr: f64,
    pub batch_size: usize,
    /// Weight cluster models by cluster data size in FCA instead of 1/Q.
    pub data_weighted_fca: bool,
}

impl Hyperparams {
    pub fn new(lr: f64, batch_size: usize) -> Self {
        Self {
            lr,
            batch_size,
            data_weighted_fca: false,
        }
    }
}

/// Uniform choice of an aggregator in `0..n`, shared by training and
/// message counting so both see the same aggregator.
pub fn pick_aggregator(seed: u64, n: usize) -> usize {
    rng_from_seed(derive_seed(seed, "aggregator", &[])).random_range(0..n)
}

/// Models carried between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    /// Index of the last completed round; 0 before training.
    pub round: u64,
    pub scheme: Scheme,
    /// Latest local model of each training UAV.
    pub uav_models: BTreeMap<UavId, ModelVector>,
    /// Intra-cluster aggregate of each cluster.
    pub cluster_models: Vec<ModelVector>,
    /// Model each CH hands to its members at the start of the next round.
    pub distributed: Vec<ModelVector>,
}

impl RoundState {
    pub fn initial(layout: &ClusterLayout, scheme: Scheme, model: ModelVector) -> Self {
        let q = layout.num_clusters();
        Self {
            round: 0,
            scheme,
            uav_models: BTreeMap::new(),
            cluster_models: vec![model.clone(); q],
            distributed: vec![model; q],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub layout: usize,
    pub round: u64,
    pub scheme: Scheme,
    pub num_clusters: usize,
    pub acc_mean: f64,
    pub loss_mean: f64,
    pub acc_min: f64,
    pub acc_max: f64,
    pub messages: MessageCount,
    /// Clusters without training members; they carried their model forward.
    pub stale_clusters: Vec<usize>,
    /// Accuracy of each CH's distributed model.
    pub per_ch_accuracy: Vec<f64>,
}

/// Everything a round reads but does not change.
#[derive(Debug, Clone, Copy)]
pub struct RoundInputs<'a> {
    pub layout: &'a ClusterLayout,
    /// Topology at this round, after drift.
    pub topology: &'a Topology,
    pub task: &'a TaskSpec,
    pub shards: &'a [DatasetShard],
    pub eval_set: &'a [Sample],
    pub hyper: Hyperparams,
}

/// Sum in the given order, then divide by the count.
pub fn uniform_average(models: &[&ModelVector]) -> Result<ModelVector, FlError> {
    let first = models.first().ok_or(FlError::NoModels)?;
    let mut out = ModelVector::zeros(first.dim());
    for m in models {
        if m.dim() != first.dim() {
            return Err(FlError::DimensionMismatch {
                expected: first.dim(),
                found: m.dim(),
            });
        }
        out.axpy(1.0, m);
    }
    let inv = models.len() as f64;
    out.0.iter_mut().for_each(|w| *w /= inv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntraOutcome {
    pub cluster_models: Vec<ModelVector>,
    pub stale_clusters: Vec<usize>,
}

/// Size-weighted FedAvg of each cluster's training members. Clusters with
/// no training members keep `previous[q]`.
pub fn intra_cluster_aggregate(
    layout: &ClusterLayout,
    uav_models: &BTreeMap<UavId, ModelVector>,
    shard_sizes: &BTreeMap<UavId, usize>,
    previous: &[ModelVector],
) -> Result<IntraOutcome, AggregationError> {
    let mut cluster_models = Vec::with_capacity(layout.num_clusters());
    let mut stale_clusters = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for q in 0..layout.num_clusters() {
        let members = layout.training_members(q);
        if members.is_empty() {
            cluster_models.push(previous[q].clone());
            stale_clusters.push(q);
            continue;
        }
        let mut models = Vec::with_capacity(members.len());
        let mut sizes = Vec::with_capacity(members.len());
        for &u in &members {
            models.push(uav_models.get(&u).ok_or(AggregationError::MissingModel(u))?);
            sizes.push(*shard_sizes.get(&u).ok_or(AggregationError::MissingShard(u))?);
        }
        cluster_models.push(fedavg(&models, &size_weights(&sizes))?);
    }
    Ok(IntraOutcome {
        cluster_models,
        stale_clusters,
    })
}

/// Uniform average of all cluster models at a randomly selected CH.
/// Returns the global model and the aggregator's cluster index.
pub fn fca(cluster_models: &[ModelVector], seed: u64) -> Result<(ModelVector, usize), FlError> {
    let refs: Vec<&ModelVector> = cluster_models.iter().collect();
    let global = uniform_average(&refs)?;
    Ok((global, pick_aggregator(seed, cluster_models.len())))
}

/// FCA variant weighting cluster `q` by its share of training data.
pub fn fca_data_weighted(
    cluster_models: &[ModelVector],
    cluster_sizes: &[usize],
    seed: u64,
) -> Result<(ModelVector, usize), FlError> {
    let refs: Vec<&ModelVector> = cluster_models.iter().collect();
    let global = fedavg(&refs, &size_weights(cluster_sizes))?;
    Ok((global, pick_aggregator(seed, cluster_models.len())))
}

/// Each CH averages the cluster models of every CH within `k` hops,
/// itself included, in ascending cluster order.
pub fn kha(ch_graph: &Graph, cluster_models: &[ModelVector], k: usize) -> Result<Vec<ModelVector>, FlError> {
    assert!(k >= 1, "k must be at least 1");
    (0..ch_graph.len())
        .map(|c| {
            let group: Vec<&ModelVector> = ch_graph
                .k_hop_neighborhood(c, k)
                .into_iter()
                .map(|q| &cluster_models[q])
                .collect();
            uniform_average(&group)
        })
        .collect()
}

/// Run one training round and report its metrics.
pub fn run_round(
    inputs: &RoundInputs<'_>,
    state: &RoundState,
    seed: u64,
) -> Result<(RoundState, RoundMetrics), AggregationError> {
    let layout = inputs.layout;
    let hyper = inputs.hyper;
    let shards: BTreeMap<UavId, &DatasetShard> = inputs.shards.iter().map(|s| (s.owner, s)).collect();
    let training = layout.training_uavs();
    if training.is_empty() && state.scheme == Scheme::Conventional {
        return Err(AggregationError::NoTrainingUavs);
    }

    // Steps 1-2: start from the CH's model and train locally.
    let mut uav_models = BTreeMap::new();
    let mut shard_sizes = BTreeMap::new();
    for &u in &training {
        let shard = shards.get(&u).ok_or(AggregationError::MissingShard(u))?;
        let start = &state.distributed[layout.cluster_of(u)];
        let sgd_seed = derive_seed(seed, "sgd", &[u as u64]);
        let trained = local_sgd(inputs.task, start, &shard.samples, hyper.lr, hyper.batch_size, sgd_seed)?;
        uav_models.insert(u, trained);
        shard_sizes.insert(u, shard.len());
    }

    // Step 3.
    let intra = intra_cluster_aggregate(layout, &uav_models, &shard_sizes, &state.distributed)?;

    // Step 4.
    let q = layout.num_clusters();
    let distributed = match state.scheme {
        Scheme::Fca => {
            let (global, _) = if hyper.data_weighted_fca {
                let sizes: Vec<usize> = (0..q)
                    .map(|c| layout.training_members(c).iter().map(|u| shard_sizes[u]).sum())
                    .collect();
                fca_data_weighted(&intra.cluster_models, &sizes, seed)?
            } else {
                fca(&intra.cluster_models, seed)?
            };
            vec![global; q]
        }
        Scheme::Kha { k } => kha(&layout.ch_graph, &intra.cluster_models, k)?,
        Scheme::Conventional => {
            let models: Vec<&ModelVector> = uav_models.values().collect();
            let sizes: Vec<usize> = shard_sizes.values().copied().collect();
            let global = fedavg(&models, &size_weights(&sizes))?;
            vec![global; q]
        }
    };

    // Step 5.
    let messages = count_round(state.scheme, inputs.topology, layout, seed)?;
    let per_ch = evaluate_distributed(inputs.task, &distributed, inputs.eval_set);
    let per_ch_accuracy: Vec<f64> = per_ch.iter().map(|(a, _)| *a).collect();
    let n = q as f64;
    let metrics = RoundMetrics {
        layout: 0,
        round: state.round + 1,
        scheme: state.scheme,
        num_clusters: q,
        acc_mean: per_ch_accuracy.iter().sum::<f64>() / n,
        loss_mean: per_ch.iter().map(|(_, l)| l).sum::<f64>() / n,
        acc_min: per_ch_accuracy.iter().copied().fold(f64::INFINITY, f64::min),
        acc_max: per_ch_accuracy.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        messages,
        stale_clusters: intra.stale_clusters,
        per_ch_accuracy,
    };
    let next = RoundState {
        round: state.round + 1,
        scheme: state.scheme,
        uav_models,
        cluster_models: intra.cluster_models,
        distributed,
    };
    Ok((next, metrics))
}

/// Evaluate each CH's model, reusing results for identical consecutive models.
fn evaluate_distributed(task: &TaskSpec, models: &[ModelVector], eval_set: &[Sample]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(models.len());
    for (i, m) in models.iter().enumerate() {
        if i > 0 && models[i - 1] == *m {
            out.push(out[i - 1]);
        } else {
            out.push(evaluate(task, m, eval_set));
        }
    }
    out
}
