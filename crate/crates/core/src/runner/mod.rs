//! Experiment orchestration: deploy, register, cluster, partition, train,
//! and stream one CSV row per round.
//!
//! All randomness is derived from the master seed with
//! [`derive_seed`](crate::seed::derive_seed) under these purposes:
//!
//! | purpose     | parts            | drives                          |
//! |-------------|------------------|---------------------------------|
//! | `dataset`   | (none)           | synthetic sample generation     |
//! | `holdout`   | (none)           | synthetic train/eval split      |
//! | `deploy`    | layout           | UAV positions                   |
//! | `cluster`   | layout           | k-means seeding                 |
//! | `partition` | layout           | data shards                     |
//! | `init`      | layout           | initial model                   |
//! | `drift`     | layout           | per-round drift (keyed by round) |
//! | `round`     | layout, round    | SGD shuffles and aggregators    |

mod config;
mod summary;

pub use config::{ConfigError, DatasetKind, ExperimentConfig, ModelChoice, Origin, Partition, RawConfig, SyntheticParams, KNOWN_KEYS};
pub use summary::{format_summary_text, format_summary_tsv, summarize, SummaryRow};

pub use crate::aggregation::RoundMetrics;

use std::io::Write;
use std::path::PathBuf;

use log::{info, warn};
use thiserror::Error;

use crate::aggregation::{run_round, AggregationError, RoundInputs, RoundState};
use crate::clustering::{cluster_swarm, ClusterLayout, ClusteringConfig, ClusteringError};
use crate::flcore::{
    load_mnist, partition_iid, partition_noniid, split_holdout, DatasetShard, FlError, MnistSplit, ModelVector, Sample,
    SyntheticBlobs, TaskSpec,
};
use crate::ledger::{LedgerError, LedgerState};
use crate::seed::derive_seed;
use crate::topology::{deploy_swarm, Topology, TopologyError};

pub const CSV_HEADER: &str = "layout,round,scheme,k,Q,acc_mean,loss_mean,acc_min,acc_max,msg_intra,msg_inter,msg_total";

/// Environment variable naming the MNIST directory.
pub const DATA_DIR_ENV: &str = "BCSFL_DATA_DIR";

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Fl(#[from] FlError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error("MNIST directory not configured: set `data_dir` or {DATA_DIR_ENV}")]
    NoDataDir,
    #[error("{path}:{line}: {message}")]
    Csv { path: String, line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RunnerError {
    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Task, training pool and evaluation set, fixed before partitioning.
#[derive(Debug, Clone)]
pub struct DataBundle {
    pub task: TaskSpec,
    pub train: Vec<Sample>,
    pub eval: Vec<Sample>,
}

pub fn load_data(config: &ExperimentConfig) -> Result<DataBundle, RunnerError> {
    let (train, eval, input_dim, classes) = match config.dataset {
        DatasetKind::Synthetic => {
            let p = &config.synthetic;
            let blobs = SyntheticBlobs {
                num_classes: p.classes,
                dim: p.dim,
                samples_per_class: p.samples_per_class,
                noise_std: p.noise_std,
                means: None,
                separation: p.separation * p.noise_std,
                seed: derive_seed(config.master_seed, "dataset", &[]),
            };
            let (train, eval) = split_holdout(
                blobs.generate(),
                config.eval_fraction,
                derive_seed(config.master_seed, "holdout", &[]),
            );
            (train, eval, p.dim, p.classes)
        }
        DatasetKind::Mnist => {
            let dir = config
                .data_dir
                .clone()
                .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
                .ok_or(RunnerError::NoDataDir)?;
            let train = load_mnist(&dir, MnistSplit::Train, config.train_limit)?;
            let eval = load_mnist(&dir, MnistSplit::Test, config.test_limit)?;
            let dim = train.first().map_or(784, |s| s.features.len());
            (train, eval, dim, 10)
        }
    };
    let task = match config.model {
        ModelChoice::Logistic => TaskSpec::logistic(input_dim, classes),
        ModelChoice::Mlp { hidden } => TaskSpec::mlp(input_dim, hidden, classes),
    };
    task.check_labels(&train)?;
    task.check_labels(&eval)?;
    Ok(DataBundle { task, train, eval })
}

/// A deployed, registered and clustered layout with its data shards.
#[derive(Debug, Clone)]
pub struct LayoutSetup {
    pub index: usize,
    pub topology: Topology,
    pub layout: ClusterLayout,
    pub ledger: LedgerState,
    pub shards: Vec<DatasetShard>,
    pub init_model: ModelVector,
}

/// Why a layout could not be set up.
#[derive(Debug, Error)]
pub enum SetupError {
    /// The layout is skipped; the experiment continues.
    #[error("layout {index} skipped: {reason}")]
    Skipped { index: usize, reason: String },
    #[error(transparent)]
    Fatal(#[from] RunnerError),
}

pub fn setup_layout(config: &ExperimentConfig, data: &DataBundle, index: usize) -> Result<LayoutSetup, SetupError> {
    let seed = config.master_seed;
    let idx = index as u64;
    let skip = |reason: String| SetupError::Skipped { index, reason };
    let topology = match deploy_swarm(&config.swarm(derive_seed(seed, "deploy", &[idx]))) {
        Ok(t) => t,
        Err(e @ TopologyError::InfeasibleDensity { .. }) => return Err(skip(e.to_string())),
        Err(e) => return Err(RunnerError::from(e).into()),
    };

    let mut ledger = LedgerState::new();
    for u in 0..topology.num_uavs() {
        ledger
            .join_bcsfl(&format!("operator-{index}"), &format!("uav-{u}"))
            .map_err(RunnerError::from)?;
    }

    let mut clustering = ClusteringConfig::new(derive_seed(seed, "cluster", &[idx]));
    clustering.max_iters = config.kmeans_iters;
    let layout = match cluster_swarm(&topology, &clustering) {
        Ok(l) => l,
        Err(e @ ClusteringError::Unclusterable { .. }) => return Err(skip(e.to_string())),
        Err(e) => return Err(RunnerError::from(e).into()),
    };

    let trainers = layout.training_uavs();
    let part_seed = derive_seed(seed, "partition", &[idx]);
    let shards = match config.partition {
        crate::runner::Partition::Iid => partition_iid(&data.train, &trainers, part_seed),
        crate::runner::Partition::NonIid { shards_per_uav } => {
            partition_noniid(&data.train, &trainers, shards_per_uav, part_seed)
        }
    }
    .map_err(RunnerError::from)?;
    let init_model = data.task.init_model(derive_seed(seed, "init", &[idx]));
    Ok(LayoutSetup {
        index,
        topology,
        layout,
        ledger,
        shards,
        init_model,
    })
}

/// Training state of one layout, advanced a round at a time.
pub struct LayoutRun<'a> {
    config: &'a ExperimentConfig,
    data: &'a DataBundle,
    setup: &'a LayoutSetup,
    state: RoundState,
}

impl<'a> LayoutRun<'a> {
    pub fn new(config: &'a ExperimentConfig, data: &'a DataBundle, setup: &'a LayoutSetup) -> Self {
        let state = RoundState::initial(&setup.layout, config.scheme, setup.init_model.clone());
        Self {
            config,
            data,
            setup,
            state,
        }
    }

    pub fn state(&self) -> &RoundState {
        &self.state
    }

    /// Drift the swarm and run the next round.
    pub fn step(&mut self) -> Result<RoundMetrics, RunnerError> {
        let round = self.state.round + 1;
        let idx = self.setup.index as u64;
        let seed = self.config.master_seed;
        let topology = self
            .setup
            .topology
            .apply_drift(round, derive_seed(seed, "drift", &[idx]));
        let inputs = RoundInputs {
            layout: &self.setup.layout,
            topology: &topology,
            task: &self.data.task,
            shards: &self.setup.shards,
            eval_set: &self.data.eval,
            hyper: self.config.hyper,
        };
        let (next, mut metrics) = run_round(&inputs, &self.state, derive_seed(seed, "round", &[idx, round]))?;
        metrics.layout = self.setup.index;
        self.state = next;
        Ok(metrics)
    }
}

pub fn csv_row(m: &RoundMetrics) -> String {
    format!(
        "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{}",
        m.layout,
        m.round,
        m.scheme.name(),
        m.scheme.k().map(|k| k.to_string()).unwrap_or_default(),
        m.num_clusters,
        m.acc_mean,
        m.loss_mean,
        m.acc_min,
        m.acc_max,
        m.messages.intra_cluster,
        m.messages.inter_cluster,
        m.messages.total(),
    )
}

#[derive(Debug, Clone)]
pub struct LayoutReport {
    pub index: usize,
    pub num_clusters: usize,
    pub ledger: LedgerState,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub metrics: Vec<RoundMetrics>,
    pub layouts: Vec<LayoutReport>,
    pub skipped: Vec<(usize, String)>,
}

/// Run every layout in order, writing the CSV header and one row per round.
pub fn run_experiment<W: Write>(config: &ExperimentConfig, mut out: W) -> Result<ExperimentReport, RunnerError> {
    let data = load_data(config)?;
    writeln!(out, "{CSV_HEADER}")?;
    let mut report = ExperimentReport::default();
    for index in 0..config.layouts {
        let setup = match setup_layout(config, &data, index) {
            Ok(s) => s,
            Err(SetupError::Skipped { index, reason }) => {
                warn!("layout {index} skipped: {reason}");
                report.skipped.push((index, reason));
                continue;
            }
            Err(SetupError::Fatal(e)) => return Err(e),
        };
        info!(
            "layout {index}: {} UAVs, Q = {}, {} training UAVs",
            setup.topology.num_uavs(),
            setup.layout.num_clusters(),
            setup.shards.len()
        );
        let mut run = LayoutRun::new(config, &data, &setup);
        let mut rows = String::new();
        for _ in 0..config.rounds {
            let m = run.step()?;
            rows.push_str(&csv_row(&m));
            rows.push('\n');
            report.metrics.push(m);
        }
        out.write_all(rows.as_bytes())?;
        report.layouts.push(LayoutReport {
            index,
            num_clusters: setup.layout.num_clusters(),
            ledger: setup.ledger,
        });
    }
    out.flush()?;
    Ok(report)
}
