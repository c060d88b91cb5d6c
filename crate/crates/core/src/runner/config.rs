//! Flat `key = value` experiment configuration with flag overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::aggregation::{Hyperparams, Scheme, SchemeKind};
use crate::clustering::DEFAULT_KMEANS_ITERS;
use crate::topology::SwarmConfig;

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    At { origin: Origin, message: String },
    #[error("missing field `{field}`: {reason}")]
    Missing { field: &'static str, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

pub const KNOWN_KEYS: &[&str] = &[
    "uavs",
    "area_width",
    "area_height",
    "comm_range",
    "max_drift",
    "scheme",
    "k",
    "dataset",
    "partition",
    "shards_per_uav",
    "model",
    "hidden",
    "lr",
    "batch_size",
    "rounds",
    "layouts",
    "seed",
    "out",
    "data_dir",
    "train_limit",
    "test_limit",
    "eval_fraction",
    "classes",
    "dim",
    "samples_per_class",
    "separation",
    "noise_std",
    "data_weighted_fca",
    "kmeans_iters",
];

/// Raw settings keyed by name, each remembering its origin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

impl RawConfig {
    /// Parse `key = value` lines. `#` starts a comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let origin = Origin::Line(idx + 1);
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::At {
                    origin,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::At {
                    origin,
                    message: format!("unknown key `{key}`"),
                });
            }
            if let Some((_, Origin::Line(first))) = raw.entries.get(key) {
                return Err(ConfigError::At {
                    origin,
                    message: format!("duplicate key `{key}` (first set on line {first})"),
                });
            }
            raw.entries
                .insert(key.to_owned(), (value.trim().to_owned(), origin));
        }
        Ok(raw)
    }

    /// Set or replace a value from the command line.
    pub fn set_flag(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::At {
                origin: Origin::Flag,
                message: format!("unknown key `{key}`"),
            });
        }
        self.entries
            .insert(key.to_owned(), (value.into(), Origin::Flag));
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((value, origin)) => value.parse().map(Some).map_err(|e| ConfigError::At {
                origin: *origin,
                message: format!("invalid value `{value}` for `{key}`: {e}"),
            }),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn check<T>(&self, key: &str, value: T, ok: bool, need: &str) -> Result<T, ConfigError> {
        if ok {
            return Ok(value);
        }
        Err(match self.entries.get(key) {
            Some((raw, origin)) => ConfigError::At {
                origin: *origin,
                message: format!("`{key}` = {raw}: {need}"),
            },
            None => ConfigError::Invalid(format!("`{key}` {need}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Synthetic,
    Mnist,
}

impl FromStr for DatasetKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synthetic" => Ok(Self::Synthetic),
            "mnist" => Ok(Self::Mnist),
            other => Err(format!("unknown dataset `{other}` (expected synthetic or mnist)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Iid,
    NonIid { shards_per_uav: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Logistic,
    Mlp { hidden: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub classes: usize,
    pub dim: usize,
    pub samples_per_class: usize,
    pub separation: f64,
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub num_uavs: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub comm_range: f64,
    pub max_drift: f64,
    pub scheme: Scheme,
    pub dataset: DatasetKind,
    pub partition: Partition,
    pub model: ModelChoice,
    pub hyper: Hyperparams,
    pub rounds: u64,
    pub layouts: usize,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    /// Held-out share of the synthetic dataset.
    pub eval_fraction: f64,
    pub synthetic: SyntheticParams,
    pub kmeans_iters: usize,
}

impl ExperimentConfig {
    /// Swarm parameters for one layout; the seed is filled by the runner.
    pub fn swarm(&self, rng_seed: u64) -> SwarmConfig {
        SwarmConfig {
            num_uavs: self.num_uavs,
            area_width: self.area_width,
            area_height: self.area_height,
            comm_range: self.comm_range,
            max_drift: self.max_drift,
            rng_seed,
        }
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let scheme_kind: SchemeKind = raw.get_or("scheme", SchemeKind::Fca)?;
        let k: Option<usize> = raw.get("k")?;
        let scheme = match (scheme_kind, k) {
            (SchemeKind::Kha, Some(k)) => Scheme::Kha {
                k: raw.check("k", k, k >= 1, "must be at least 1")?,
            },
            (SchemeKind::Kha, None) => {
                return Err(ConfigError::Missing {
                    field: "k",
                    reason: "required when scheme = kha".into(),
                })
            }
            (_, Some(_)) => {
                let (_, origin) = raw.entries["k"];
                return Err(ConfigError::At {
                    origin,
                    message: "`k` is only valid with scheme = kha".into(),
                });
            }
            (SchemeKind::Fca, None) => Scheme::Fca,
            (SchemeKind::Conventional, None) => Scheme::Conventional,
        };

        let dataset: DatasetKind = raw.get_or("dataset", DatasetKind::Synthetic)?;
        let partition = match raw.get_or::<String>("partition", "iid".into())?.as_str() {
            "iid" => Partition::Iid,
            "noniid" => {
                let s: usize = raw.get_or("shards_per_uav", 2)?;
                Partition::NonIid {
                    shards_per_uav: raw.check("shards_per_uav", s, s >= 1, "must be at least 1")?,
                }
            }
            other => {
                let (_, origin) = raw.entries["partition"];
                return Err(ConfigError::At {
                    origin,
                    message: format!("unknown partition `{other}` (expected iid or noniid)"),
                });
            }
        };
        let default_model = match dataset {
            DatasetKind::Synthetic => "logistic",
            DatasetKind::Mnist => "mlp",
        };
        let hidden: usize = raw.get_or("hidden", 64)?;
        let model = match raw.get_or::<String>("model", default_model.into())?.as_str() {
            "logistic" => ModelChoice::Logistic,
            "mlp" => ModelChoice::Mlp {
                hidden: raw.check("hidden", hidden, hidden >= 1, "must be at least 1")?,
            },
            other => {
                let (_, origin) = raw.entries["model"];
                return Err(ConfigError::At {
                    origin,
                    message: format!("unknown model `{other}` (expected logistic or mlp)"),
                });
            }
        };
        let default_lr = match dataset {
            DatasetKind::Synthetic => 0.05,
            DatasetKind::Mnist => 0.035,
        };
        let lr: f64 = raw.get_or("lr", default_lr)?;
        let batch_size: usize = raw.get_or("batch_size", 10)?;
        let rounds: u64 = raw.get_or("rounds", 50)?;
        let layouts: usize = raw.get_or("layouts", 1)?;
        let num_uavs: usize = raw.get_or("uavs", 200)?;
        let eval_fraction: f64 = raw.get_or("eval_fraction", 0.2)?;
        let kmeans_iters: usize = raw.get_or("kmeans_iters", DEFAULT_KMEANS_ITERS)?;

        let cfg = ExperimentConfig {
            num_uavs: raw.check("uavs", num_uavs, num_uavs >= 2, "need at least 2 UAVs")?,
            area_width: raw.get_or("area_width", 1000.0)?,
            area_height: raw.get_or("area_height", 1000.0)?,
            comm_range: raw.get_or("comm_range", 150.0)?,
            max_drift: raw.get_or("max_drift", 5.0)?,
            scheme,
            dataset,
            partition,
            model,
            hyper: Hyperparams {
                lr: raw.check("lr", lr, lr > 0.0 && lr.is_finite(), "must be positive")?,
                batch_size: raw.check("batch_size", batch_size, batch_size >= 1, "must be at least 1")?,
                data_weighted_fca: raw.get_or("data_weighted_fca", false)?,
            },
            rounds: raw.check("rounds", rounds, rounds >= 1, "must be at least 1")?,
            layouts: raw.check("layouts", layouts, layouts >= 1, "must be at least 1")?,
            master_seed: raw.get_or("seed", 42)?,
            out: raw.get::<String>("out")?.map(PathBuf::from),
            data_dir: raw.get::<String>("data_dir")?.map(PathBuf::from),
            train_limit: raw.get("train_limit")?,
            test_limit: raw.get("test_limit")?,
            eval_fraction: raw.check(
                "eval_fraction",
                eval_fraction,
                (0.0..1.0).contains(&eval_fraction) && eval_fraction > 0.0,
                "must be in (0, 1)",
            )?,
            synthetic: SyntheticParams {
                classes: raw.get_or("classes", 3)?,
                dim: raw.get_or("dim", 20)?,
                samples_per_class: raw.get_or("samples_per_class", 600)?,
                separation: raw.get_or("separation", 3.0)?,
                noise_std: raw.get_or("noise_std", 1.0)?,
            },
            kmeans_iters: raw.check("kmeans_iters", kmeans_iters, kmeans_iters >= 1, "must be at least 1")?,
        };
        cfg.swarm(0)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let syn = &cfg.synthetic;
        if cfg.dataset == DatasetKind::Synthetic
            && (syn.classes < 2 || syn.dim < syn.classes || syn.samples_per_class == 0 || !(syn.noise_std > 0.0))
        {
            return Err(ConfigError::Invalid(format!(
                "synthetic data needs classes >= 2, dim >= classes, samples_per_class >= 1 and noise_std > 0 \
                 (got classes = {}, dim = {}, samples_per_class = {}, noise_std = {})",
                syn.classes, syn.dim, syn.samples_per_class, syn.noise_std
            )));
        }
        Ok(cfg)
    }
}
