//! Local training and intra-cluster averaging.
//!
//! Models are flat `f64` parameter vectors. Two task kinds are supported:
//! multinomial logistic regression and a one-hidden-layer tanh MLP, both
//! trained with softmax cross-entropy.

mod data;
mod model;
mod partition;

pub use data::{load_mnist, read_idx_images, read_idx_labels, split_holdout, MnistSplit, SyntheticBlobs};
pub use model::{ModelKind, TaskSpec};
pub use partition::{partition_iid, partition_noniid};

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::seed::rng_from_seed;
use crate::topology::UavId;

/// Tolerance on the sum of an aggregation weight group.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FlError {
    #[error("shard is empty")]
    EmptyShard,
    #[error("aggregation weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} models but {1} weights")]
    CountMismatch(usize, usize),
    #[error("nothing to aggregate")]
    NoModels,
    #[error("model has non-finite entries after {0}")]
    NonFinite(&'static str),
    #[error("dataset of {samples} samples cannot be split into {needed} shards")]
    DatasetTooSmall { samples: usize, needed: usize },
    #[error("{path}: {reason}")]
    Idx { path: String, reason: String },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelVector(pub Vec<f64>);

impl ModelVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &ModelVector) {
        for (w, g) in self.0.iter_mut().zip(&other.0) {
            *w += alpha * g;
        }
    }

    pub fn max_abs_diff(&self, other: &ModelVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetShard {
    pub owner: UavId,
    pub samples: Vec<Sample>,
}

impl DatasetShard {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Mean cross-entropy over a shard.
pub fn local_objective(task: &TaskSpec, model: &ModelVector, samples: &[Sample]) -> Result<f64, FlError> {
    if samples.is_empty() {
        return Err(FlError::EmptyShard);
    }
    task.check_model(model)?;
    let mut scratch = task.scratch();
    let total: f64 = samples
        .iter()
        .map(|s| task.sample_loss(model, s, &mut scratch))
        .sum();
    Ok(total / samples.len() as f64)
}

/// Weighted sum of local objectives, `sum_u weight_u * O_u(model)`.
pub fn global_objective(
    task: &TaskSpec,
    model: &ModelVector,
    shards: &[DatasetShard],
    weights: &[f64],
) -> Result<f64, FlError> {
    if shards.len() != weights.len() {
        return Err(FlError::CountMismatch(shards.len(), weights.len()));
    }
    check_weights(weights)?;
    let mut total = 0.0;
    for (shard, w) in shards.iter().zip(weights) {
        total += w * local_objective(task, model, &shard.samples)?;
    }
    Ok(total)
}

/// Gradient of the mean loss over `batch`.
pub fn gradient(task: &TaskSpec, model: &ModelVector, batch: &[Sample]) -> ModelVector {
    assert!(!batch.is_empty(), "gradient of an empty batch");
    let mut grad = ModelVector::zeros(task.num_params());
    let mut scratch = task.scratch();
    for s in batch {
        task.accumulate_gradient(model, s, &mut grad, &mut scratch);
    }
    let inv = 1.0 / batch.len() as f64;
    grad.0.iter_mut().for_each(|g| *g *= inv);
    grad
}

/// One epoch of mini-batch SGD over a seeded shuffle of `samples`. The last
/// short batch is kept.
pub fn local_sgd(
    task: &TaskSpec,
    model: &ModelVector,
    samples: &[Sample],
    lr: f64,
    batch_size: usize,
    seed: u64,
) -> Result<ModelVector, FlError> {
    assert!(batch_size >= 1, "batch size must be positive");
    task.check_model(model)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut weights = model.clone();
    let mut grad = ModelVector::zeros(task.num_params());
    let mut scratch = task.scratch();
    for batch in order.chunks(batch_size) {
        grad.0.iter_mut().for_each(|g| *g = 0.0);
        for &i in batch {
            task.accumulate_gradient(&weights, &samples[i], &mut grad, &mut scratch);
        }
        weights.axpy(-lr / batch.len() as f64, &grad);
    }
    if !weights.is_finite() {
        return Err(FlError::NonFinite("local SGD"));
    }
    Ok(weights)
}

/// Weights proportional to sizes.
pub fn size_weights(sizes: &[usize]) -> Vec<f64> {
    let total: usize = sizes.iter().sum();
    sizes.iter().map(|&s| s as f64 / total as f64).collect()
}

pub fn check_weights(weights: &[f64]) -> Result<(), FlError> {
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL || weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(FlError::WeightSum { sum });
    }
    Ok(())
}

/// Coordinate-wise weighted average, summed in input order.
pub fn fedavg(models: &[&ModelVector], weights: &[f64]) -> Result<ModelVector, FlError> {
    let first = models.first().ok_or(FlError::NoModels)?;
    if models.len() != weights.len() {
        return Err(FlError::CountMismatch(models.len(), weights.len()));
    }
    check_weights(weights)?;
    let dim = first.dim();
    let mut out = ModelVector::zeros(dim);
    for (m, &w) in models.iter().zip(weights) {
        if m.dim() != dim {
            return Err(FlError::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
        out.axpy(w, m);
    }
    Ok(out)
}

/// Top-1 accuracy and mean loss. Argmax ties resolve to the lowest class.
pub fn evaluate(task: &TaskSpec, model: &ModelVector, samples: &[Sample]) -> (f64, f64) {
    assert!(!samples.is_empty(), "evaluation set is empty");
    let mut scratch = task.scratch();
    let mut correct = 0usize;
    let mut loss = 0.0;
    for s in samples {
        let (pred, l) = task.predict_with_loss(model, s, &mut scratch);
        loss += l;
        if pred == s.label {
            correct += 1;
        }
    }
    let n = samples.len() as f64;
    (correct as f64 / n, loss / n)
}
