use rand::Rng;

use super::{FlError, ModelVector, Sample};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Softmax regression: `W (C x d)`, then `b (C)`.
    Logistic,
    /// `W1 (h x d)`, `b1 (h)`, `W2 (C x h)`, `b2 (C)` with tanh hidden units.
    Mlp { hidden: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub num_classes: usize,
}

/// Per-thread work buffers for forward and backward passes.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    hidden: Vec<f64>,
    logits: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl TaskSpec {
    pub fn logistic(input_dim: usize, num_classes: usize) -> Self {
        Self {
            kind: ModelKind::Logistic,
            input_dim,
            num_classes,
        }
    }

    pub fn mlp(input_dim: usize, hidden: usize, num_classes: usize) -> Self {
        Self {
            kind: ModelKind::Mlp { hidden },
            input_dim,
            num_classes,
        }
    }

    pub fn num_params(&self) -> usize {
        let (d, c) = (self.input_dim, self.num_classes);
        match self.kind {
            ModelKind::Logistic => c * d + c,
            ModelKind::Mlp { hidden: h } => h * d + h + c * h + c,
        }
    }

    /// Logistic models start at zero; MLP weights are drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` with zero biases.
    pub fn init_model(&self, seed: u64) -> ModelVector {
        match self.kind {
            ModelKind::Logistic => ModelVector::zeros(self.num_params()),
            ModelKind::Mlp { hidden: h } => {
                let (d, c) = (self.input_dim, self.num_classes);
                let mut rng = rng_from_seed(seed);
                let mut w = Vec::with_capacity(self.num_params());
                let a1 = 1.0 / (d as f64).sqrt();
                w.extend((0..h * d).map(|_| rng.random_range(-a1..a1)));
                w.extend(std::iter::repeat_n(0.0, h));
                let a2 = 1.0 / (h as f64).sqrt();
                w.extend((0..c * h).map(|_| rng.random_range(-a2..a2)));
                w.extend(std::iter::repeat_n(0.0, c));
                ModelVector(w)
            }
        }
    }

    pub(crate) fn check_model(&self, model: &ModelVector) -> Result<(), FlError> {
        if model.dim() != self.num_params() {
            return Err(FlError::DimensionMismatch {
                expected: self.num_params(),
                found: model.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn scratch(&self) -> Scratch {
        let h = match self.kind {
            ModelKind::Logistic => 0,
            ModelKind::Mlp { hidden } => hidden,
        };
        Scratch {
            hidden: vec![0.0; h],
            logits: vec![0.0; self.num_classes],
            delta_hidden: vec![0.0; h],
        }
    }

    /// Fills `scratch.logits` (and `scratch.hidden` for the MLP).
    fn forward(&self, w: &[f64], x: &[f64], scratch: &mut Scratch) {
        debug_assert_eq!(x.len(), self.input_dim);
        let (d, c) = (self.input_dim, self.num_classes);
        match self.kind {
            ModelKind::Logistic => {
                let (weights, bias) = w.split_at(c * d);
                for (k, z) in scratch.logits.iter_mut().enumerate() {
                    *z = bias[k] + dot(&weights[k * d..(k + 1) * d], x);
                }
            }
            ModelKind::Mlp { hidden: h } => {
                let (w1, rest) = w.split_at(h * d);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                for (i, a) in scratch.hidden.iter_mut().enumerate() {
                    *a = (b1[i] + dot(&w1[i * d..(i + 1) * d], x)).tanh();
                }
                for (k, z) in scratch.logits.iter_mut().enumerate() {
                    *z = b2[k] + dot(&w2[k * h..(k + 1) * h], &scratch.hidden);
                }
            }
        }
    }

    /// Replace logits by softmax probabilities; returns log-sum-exp.
    fn softmax_in_place(logits: &mut [f64]) -> f64 {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        let lse = max + sum.ln();
        for z in logits.iter_mut() {
            *z = (*z - lse).exp();
        }
        lse
    }

    fn loss_from_logits(&self, logits: &[f64], label: usize) -> f64 {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        max + sum.ln() - logits[label]
    }

    pub(crate) fn sample_loss(&self, model: &ModelVector, s: &Sample, scratch: &mut Scratch) -> f64 {
        self.forward(&model.0, &s.features, scratch);
        self.loss_from_logits(&scratch.logits, s.label)
    }

    /// Argmax class (lowest index on ties) and the sample loss.
    pub(crate) fn predict_with_loss(
        &self,
        model: &ModelVector,
        s: &Sample,
        scratch: &mut Scratch,
    ) -> (usize, f64) {
        self.forward(&model.0, &s.features, scratch);
        let mut best = 0;
        for (k, &z) in scratch.logits.iter().enumerate() {
            if z > scratch.logits[best] {
                best = k;
            }
        }
        (best, self.loss_from_logits(&scratch.logits, s.label))
    }

    /// `grad += d loss(s) / d w`.
    pub(crate) fn accumulate_gradient(
        &self,
        model: &ModelVector,
        s: &Sample,
        grad: &mut ModelVector,
        scratch: &mut Scratch,
    ) {
        let (d, c) = (self.input_dim, self.num_classes);
        let x = &s.features;
        self.forward(&model.0, x, scratch);
        Self::softmax_in_place(&mut scratch.logits);
        scratch.logits[s.label] -= 1.0;
        let residual = &scratch.logits;
        let g = &mut grad.0;
        match self.kind {
            ModelKind::Logistic => {
                let (gw, gb) = g.split_at_mut(c * d);
                for k in 0..c {
                    axpy(residual[k], x, &mut gw[k * d..(k + 1) * d]);
                    gb[k] += residual[k];
                }
            }
            ModelKind::Mlp { hidden: h } => {
                let w2 = &model.0[h * d + h..h * d + h + c * h];
                let (gw1, rest) = g.split_at_mut(h * d);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(c * h);
                scratch.delta_hidden.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..c {
                    let r = residual[k];
                    axpy(r, &scratch.hidden, &mut gw2[k * h..(k + 1) * h]);
                    gb2[k] += r;
                    axpy(r, &w2[k * h..(k + 1) * h], &mut scratch.delta_hidden);
                }
                for i in 0..h {
                    let a = scratch.hidden[i];
                    let delta = scratch.delta_hidden[i] * (1.0 - a * a);
                    if delta != 0.0 {
                        axpy(delta, x, &mut gw1[i * d..(i + 1) * d]);
                    }
                    gb1[i] += delta;
                }
            }
        }
    }

    pub(crate) fn check_labels(&self, samples: &[Sample]) -> Result<(), FlError> {
        match samples.iter().find(|s| s.label >= self.num_classes) {
            Some(s) => Err(FlError::LabelOutOfRange {
                label: s.label,
                classes: self.num_classes,
            }),
            None => Ok(()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
