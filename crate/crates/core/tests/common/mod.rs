//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use bcsfl_core::flcore::{ModelKind, Sample, TaskSpec};
use bcsfl_core::Graph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// All-pairs hop counts by Floyd–Warshall over the adjacency matrix.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<usize>>> {
    let n = g.len();
    let mut d = vec![vec![None; n]; n];
    for (u, row) in d.iter_mut().enumerate() {
        row[u] = Some(0);
        for &v in g.neighbors(u) {
            row[v] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Largest finite pairwise hop count, `None` if any pair is unreachable.
pub fn brute_diameter(g: &Graph) -> Option<usize> {
    let d = floyd_warshall(g);
    let mut best = 0;
    for row in &d {
        for h in row {
            best = best.max((*h)?);
        }
    }
    Some(best)
}

/// Random connected graph: a random spanning tree plus extra edges with
/// probability `p`.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) && !edges.contains(&(u, v)) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

fn log_softmax_ce(logits: &[f64], label: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Mean cross-entropy written directly from the parameter layout:
/// logistic `[W (C×d) | b (C)]`, MLP `[W1 (h×d) | b1 | W2 (C×h) | b2]`.
pub fn oracle_loss(task: &TaskSpec, params: &[f64], samples: &[Sample]) -> f64 {
    let d = task.input_dim;
    let c = task.num_classes;
    let mut total = 0.0;
    for s in samples {
        let x = &s.features;
        let logits: Vec<f64> = match task.kind {
            ModelKind::Logistic => (0..c)
                .map(|k| params[c * d + k] + (0..d).map(|j| params[k * d + j] * x[j]).sum::<f64>())
                .collect(),
            ModelKind::Mlp { hidden: h } => {
                let b1 = h * d;
                let w2 = b1 + h;
                let b2 = w2 + c * h;
                let a: Vec<f64> = (0..h)
                    .map(|i| (params[b1 + i] + (0..d).map(|j| params[i * d + j] * x[j]).sum::<f64>()).tanh())
                    .collect();
                (0..c)
                    .map(|k| params[b2 + k] + (0..h).map(|i| params[w2 + k * h + i] * a[i]).sum::<f64>())
                    .collect()
            }
        };
        total += log_softmax_ce(&logits, s.label);
    }
    total / samples.len() as f64
}

/// Central finite differences of [`oracle_loss`].
pub fn fd_gradient(task: &TaskSpec, params: &[f64], samples: &[Sample], h: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = oracle_loss(task, &p, samples);
            p[i] = orig - h;
            let down = oracle_loss(task, &p, samples);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Coordinate relative error with a floor on the denominator so that
/// near-zero components are compared absolutely.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn random_samples(rng: &mut ChaCha8Rng, n: usize, dim: usize, classes: usize) -> Vec<Sample> {
    (0..n)
        .map(|_| {
            let features = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            Sample::new(features, rng.random_range(0..classes))
        })
        .collect()
}

pub fn random_params(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}
