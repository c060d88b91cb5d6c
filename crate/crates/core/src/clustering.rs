//! Iterative clustering of the swarm into cluster-head (CH) groups.
//!
//! For Q = 1, 2, ... the positions are partitioned with k-means, the member
//! closest to each centroid becomes the CH, and CHs are linked when they are
//! within `sigma = comm_range - 2 * max_drift`. A layout is accepted when its
//! hierarchy is sigma-connected: the CH graph is connected and every member
//! lies within sigma of its own CH. The first accepted Q wins. Because each
//! UAV stays within `max_drift` of home, every sigma link of the hierarchy
//! stays within radio range for the whole run.

use rand::Rng;
use thiserror::Error;

use crate::graph::Graph;
use crate::seed::{derive_seed, rng_from_seed};
use crate::topology::{Position, Topology, UavId};

pub const DEFAULT_KMEANS_ITERS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("communication graph is disconnected; clustering needs a connected swarm")]
    DisconnectedSwarm,
    #[error("unclusterable under sigma = {sigma}: no sigma-connected layout up to Q = {uavs}")]
    Unclusterable { uavs: usize, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusteringConfig {
    pub seed: u64,
    pub max_iters: usize,
}

impl ClusteringConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            max_iters: DEFAULT_KMEANS_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Position>,
    pub iterations: usize,
}

/// Output of the clustering phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLayout {
    /// Cluster index of every UAV.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Position>,
    /// CH of each cluster; `heads[q]` belongs to cluster `q`.
    pub heads: Vec<UavId>,
    /// CH graph indexed by cluster.
    pub ch_graph: Graph,
    pub sigma: f64,
}

impl ClusterLayout {
    pub fn num_clusters(&self) -> usize {
        self.heads.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_of(&self, uav: UavId) -> usize {
        self.assignment[uav]
    }

    pub fn is_head(&self, uav: UavId) -> bool {
        self.heads[self.assignment[uav]] == uav
    }

    /// All members of a cluster, CH included, ascending.
    pub fn members(&self, cluster: usize) -> Vec<UavId> {
        (0..self.num_uavs())
            .filter(|&u| self.assignment[u] == cluster)
            .collect()
    }

    /// Members that train, i.e. everyone but the CH, ascending.
    pub fn training_members(&self, cluster: usize) -> Vec<UavId> {
        let head = self.heads[cluster];
        (0..self.num_uavs())
            .filter(|&u| self.assignment[u] == cluster && u != head)
            .collect()
    }

    /// Every non-CH UAV, ascending.
    pub fn training_uavs(&self) -> Vec<UavId> {
        (0..self.num_uavs()).filter(|&u| !self.is_head(u)).collect()
    }

    /// Every member within `sigma` of its CH.
    pub fn members_covered(&self, positions: &[Position]) -> bool {
        let limit = self.sigma * self.sigma;
        self.assignment
            .iter()
            .enumerate()
            .all(|(u, &c)| positions[u].distance_sq(&positions[self.heads[c]]) <= limit)
    }

    /// Acceptance test of the iterative procedure: CH graph connected and
    /// all members covered.
    pub fn is_sigma_connected(&self, positions: &[Position]) -> bool {
        self.ch_graph.is_connected() && self.members_covered(positions)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters()];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

fn nearest(centroids: &[Position], p: &Position) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = centroid.distance_sq(p);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn kmeans_pp_init(positions: &[Position], q: usize, rng: &mut impl Rng) -> Vec<Position> {
    let n = positions.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![positions[first]];
    let mut d2: Vec<f64> = positions.iter().map(|p| p.distance_sq(&positions[first])).collect();
    while centroids.len() < q {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // Only duplicates of existing centers remain.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.push(positions[pick]);
        for (i, p) in positions.iter().enumerate() {
            d2[i] = d2[i].min(p.distance_sq(&positions[pick]));
        }
    }
    centroids
}

/// Give each empty cluster the point farthest from its current centroid,
/// taken from a cluster that can spare it.
fn repair_empty(positions: &[Position], assignment: &mut [usize], centroids: &mut [Position]) {
    let q = centroids.len();
    loop {
        let mut sizes = vec![0usize; q];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (i, p) in positions.iter().enumerate() {
            let c = assignment[i];
            if sizes[c] > 1 {
                let d = p.distance_sq(&centroids[c]);
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
        }
        let i = far.expect("Q <= U leaves a cluster with a spare point");
        assignment[i] = empty;
        centroids[empty] = positions[i];
    }
}

fn means(positions: &[Position], assignment: &[usize], q: usize) -> Vec<Position> {
    let mut sums = vec![(0.0, 0.0, 0usize); q];
    for (p, &c) in positions.iter().zip(assignment) {
        sums[c].0 += p.x;
        sums[c].1 += p.y;
        sums[c].2 += 1;
    }
    sums.into_iter()
        .map(|(x, y, n)| Position::new(x / n as f64, y / n as f64))
        .collect()
}

/// Lloyd's algorithm with k-means++ seeding. Returns no empty clusters.
///
/// Panics unless `1 <= q <= positions.len()`.
pub fn kmeans(positions: &[Position], q: usize, seed: u64, max_iters: usize) -> KMeansResult {
    assert!(
        q >= 1 && q <= positions.len(),
        "k-means needs 1 <= Q <= U (Q = {q}, U = {})",
        positions.len()
    );
    let mut rng = rng_from_seed(seed);
    let mut centroids = kmeans_pp_init(positions, q, &mut rng);
    let mut assignment: Vec<usize> = positions.iter().map(|p| nearest(&centroids, p)).collect();
    repair_empty(positions, &mut assignment, &mut centroids);
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        centroids = means(positions, &assignment, q);
        let mut next: Vec<usize> = positions.iter().map(|p| nearest(&centroids, p)).collect();
        repair_empty(positions, &mut next, &mut centroids);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    let centroids = means(positions, &assignment, q);
    KMeansResult {
        assignment,
        centroids,
        iterations,
    }
}

/// The member of each cluster nearest its centroid; ties go to the smaller id.
pub fn select_heads(
    positions: &[Position],
    assignment: &[usize],
    centroids: &[Position],
) -> Vec<UavId> {
    let mut best: Vec<Option<(f64, UavId)>> = vec![None; centroids.len()];
    for (u, (p, &c)) in positions.iter().zip(assignment).enumerate() {
        let d = p.distance_sq(&centroids[c]);
        if best[c].is_none_or(|(bd, _)| d < bd) {
            best[c] = Some((d, u));
        }
    }
    best.into_iter()
        .enumerate()
        .map(|(c, b)| b.unwrap_or_else(|| panic!("cluster {c} is empty")).1)
        .collect()
}

/// CH graph over cluster indices: linked iff the heads are within `sigma`.
pub fn build_ch_graph(heads: &[UavId], positions: &[Position], sigma: f64) -> Graph {
    assert!(sigma > 0.0, "sigma must be positive");
    let limit = sigma * sigma;
    Graph::from_predicate(heads.len(), |a, b| {
        positions[heads[a]].distance_sq(&positions[heads[b]]) <= limit
    })
}

/// Run the k-means / CH-selection / CH-graph pipeline at a fixed Q.
pub fn layout_for_q(
    positions: &[Position],
    q: usize,
    sigma: f64,
    config: &ClusteringConfig,
) -> ClusterLayout {
    let km = kmeans(
        positions,
        q,
        derive_seed(config.seed, "kmeans", &[q as u64]),
        config.max_iters,
    );
    let heads = select_heads(positions, &km.assignment, &km.centroids);
    let ch_graph = build_ch_graph(&heads, positions, sigma);
    ClusterLayout {
        assignment: km.assignment,
        centroids: km.centroids,
        heads,
        ch_graph,
        sigma,
    }
}

/// Smallest Q (starting from 1) whose layout is sigma-connected.
pub fn cluster_swarm(
    topology: &Topology,
    config: &ClusteringConfig,
) -> Result<ClusterLayout, ClusteringError> {
    let sigma = topology.sigma();
    if !(sigma > 0.0) {
        return Err(ClusteringError::NonPositiveSigma(sigma));
    }
    if !topology.is_connected() {
        return Err(ClusteringError::DisconnectedSwarm);
    }
    let positions = topology.positions();
    for q in 1..=positions.len() {
        let layout = layout_for_q(positions, q, sigma, config);
        if layout.is_sigma_connected(positions) {
            return Ok(layout);
        }
    }
    Err(ClusteringError::Unclusterable {
        uavs: positions.len(),
        sigma,
    })
}
