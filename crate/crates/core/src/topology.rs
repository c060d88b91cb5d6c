//! Swarm deployment and the communication graph.
//!
//! UAVs sit in a rectangular area at constant altitude. Two UAVs can talk
//! directly iff their Euclidean distance is at most the communication range
//! (closed ball, compared on squared distances). Each round a UAV may wander
//! from its home position by at most `max_drift`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::seed::{derive_seed, rng_from_seed};

/// Dense UAV index in `0..U`.
pub type UavId = usize;

/// Number of full layouts tried before giving up on a connected deployment.
pub const MAX_DEPLOY_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("invalid swarm config: {0}")]
    InvalidConfig(String),
    #[error(
        "infeasible density: {uavs} UAVs in a {width} x {height} m area with range {comm_range} m \
         stayed disconnected after {attempts} layouts"
    )]
    InfeasibleDensity {
        uavs: usize,
        width: f64,
        height: f64,
        comm_range: f64,
        attempts: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Position) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub num_uavs: usize,
    pub area_width: f64,
    pub area_height: f64,
    /// Maximum direct communication range in meters.
    pub comm_range: f64,
    /// Maximum divergence of a UAV from its home position in meters.
    pub max_drift: f64,
    pub rng_seed: u64,
}

impl SwarmConfig {
    /// CH link threshold `comm_range - 2 * max_drift`.
    pub fn sigma(&self) -> f64 {
        self.comm_range - 2.0 * self.max_drift
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |msg: String| Err(TopologyError::InvalidConfig(msg));
        if self.num_uavs < 2 {
            return bad(format!("num_uavs must be at least 2, got {}", self.num_uavs));
        }
        if !(self.area_width > 0.0 && self.area_height > 0.0)
            || !self.area_width.is_finite()
            || !self.area_height.is_finite()
        {
            return bad(format!(
                "area must be positive and finite, got {} x {}",
                self.area_width, self.area_height
            ));
        }
        if !(self.max_drift >= 0.0) || !self.comm_range.is_finite() {
            return bad(format!(
                "max_drift must be non-negative and comm_range finite, got {} / {}",
                self.max_drift, self.comm_range
            ));
        }
        if !(self.comm_range > 2.0 * self.max_drift) {
            return bad(format!(
                "comm_range ({}) must exceed 2 * max_drift ({})",
                self.comm_range, self.max_drift
            ));
        }
        Ok(())
    }
}

/// Positions plus the derived communication graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<Position>,
    home_positions: Vec<Position>,
    area_width: f64,
    area_height: f64,
    comm_range: f64,
    max_drift: f64,
    graph: Graph,
}

impl Topology {
    /// Build a topology whose home positions are `positions`.
    pub fn from_positions(
        positions: Vec<Position>,
        area: (f64, f64),
        comm_range: f64,
        max_drift: f64,
    ) -> Self {
        let graph = range_graph(&positions, comm_range);
        Self {
            home_positions: positions.clone(),
            positions,
            area_width: area.0,
            area_height: area.1,
            comm_range,
            max_drift,
            graph,
        }
    }

    pub fn num_uavs(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn home_positions(&self) -> &[Position] {
        &self.home_positions
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn area(&self) -> (f64, f64) {
        (self.area_width, self.area_height)
    }

    pub fn sigma(&self) -> f64 {
        self.comm_range - 2.0 * self.max_drift
    }

    pub fn linked(&self, u: UavId, v: UavId) -> bool {
        self.graph.linked(u, v)
    }

    pub fn is_connected(&self) -> bool {
        self.graph.is_connected()
    }

    /// Hop count between two UAVs, or `None` when unreachable.
    pub fn shortest_path_hops(&self, src: UavId, dst: UavId) -> Option<usize> {
        self.graph.hops(src, dst)
    }

    /// Move every UAV to its home position plus an offset drawn uniformly
    /// from the disk of radius `max_drift`, restricted to the deployment
    /// area. The draw is a pure function of `(seed, round)`.
    pub fn apply_drift(&self, round: u64, seed: u64) -> Topology {
        assert!(round >= 1, "drift rounds are numbered from 1");
        let radius = self.max_drift;
        if radius == 0.0 {
            return self.clone();
        }
        let mut rng = rng_from_seed(derive_seed(seed, "drift", &[round]));
        let positions = self
            .home_positions
            .iter()
            .map(|home| loop {
                let dx = rng.random_range(-radius..=radius);
                let dy = rng.random_range(-radius..=radius);
                let p = Position::new(home.x + dx, home.y + dy);
                let inside = (0.0..=self.area_width).contains(&p.x)
                    && (0.0..=self.area_height).contains(&p.y);
                // Check the realized offset so the bound holds after rounding.
                if inside && p.distance(home) <= radius {
                    break p;
                }
            })
            .collect::<Vec<_>>();
        let graph = range_graph(&positions, self.comm_range);
        Topology {
            positions,
            graph,
            ..self.clone()
        }
    }
}

/// Communication graph: linked iff squared distance ≤ range².
pub fn range_graph(positions: &[Position], range: f64) -> Graph {
    let limit = range * range;
    Graph::from_predicate(positions.len(), |u, v| {
        positions[u].distance_sq(&positions[v]) <= limit
    })
}

/// Sample uniform layouts until one is connected.
pub fn deploy_swarm(config: &SwarmConfig) -> Result<Topology, TopologyError> {
    config.validate()?;
    let mut rng = rng_from_seed(config.rng_seed);
    for _ in 0..MAX_DEPLOY_ATTEMPTS {
        let positions = (0..config.num_uavs)
            .map(|_| {
                Position::new(
                    rng.random_range(0.0..=config.area_width),
                    rng.random_range(0.0..=config.area_height),
                )
            })
            .collect();
        let topology = Topology::from_positions(
            positions,
            (config.area_width, config.area_height),
            config.comm_range,
            config.max_drift,
        );
        if topology.is_connected() {
            return Ok(topology);
        }
    }
    Err(TopologyError::InfeasibleDensity {
        uavs: config.num_uavs,
        width: config.area_width,
        height: config.area_height,
        comm_range: config.comm_range,
        attempts: MAX_DEPLOY_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(uavs: usize, side: f64, seed: u64) -> SwarmConfig {
        SwarmConfig {
            num_uavs: uavs,
            area_width: side,
            area_height: side,
            comm_range: 150.0,
            max_drift: 5.0,
            rng_seed: seed,
        }
    }

    fn line(xs: &[f64], range: f64) -> Topology {
        let positions = xs.iter().map(|&x| Position::new(x, 0.0)).collect();
        Topology::from_positions(positions, (1000.0, 1000.0), range, 0.0)
    }

    #[test]
    fn two_uavs_in_small_area_are_linked() {
        let t = deploy_swarm(&config(2, 10.0, 1)).unwrap();
        assert!(t.linked(0, 1));
        assert!(t.is_connected());
    }

    #[test]
    fn full_size_deployment_is_connected() {
        let t = deploy_swarm(&config(200, 1000.0, 42)).unwrap();
        assert!(t.is_connected());
        assert!((0..200).any(|u| t.graph().degree(u) >= 2));
        for (p, h) in t.positions().iter().zip(t.home_positions()) {
            assert_eq!(p, h);
            assert!((0.0..=1000.0).contains(&p.x) && (0.0..=1000.0).contains(&p.y));
        }
    }

    #[test]
    fn sparse_swarm_is_infeasible() {
        let err = deploy_swarm(&config(50, 100_000.0, 7)).unwrap_err();
        match &err {
            TopologyError::InfeasibleDensity { uavs, comm_range, .. } => {
                assert_eq!(*uavs, 50);
                assert_eq!(*comm_range, 150.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(err.to_string().contains("infeasible density"));
    }

    #[test]
    fn config_validation() {
        let mut c = config(1, 100.0, 0);
        assert!(c.validate().is_err());
        c.num_uavs = 3;
        c.max_drift = 75.0;
        assert!(c.validate().is_err(), "sigma = 0 must be rejected");
        c.max_drift = 5.0;
        c.area_width = 0.0;
        assert!(c.validate().is_err());
        assert_eq!(config(3, 10.0, 0).sigma(), 140.0);
    }

    #[test]
    fn connectivity_examples() {
        assert!(!line(&[0.0, 151.0], 150.0).is_connected());
        assert!(line(&[0.0, 10.0, 20.0], 150.0).is_connected());
        let path = line(&[0.0, 100.0, 200.0], 150.0);
        assert!(path.is_connected());
        assert!(!path.linked(0, 2));
        assert_eq!(path.shortest_path_hops(0, 2), Some(2));
    }

    #[test]
    fn boundary_distance_is_linked() {
        let t = line(&[0.0, 150.0, 300.0001], 150.0);
        assert!(t.linked(0, 1));
        assert!(!t.linked(1, 2));
        assert_eq!(t.shortest_path_hops(0, 2), None);
        assert_eq!(t.shortest_path_hops(1, 1), Some(0));
    }

    #[test]
    fn zero_drift_is_identity() {
        let t = deploy_swarm(&SwarmConfig {
            max_drift: 0.0,
            ..config(30, 300.0, 3)
        })
        .unwrap();
        assert_eq!(t.apply_drift(1, 9), t);
    }

    #[test]
    fn drift_is_deterministic_and_bounded() {
        let t = deploy_swarm(&config(100, 600.0, 5)).unwrap();
        assert_eq!(t.apply_drift(4, 11), t.apply_drift(4, 11));
        assert_ne!(t.apply_drift(4, 11), t.apply_drift(5, 11));
        let mut current = t.clone();
        for round in 1..=50 {
            current = current.apply_drift(round, 11);
            for (p, h) in current.positions().iter().zip(current.home_positions()) {
                assert!(p.distance(h) <= 5.0);
            }
            assert_eq!(current.graph(), &range_graph(current.positions(), 150.0));
        }
    }
}
