//! Undirected simple graphs over dense node indices, with BFS utilities.

use std::collections::VecDeque;

/// Adjacency-list graph on nodes `0..n`. Neighbor lists are sorted and
/// duplicate-free; the relation is symmetric and irreflexive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            neighbors: vec![Vec::new(); n],
        }
    }

    /// Build a graph from a symmetric predicate evaluated on every pair `u < v`.
    pub fn from_predicate(n: usize, mut linked: impl FnMut(usize, usize) -> bool) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                if linked(u, v) {
                    neighbors[u].push(v);
                    neighbors[v].push(u);
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { neighbors }
    }

    /// Build from an explicit edge list. Self loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if u != v {
                neighbors[u].push(v);
                neighbors[v].push(u);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Self { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn linked(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Hop distances from `src`; `None` for unreachable nodes.
    pub fn bfs_hops(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let next = dist[u].map(|d| d + 1);
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Minimum number of edges between `src` and `dst`, if reachable.
    pub fn hops(&self, src: usize, dst: usize) -> Option<usize> {
        if src == dst {
            return Some(0);
        }
        self.bfs_hops(src)[dst]
    }

    /// Nodes within `k` hops of `src`, including `src`, in ascending order.
    pub fn k_hop_neighborhood(&self, src: usize, k: usize) -> Vec<usize> {
        self.bfs_hops(src)
            .iter()
            .enumerate()
            .filter_map(|(v, d)| matches!(d, Some(d) if *d <= k).then_some(v))
            .collect()
    }

    /// True iff a traversal from node 0 reaches every node. The empty graph
    /// counts as connected.
    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        self.bfs_hops(0).iter().all(Option::is_some)
    }

    /// Largest finite eccentricity, or `None` when disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for u in 0..self.len() {
            for d in self.bfs_hops(u) {
                best = best.max(d?);
            }
        }
        Some(best)
    }
}
