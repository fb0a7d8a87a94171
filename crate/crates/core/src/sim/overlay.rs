use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::seed::derive;
use super::SimError;
use crate::symbol::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Complete,
    /// Every node has `degree` neighbours. Degrees of `n - 1` or more yield
    /// the complete graph.
    RandomRegular { degree: usize },
}

impl Topology {
    pub fn effective_degree(&self, n: usize) -> usize {
        match *self {
            Topology::Complete => n.saturating_sub(1),
            Topology::RandomRegular { degree } => degree.min(n.saturating_sub(1)),
        }
    }
}

/// Undirected overlay graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlay {
    adjacency: Vec<Vec<NodeId>>,
}

impl Overlay {
    pub fn from_adjacency(mut adjacency: Vec<Vec<NodeId>>) -> Self {
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node.index()]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(a, b)` with `a < b`, in ascending order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, list) in self.adjacency.iter().enumerate() {
            let a = NodeId(a as u32);
            out.extend(list.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.adjacency.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for v in &self.adjacency[u] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    reached += 1;
                    queue.push_back(v.index());
                }
            }
        }
        reached == n
    }
}

const CONNECT_RETRIES: u64 = 64;
const PAIRING_RESTARTS: usize = 200;

/// Builds a connected overlay on `n` nodes. Deterministic in `(n, topology, seed)`.
///
/// Random regular graphs use random pairing of degree stubs with rejection of
/// loops and parallel edges; a disconnected result is regenerated from the
/// next derived seed.
pub fn build_overlay(n: usize, topology: Topology, seed: u64) -> Result<Overlay, SimError> {
    if n < 2 {
        return Err("group_size must be at least 2".into());
    }
    if n > u32::MAX as usize {
        return Err("group_size too large".into());
    }
    let k = topology.effective_degree(n);
    if k == n - 1 {
        return Ok(complete(n));
    }
    if k == 0 {
        return Err("degree must be at least 1".into());
    }
    if (n * k) % 2 == 1 {
        return Err("group_size * degree must be even".into());
    }
    for attempt in 0..CONNECT_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, attempt));
        if let Some(graph) = random_regular(n, k, &mut rng) {
            if graph.is_connected() {
                return Ok(graph);
            }
        }
    }
    Err(SimError::DisconnectedAfterRetries { retries: CONNECT_RETRIES })
}

fn complete(n: usize) -> Overlay {
    let adjacency = (0..n)
        .map(|u| (0..n).filter(|&v| v != u).map(|v| NodeId(v as u32)).collect())
        .collect();
    Overlay { adjacency }
}

fn random_regular(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Option<Overlay> {
    'restart: for _ in 0..PAIRING_RESTARTS {
        let mut stubs: Vec<u32> = (0..n as u32).flat_map(|u| core::iter::repeat_n(u, k)).collect();
        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::with_capacity(k); n];
        let mut misses = 0usize;
        while !stubs.is_empty() {
            let i = rng.random_range(0..stubs.len());
            let j = rng.random_range(0..stubs.len());
            let (u, v) = (stubs[i], stubs[j]);
            if i == j || u == v || adjacency[u as usize].contains(&NodeId(v)) {
                misses += 1;
                if misses > 64 && !has_valid_pair(&stubs, &adjacency) {
                    continue 'restart;
                }
                continue;
            }
            misses = 0;
            adjacency[u as usize].push(NodeId(v));
            adjacency[v as usize].push(NodeId(u));
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            stubs.swap_remove(hi);
            stubs.swap_remove(lo);
        }
        return Some(Overlay::from_adjacency(adjacency));
    }
    None
}

fn has_valid_pair(stubs: &[u32], adjacency: &[Vec<NodeId>]) -> bool {
    // Only reached after many consecutive misses, when few stubs remain.
    stubs.iter().enumerate().any(|(i, &u)| {
        stubs[i + 1..].iter().any(|&v| u != v && !adjacency[u as usize].contains(&NodeId(v)))
    })
}
