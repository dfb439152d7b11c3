//! Dynamic graph substrate.
//!
//! Every edge carries a 64-bit rank drawn once at insertion. The nested
//! sampled subgraphs `G_1 ⊆ … ⊆ G_{k+1} = G` are never stored: an edge is in
//! `G_i` iff its rank is below the level's threshold `t_i = ⌊p_i·2⁶⁴⌋`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range (n = {n})")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge {0} is already present")]
    DuplicateEdge(EdgeKey),
    #[error("edge {0} is not present")]
    MissingEdge(EdgeKey),
    #[error("inserting {edge} would exceed the degree cap {cap} at vertex {vertex}")]
    DegreeCap { edge: EdgeKey, vertex: VertexId, cap: usize },
    #[error("inserting {edge} would exceed the edge cap {cap}")]
    EdgeCap { edge: EdgeKey, cap: usize },
    #[error("invalid level parameters: {0}")]
    InvalidParams(String),
    #[error("level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },
}

/// Undirected edge stored canonically with `u < v`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    u: VertexId,
    v: VertexId,
}

impl EdgeKey {
    pub fn new(a: VertexId, b: VertexId) -> Result<Self, GraphError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Self { u: a, v: b }),
            std::cmp::Ordering::Greater => Ok(Self { u: b, v: a }),
            std::cmp::Ordering::Equal => Err(GraphError::SelfLoop(a)),
        }
    }

    #[inline]
    pub fn u(self) -> VertexId {
        self.u
    }

    #[inline]
    pub fn v(self) -> VertexId {
        self.v
    }

    #[inline]
    pub fn endpoints(self) -> (VertexId, VertexId) {
        (self.u, self.v)
    }

    /// The endpoint that is not `x`. `x` must be an endpoint.
    #[inline]
    pub fn other(self, x: VertexId) -> VertexId {
        debug_assert!(x == self.u || x == self.v);
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

impl fmt::Debug for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.u, self.v)
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// Uniform sample from `[0, 1)` represented as `value / 2⁶⁴`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRank(pub u64);

impl EdgeRank {
    pub fn as_unit(self) -> f64 {
        self.0 as f64 / 18_446_744_073_709_551_616.0
    }
}

/// Sampling probabilities of the nested subgraphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    pub k: usize,
    pub epsilon: f64,
    pub delta_cap: usize,
    /// `probs[i - 1] = p_i` for `i ∈ 1..=k+1`.
    pub probs: Vec<f64>,
    /// `thresholds[i - 1] = ⌊p_i·2⁶⁴⌋`; `p_{k+1} = 1` gives exactly `2⁶⁴`.
    pub thresholds: Vec<u128>,
}

impl LevelParams {
    /// A single level containing every edge.
    pub fn trivial() -> Self {
        Self { k: 0, epsilon: 0.0, delta_cap: 0, probs: vec![1.0], thresholds: vec![1u128 << 64] }
    }

    #[inline]
    pub fn level_count(&self) -> usize {
        self.k + 1
    }

    /// Whether an edge of this rank belongs to `G_level` (1-based).
    #[inline]
    pub fn in_level(&self, rank: EdgeRank, level: usize) -> bool {
        (rank.0 as u128) < self.thresholds[level - 1]
    }

    /// Smallest `i` with `rank < t_i`.
    pub fn level_of_rank(&self, rank: EdgeRank) -> usize {
        self.thresholds.partition_point(|&t| (rank.0 as u128) >= t) + 1
    }

    pub fn prob(&self, level: usize) -> f64 {
        self.probs[level - 1]
    }
}

/// `p_i = min(1, ε·Δ^{i/(k+1)−1})` for `i ∈ [k]`, `p_{k+1} = 1`.
///
/// `epsilon` is accepted anywhere in `(0, 1)`; the engine narrows this to
/// `(0, 1/12)` when it preprocesses.
pub fn compute_level_probs(k: usize, epsilon: f64, delta_cap: usize) -> Result<LevelParams, GraphError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(GraphError::InvalidParams(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if delta_cap < 2 {
        return Err(GraphError::InvalidParams(format!("delta_cap {delta_cap} < 2")));
    }
    let delta = delta_cap as f64;
    let mut probs: Vec<f64> = (1..=k)
        .map(|i| {
            let exponent = i as f64 / (k + 1) as f64 - 1.0;
            (epsilon * delta.powf(exponent)).min(1.0)
        })
        .collect();
    probs.push(1.0);
    let thresholds = probs.iter().map(|&p| threshold_for(p)).collect();
    Ok(LevelParams { k, epsilon, delta_cap, probs, thresholds })
}

fn threshold_for(p: f64) -> u128 {
    if p >= 1.0 {
        1u128 << 64
    } else {
        // Scaling by a power of two is exact; floor then fits in 64 bits.
        (p * 18_446_744_073_709_551_616.0).floor() as u128
    }
}

/// Read-only adjacency access shared by the matching routines.
pub trait GraphView {
    fn vertex_count(&self) -> usize;
    fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_;
    fn has_edge(&self, e: EdgeKey) -> bool;

    fn degree(&self, v: VertexId) -> usize {
        self.neighbors(v).count()
    }

    /// All edges in canonical order.
    fn edge_list(&self) -> Vec<EdgeKey> {
        let mut out = Vec::new();
        for u in 0..self.vertex_count() as VertexId {
            for w in self.neighbors(u) {
                if u < w {
                    out.push(EdgeKey { u, v: w });
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// `deg_H(u) + deg_H(v)`; `e` itself need not be in `H`.
pub fn edge_degree<G: GraphView + ?Sized>(view: &G, e: EdgeKey) -> usize {
    view.degree(e.u()) + view.degree(e.v())
}

/// Immutable adjacency-list graph, used for matching inputs and tests.
#[derive(Clone, Debug, Default)]
pub struct StaticGraph {
    adj: Vec<Vec<VertexId>>,
    edges: usize,
}

impl StaticGraph {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], edges: 0 }
    }

    /// Builds from an edge list; duplicates are dropped and neighbor lists
    /// come out sorted.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = EdgeKey>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for e in edges {
            adj[e.u() as usize].push(e.v());
            adj[e.v() as usize].push(e.u());
        }
        let mut count = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            count += list.len();
        }
        Self { adj, edges: count / 2 }
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn adjacency(&self) -> &[Vec<VertexId>] {
        &self.adj
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }
}

impl GraphView for StaticGraph {
    fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v as usize].iter().copied()
    }

    fn has_edge(&self, e: EdgeKey) -> bool {
        self.adj[e.u() as usize].binary_search(&e.v()).is_ok()
    }

    fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }
}

/// The fully dynamic input graph with persistent per-edge ranks.
#[derive(Clone, Debug)]
pub struct RankedDynamicGraph {
    adjacency: Vec<BTreeMap<VertexId, EdgeRank>>,
    edge_count: usize,
    delta_cap: usize,
    m_cap: usize,
    params: LevelParams,
    rng: ChaCha8Rng,
}

impl RankedDynamicGraph {
    pub fn new(n: usize, delta_cap: usize, m_cap: usize, seed: u64) -> Self {
        Self {
            adjacency: vec![BTreeMap::new(); n],
            edge_count: 0,
            delta_cap,
            m_cap,
            params: LevelParams::trivial(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn delta_cap(&self) -> usize {
        self.delta_cap
    }

    pub fn m_cap(&self) -> usize {
        self.m_cap
    }

    pub fn params(&self) -> &LevelParams {
        &self.params
    }

    /// Replaces the level parameters. Ranks are untouched, so memberships
    /// follow immediately from the new thresholds.
    pub fn set_params(&mut self, params: LevelParams) {
        self.params = params;
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if (v as usize) < self.adjacency.len() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange { vertex: v, n: self.adjacency.len() })
        }
    }

    pub fn insert_edge(&mut self, e: EdgeKey) -> Result<EdgeRank, GraphError> {
        let (u, v) = e.endpoints();
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if self.adjacency[u as usize].contains_key(&v) {
            return Err(GraphError::DuplicateEdge(e));
        }
        for x in [u, v] {
            if self.adjacency[x as usize].len() >= self.delta_cap {
                return Err(GraphError::DegreeCap { edge: e, vertex: x, cap: self.delta_cap });
            }
        }
        if self.edge_count >= self.m_cap {
            return Err(GraphError::EdgeCap { edge: e, cap: self.m_cap });
        }
        let rank = EdgeRank(self.rng.next_u64());
        self.adjacency[u as usize].insert(v, rank);
        self.adjacency[v as usize].insert(u, rank);
        self.edge_count += 1;
        Ok(rank)
    }

    pub fn delete_edge(&mut self, e: EdgeKey) -> Result<EdgeRank, GraphError> {
        let (u, v) = e.endpoints();
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let rank = self.adjacency[u as usize].remove(&v).ok_or(GraphError::MissingEdge(e))?;
        self.adjacency[v as usize].remove(&u);
        self.edge_count -= 1;
        Ok(rank)
    }

    pub fn rank(&self, e: EdgeKey) -> Option<EdgeRank> {
        self.adjacency.get(e.u() as usize)?.get(&e.v()).copied()
    }

    pub fn contains(&self, e: EdgeKey) -> bool {
        self.rank(e).is_some()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).max().unwrap_or(0)
    }

    /// Neighbors of `v` in ascending id order, with the connecting edge's rank.
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, EdgeRank)> + '_ {
        self.adjacency[v as usize].iter().map(|(&w, &r)| (w, r))
    }

    /// Every present edge in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeKey, EdgeRank)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, nbrs)| {
            let u = u as VertexId;
            nbrs.range(u + 1..).map(move |(&v, &r)| (EdgeKey { u, v }, r))
        })
    }

    /// Smallest `i` such that `e ∈ G_i`.
    pub fn level_of(&self, e: EdgeKey) -> Result<usize, GraphError> {
        let rank = self.rank(e).ok_or(GraphError::MissingEdge(e))?;
        Ok(self.params.level_of_rank(rank))
    }

    pub fn in_level(&self, e: EdgeKey, level: usize) -> bool {
        self.rank(e).is_some_and(|r| self.params.in_level(r, level))
    }

    /// View of the sampled subgraph `G_level`.
    pub fn level(&self, level: usize) -> Result<LevelView<'_>, GraphError> {
        let max = self.params.level_count();
        if level == 0 || level > max {
            return Err(GraphError::LevelOutOfRange { level, max });
        }
        Ok(LevelView { graph: self, threshold: self.params.thresholds[level - 1] })
    }

    /// View of the whole graph.
    pub fn full(&self) -> LevelView<'_> {
        LevelView { graph: self, threshold: 1u128 << 64 }
    }

    #[cfg(test)]
    pub(crate) fn insert_with_rank(&mut self, e: EdgeKey, rank: EdgeRank) {
        self.adjacency[e.u() as usize].insert(e.v(), rank);
        self.adjacency[e.v() as usize].insert(e.u(), rank);
        self.edge_count += 1;
    }
}

/// The edges of a [`RankedDynamicGraph`] whose rank lies below a threshold.
#[derive(Clone, Copy)]
pub struct LevelView<'g> {
    graph: &'g RankedDynamicGraph,
    threshold: u128,
}

impl<'g> LevelView<'g> {
    pub fn graph(&self) -> &'g RankedDynamicGraph {
        self.graph
    }

    #[inline]
    pub fn admits(&self, rank: EdgeRank) -> bool {
        (rank.0 as u128) < self.threshold
    }

    /// Neighbors of `v` in this view, ascending.
    pub fn neighbors_scanned(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        let threshold = self.threshold;
        self.graph.adjacency[v as usize].iter().filter(move |(_, r)| (r.0 as u128) < threshold).map(|(&w, _)| w)
    }
}

impl GraphView for LevelView<'_> {
    fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.neighbors_scanned(v)
    }

    fn has_edge(&self, e: EdgeKey) -> bool {
        self.graph.rank(e).is_some_and(|r| self.admits(r))
    }

    fn degree(&self, v: VertexId) -> usize {
        if self.threshold >= 1u128 << 64 {
            self.graph.degree(v)
        } else {
            self.neighbors_scanned(v).count()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ek(a: VertexId, b: VertexId) -> EdgeKey {
        EdgeKey::new(a, b).unwrap()
    }

    #[test]
    fn level_probs_direct_formula() {
        let p = compute_level_probs(1, 0.5, 4096).unwrap();
        assert_eq!(p.probs, vec![0.0078125, 1.0]);
        assert_eq!(p.thresholds[0], 1u128 << 57);

        let p = compute_level_probs(0, 0.1, 100).unwrap();
        assert_eq!(p.probs, vec![1.0]);

        let p = compute_level_probs(2, 0.1, 1_000_000).unwrap();
        assert_eq!(p.probs.len(), 3);
        assert!((p.probs[0] - 1e-5).abs() < 1e-18);
        assert!((p.probs[1] - 1e-3).abs() < 1e-15);
        assert_eq!(p.probs[2], 1.0);
    }

    #[test]
    fn level_probs_reject_bad_input() {
        assert!(compute_level_probs(1, 0.0, 100).is_err());
        assert!(compute_level_probs(1, 1.0, 100).is_err());
        assert!(compute_level_probs(1, 0.05, 1).is_err());
    }

    #[test]
    fn small_delta_clamps_to_one() {
        let p = compute_level_probs(3, 0.08, 2).unwrap();
        assert!(p.probs.iter().all(|&x| x <= 1.0));
        assert!(p.probs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn insert_and_duplicate() {
        let mut g = RankedDynamicGraph::new(4, 3, 10, 1);
        g.insert_edge(ek(0, 1)).unwrap();
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.insert_edge(ek(1, 0)), Err(GraphError::DuplicateEdge(ek(0, 1))));
    }

    #[test]
    fn caps_are_errors() {
        let mut g = RankedDynamicGraph::new(5, 2, 3, 1);
        g.insert_edge(ek(0, 1)).unwrap();
        g.insert_edge(ek(0, 2)).unwrap();
        assert!(matches!(g.insert_edge(ek(0, 3)), Err(GraphError::DegreeCap { vertex: 0, .. })));
        g.insert_edge(ek(3, 4)).unwrap();
        assert!(matches!(g.insert_edge(ek(1, 2)), Err(GraphError::EdgeCap { .. })));
        assert!(matches!(g.insert_edge(ek(1, 9)), Err(GraphError::VertexOutOfRange { .. })));
        assert_eq!(EdgeKey::new(2, 2), Err(GraphError::SelfLoop(2)));
    }

    #[test]
    fn delete_paths() {
        let mut g = RankedDynamicGraph::new(3, 3, 10, 9);
        let r = g.insert_edge(ek(0, 1)).unwrap();
        assert_eq!(g.delete_edge(ek(0, 1)), Ok(r));
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.delete_edge(ek(0, 1)), Err(GraphError::MissingEdge(ek(0, 1))));
        let again = g.insert_edge(ek(0, 1)).unwrap();
        assert_ne!(r, again);
    }

    #[test]
    fn ranks_are_seed_deterministic() {
        let run = |seed| {
            let mut g = RankedDynamicGraph::new(6, 5, 20, seed);
            (0..5).map(|i| g.insert_edge(ek(i, i + 1)).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn level_of_examples() {
        let mut g = RankedDynamicGraph::new(4, 3, 10, 0);
        g.set_params(compute_level_probs(1, 0.5, 4096).unwrap());
        g.insert_with_rank(ek(0, 1), EdgeRank(0));
        g.insert_with_rank(ek(1, 2), EdgeRank(u64::MAX));
        g.insert_with_rank(ek(2, 3), EdgeRank((0.004 * 18_446_744_073_709_551_616.0) as u64));
        assert_eq!(g.level_of(ek(0, 1)), Ok(1));
        assert_eq!(g.level_of(ek(1, 2)), Ok(2));
        assert_eq!(g.level_of(ek(2, 3)), Ok(1));
        assert!(g.level_of(ek(0, 3)).is_err());
    }

    #[test]
    fn edge_degree_examples() {
        let h = StaticGraph::from_edges(3, [ek(0, 1)]);
        assert_eq!(edge_degree(&h, ek(0, 1)), 2);
        let empty = StaticGraph::new(3);
        assert_eq!(edge_degree(&empty, ek(0, 2)), 0);
        let path = StaticGraph::from_edges(3, [ek(0, 1), ek(1, 2)]);
        assert_eq!(edge_degree(&path, ek(0, 2)), 2);
    }

    #[test]
    fn level_views_are_nested() {
        let mut g = RankedDynamicGraph::new(30, 29, 500, 5);
        g.set_params(compute_level_probs(2, 0.08, 16).unwrap());
        for u in 0..30 {
            for v in (u + 1)..30 {
                if (u * 7 + v * 3) % 5 == 0 {
                    g.insert_edge(ek(u, v)).unwrap();
                }
            }
        }
        let levels: Vec<_> = (1..=3).map(|i| g.level(i).unwrap().edge_list()).collect();
        for w in levels.windows(2) {
            assert!(w[0].iter().all(|e| w[1].binary_search(e).is_ok()));
        }
        assert_eq!(levels[2].len(), g.edge_count());
        assert!(g.level(0).is_err());
        assert!(g.level(4).is_err());
    }
}
