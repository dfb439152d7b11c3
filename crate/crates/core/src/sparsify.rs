//! Degree capping: every vertex marks at most Δ′ of its edges and the
//! engine only sees edges marked at both ends.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeKey, VertexId};
use crate::matching::UpdateKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SparsifyError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("edge {0} inserted twice")]
    DuplicateEdge(EdgeKey),
    #[error("edge {0} deleted while absent")]
    MissingEdge(EdgeKey),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: VertexId, n: usize },
}

/// `⌈√m_cap / ε⌉`.
pub fn capped_delta_prime(m_cap: usize, epsilon: f64) -> Result<usize, SparsifyError> {
    if m_cap == 0 {
        return Err(SparsifyError::InvalidParams("m_cap must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SparsifyError::InvalidParams(format!("epsilon {epsilon} not in (0, 1)")));
    }
    Ok(((m_cap as f64).sqrt() / epsilon - 1e-9).ceil() as usize)
}

pub type Forwarded = Vec<(UpdateKind, EdgeKey)>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SparsifyStats {
    pub wrapped: u64,
    pub forwarded: u64,
    pub max_forwarded: usize,
}

#[derive(Clone, Debug)]
pub struct MarkedSubgraph {
    delta_prime: usize,
    marked: Vec<BTreeSet<VertexId>>,
    unmarked: Vec<BTreeSet<VertexId>>,
    tilde_edges: usize,
    stats: SparsifyStats,
}

impl MarkedSubgraph {
    pub fn new(n: usize, delta_prime: usize) -> Self {
        Self {
            delta_prime,
            marked: vec![BTreeSet::new(); n],
            unmarked: vec![BTreeSet::new(); n],
            tilde_edges: 0,
            stats: SparsifyStats::default(),
        }
    }

    pub fn delta_prime(&self) -> usize {
        self.delta_prime
    }

    pub fn stats(&self) -> &SparsifyStats {
        &self.stats
    }

    pub fn is_marked_by(&self, e: EdgeKey, x: VertexId) -> bool {
        self.marked[x as usize].contains(&e.other(x))
    }

    pub fn in_tilde(&self, e: EdgeKey) -> bool {
        self.is_marked_by(e, e.u()) && self.is_marked_by(e, e.v())
    }

    pub fn marks(&self, v: VertexId) -> usize {
        self.marked[v as usize].len()
    }

    pub fn tilde_edge_count(&self) -> usize {
        self.tilde_edges
    }

    /// Edges of G̃ in canonical order.
    pub fn tilde_edges(&self) -> impl Iterator<Item = EdgeKey> + '_ {
        self.marked.iter().enumerate().flat_map(move |(u, set)| {
            let u = u as VertexId;
            set.range(u + 1..)
                .filter(move |&&w| self.marked[w as usize].contains(&u))
                .map(move |&w| EdgeKey::new(u, w).expect("u < w"))
        })
    }

    /// Maximum degree of G̃, by full rescan.
    pub fn tilde_max_degree(&self) -> usize {
        (0..self.marked.len())
            .map(|u| self.marked[u].iter().filter(|&&w| self.marked[w as usize].contains(&(u as VertexId))).count())
            .max()
            .unwrap_or(0)
    }

    fn check(&self, e: EdgeKey) -> Result<(), SparsifyError> {
        let n = self.marked.len();
        if (e.v() as usize) >= n {
            return Err(SparsifyError::VertexOutOfRange { vertex: e.v(), n });
        }
        Ok(())
    }

    fn present(&self, e: EdgeKey) -> bool {
        let (u, v) = e.endpoints();
        self.marked[u as usize].contains(&v) || self.unmarked[u as usize].contains(&v)
    }

    /// Applies one update to G and returns the induced updates on G̃
    /// (at most three).
    pub fn wrap_update(&mut self, kind: UpdateKind, e: EdgeKey) -> Result<Forwarded, SparsifyError> {
        self.check(e)?;
        let mut out = Forwarded::new();
        match kind {
            UpdateKind::Insert => {
                if self.present(e) {
                    return Err(SparsifyError::DuplicateEdge(e));
                }
                for x in [e.u(), e.v()] {
                    let w = e.other(x);
                    if self.marked[x as usize].len() < self.delta_prime {
                        self.marked[x as usize].insert(w);
                    } else {
                        self.unmarked[x as usize].insert(w);
                    }
                }
                if self.in_tilde(e) {
                    self.tilde_edges += 1;
                    out.push((UpdateKind::Insert, e));
                }
            }
            UpdateKind::Delete => {
                if !self.present(e) {
                    return Err(SparsifyError::MissingEdge(e));
                }
                if self.in_tilde(e) {
                    self.tilde_edges -= 1;
                    out.push((UpdateKind::Delete, e));
                }
                for x in [e.u(), e.v()] {
                    let w = e.other(x);
                    if !self.marked[x as usize].remove(&w) {
                        self.unmarked[x as usize].remove(&w);
                        continue;
                    }
                    if let Some(r) = self.unmarked[x as usize].pop_first() {
                        self.marked[x as usize].insert(r);
                        if self.marked[r as usize].contains(&x) {
                            self.tilde_edges += 1;
                            out.push((UpdateKind::Insert, EdgeKey::new(x, r).expect("distinct endpoints")));
                        }
                    }
                }
            }
        }
        self.stats.wrapped += 1;
        self.stats.forwarded += out.len() as u64;
        self.stats.max_forwarded = self.stats.max_forwarded.max(out.len());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ek(a: u32, b: u32) -> EdgeKey {
        EdgeKey::new(a, b).unwrap()
    }

    #[test]
    fn delta_prime_examples() {
        assert_eq!(capped_delta_prime(100, 0.5), Ok(20));
        assert_eq!(capped_delta_prime(1, 0.9), Ok(2));
        assert_eq!(capped_delta_prime(1_000_000, 0.1), Ok(10_000));
        assert!(capped_delta_prime(0, 0.1).is_err());
    }

    #[test]
    fn fresh_insert_forwards() {
        let mut s = MarkedSubgraph::new(3, 2);
        assert_eq!(s.wrap_update(UpdateKind::Insert, ek(0, 1)).unwrap(), vec![(UpdateKind::Insert, ek(0, 1))]);
    }

    #[test]
    fn saturated_endpoint_declines() {
        let mut s = MarkedSubgraph::new(4, 2);
        s.wrap_update(UpdateKind::Insert, ek(0, 2)).unwrap();
        s.wrap_update(UpdateKind::Insert, ek(0, 3)).unwrap();
        assert!(s.wrap_update(UpdateKind::Insert, ek(0, 1)).unwrap().is_empty());
        assert!(s.is_marked_by(ek(0, 1), 1));
        assert!(!s.is_marked_by(ek(0, 1), 0));
    }

    #[test]
    fn delete_at_saturated_star_replaces() {
        // Star around 0 with Δ′ = 2: leaves 1, 2 marked, 3 and 4 waiting.
        let mut s = MarkedSubgraph::new(5, 2);
        for b in 1..5 {
            s.wrap_update(UpdateKind::Insert, ek(0, b)).unwrap();
        }
        let out = s.wrap_update(UpdateKind::Delete, ek(0, 1)).unwrap();
        assert_eq!(out, vec![(UpdateKind::Delete, ek(0, 1)), (UpdateKind::Insert, ek(0, 3))]);
        assert_eq!(s.tilde_max_degree(), 2);
        assert_eq!(s.tilde_edges().collect::<Vec<_>>(), vec![ek(0, 2), ek(0, 3)]);
    }

    #[test]
    fn errors() {
        let mut s = MarkedSubgraph::new(3, 2);
        assert_eq!(s.wrap_update(UpdateKind::Delete, ek(0, 1)), Err(SparsifyError::MissingEdge(ek(0, 1))));
        s.wrap_update(UpdateKind::Insert, ek(0, 1)).unwrap();
        assert_eq!(s.wrap_update(UpdateKind::Insert, ek(0, 1)), Err(SparsifyError::DuplicateEdge(ek(0, 1))));
    }
}
