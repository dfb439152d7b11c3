//! Matchings: the vertex-disjoint edge set type, a blossom-based exact
//! matcher used as the verification oracle, a bounded-augmentation
//! approximate matcher, and a dynamic maximal-matching maintainer.

mod blossom;
mod maximal;

pub use blossom::{
    approx_max_matching, approx_max_matching_with_stats, maximum_matching_exact, maximum_matching_exact_bounded,
    MatcherStats, DEFAULT_EXACT_VERTEX_BOUND,
};
pub use maximal::{mm_apply_update, MaximalMatchingMaintainer, UpdateKind};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeKey, GraphView, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("exact matcher limited to {bound} vertices, got {n}")]
    SizeBound { n: usize, bound: usize },
    #[error("vertex {0} is already matched")]
    VertexTaken(VertexId),
    #[error("{kind:?} of {edge} is inconsistent with the underlying view")]
    InconsistentEvent { kind: UpdateKind, edge: EdgeKey },
}

const UNMATCHED: VertexId = VertexId::MAX;

/// A set of vertex-disjoint edges with O(1) lookup by vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    mate: Vec<VertexId>,
    size: usize,
}

impl Matching {
    pub fn new(n: usize) -> Self {
        Self { mate: vec![UNMATCHED; n], size: 0 }
    }

    /// Builds from a mate array as produced by the matchers.
    pub(crate) fn from_mates(mate: Vec<VertexId>) -> Self {
        let size = mate.iter().enumerate().filter(|&(v, &m)| m != UNMATCHED && (v as VertexId) < m).count();
        Self { mate, size }
    }

    pub fn vertex_count(&self) -> usize {
        self.mate.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn mate(&self, v: VertexId) -> Option<VertexId> {
        match self.mate[v as usize] {
            UNMATCHED => None,
            m => Some(m),
        }
    }

    #[inline]
    pub fn is_free(&self, v: VertexId) -> bool {
        self.mate[v as usize] == UNMATCHED
    }

    pub fn contains(&self, e: EdgeKey) -> bool {
        self.mate[e.u() as usize] == e.v()
    }

    pub fn insert(&mut self, e: EdgeKey) -> Result<(), MatchingError> {
        for x in [e.u(), e.v()] {
            if !self.is_free(x) {
                return Err(MatchingError::VertexTaken(x));
            }
        }
        self.mate[e.u() as usize] = e.v();
        self.mate[e.v() as usize] = e.u();
        self.size += 1;
        Ok(())
    }

    /// Removes `e` if it is matched; returns whether it was.
    pub fn remove(&mut self, e: EdgeKey) -> bool {
        if !self.contains(e) {
            return false;
        }
        self.mate[e.u() as usize] = UNMATCHED;
        self.mate[e.v() as usize] = UNMATCHED;
        self.size -= 1;
        true
    }

    pub fn clear(&mut self) {
        self.mate.fill(UNMATCHED);
        self.size = 0;
    }

    /// Matched edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeKey> + '_ {
        self.mate.iter().enumerate().filter_map(|(v, &m)| {
            let v = v as VertexId;
            (m != UNMATCHED && v < m).then(|| EdgeKey::new(v, m).expect("mate differs from vertex"))
        })
    }

    /// Whether every matched edge is an edge of `view` and the mate array
    /// is symmetric.
    pub fn is_matching_of<G: GraphView>(&self, view: &G) -> bool {
        self.mate.iter().enumerate().all(|(v, &m)| {
            m == UNMATCHED
                || (self.mate[m as usize] == v as VertexId
                    && view.has_edge(EdgeKey::new(v as VertexId, m).expect("mate differs from vertex")))
        })
    }

    /// No edge of `view` has both endpoints free.
    pub fn is_maximal_in<G: GraphView>(&self, view: &G) -> bool {
        (0..view.vertex_count() as VertexId)
            .filter(|&v| self.is_free(v))
            .all(|v| view.neighbors(v).all(|w| !self.is_free(w)))
    }
}

impl Serialize for Matching {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.edges().map(|e| (e.u(), e.v())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StaticGraph;

    fn ek(a: VertexId, b: VertexId) -> EdgeKey {
        EdgeKey::new(a, b).unwrap()
    }

    #[test]
    fn insert_remove_roundtrip() {
        let mut m = Matching::new(4);
        m.insert(ek(0, 1)).unwrap();
        assert_eq!(m.insert(ek(1, 2)), Err(MatchingError::VertexTaken(1)));
        m.insert(ek(2, 3)).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.mate(3), Some(2));
        assert!(m.remove(ek(0, 1)));
        assert!(!m.remove(ek(0, 1)));
        assert_eq!(m.edges().collect::<Vec<_>>(), vec![ek(2, 3)]);
    }

    #[test]
    fn validity_checks() {
        let g = StaticGraph::from_edges(4, [ek(0, 1), ek(1, 2), ek(2, 3)]);
        let mut m = Matching::new(4);
        m.insert(ek(1, 2)).unwrap();
        assert!(m.is_matching_of(&g));
        assert!(m.is_maximal_in(&g));
        let mut bad = Matching::new(4);
        bad.insert(ek(0, 3)).unwrap();
        assert!(!bad.is_matching_of(&g));
        assert!(!bad.is_maximal_in(&g));
    }
}
