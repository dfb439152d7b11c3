use serde::{Deserialize, Serialize};

use super::{Matching, MatchingError};
use crate::graph::{EdgeKey, GraphView};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateKind {
    Insert,
    Delete,
}

/// Keeps a maximal matching of one graph view under edge updates.
///
/// The view itself is not stored; every call receives it already
/// reflecting the update. Insertions match `e` when both endpoints are
/// free. Deleting a matched edge lets each freed endpoint take its
/// smallest free neighbour.
#[derive(Clone, Debug)]
pub struct MaximalMatchingMaintainer {
    matching: Matching,
    last_work: u64,
}

impl MaximalMatchingMaintainer {
    pub fn new(n: usize) -> Self {
        Self { matching: Matching::new(n), last_work: 0 }
    }

    /// Greedy maximal matching of an existing view.
    pub fn from_view<G: GraphView>(view: &G) -> Self {
        let mut m = Self::new(view.vertex_count());
        for v in 0..view.vertex_count() as u32 {
            m.last_work += m.rematch(view, v);
        }
        m
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.matching.len()
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    /// Neighbour entries scanned by the most recent call.
    pub fn last_work(&self) -> u64 {
        self.last_work
    }

    /// Applies one update and returns the new size.
    pub fn apply_update<G: GraphView>(
        &mut self,
        view: &G,
        kind: UpdateKind,
        e: EdgeKey,
    ) -> Result<usize, MatchingError> {
        let present = view.has_edge(e);
        self.last_work = 1;
        match kind {
            UpdateKind::Insert => {
                if !present {
                    return Err(MatchingError::InconsistentEvent { kind, edge: e });
                }
                if self.matching.is_free(e.u()) && self.matching.is_free(e.v()) {
                    self.matching.insert(e)?;
                }
            }
            UpdateKind::Delete => {
                if present {
                    return Err(MatchingError::InconsistentEvent { kind, edge: e });
                }
                if self.matching.remove(e) {
                    for x in [e.u(), e.v()] {
                        self.last_work += self.rematch(view, x);
                    }
                }
            }
        }
        Ok(self.matching.len())
    }

    fn rematch<G: GraphView>(&mut self, view: &G, x: u32) -> u64 {
        if !self.matching.is_free(x) {
            return 0;
        }
        let mut scanned = 0;
        for w in view.neighbors(x) {
            scanned += 1;
            if self.matching.is_free(w) {
                self.matching.insert(EdgeKey::new(x, w).expect("view has no self-loops")).expect("both endpoints free");
                break;
            }
        }
        scanned
    }
}

/// Free-function form of [`MaximalMatchingMaintainer::apply_update`].
pub fn mm_apply_update<G: GraphView>(
    m: &mut MaximalMatchingMaintainer,
    view: &G,
    kind: UpdateKind,
    e: EdgeKey,
) -> Result<usize, MatchingError> {
    m.apply_update(view, kind, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RankedDynamicGraph;

    fn ek(a: u32, b: u32) -> EdgeKey {
        EdgeKey::new(a, b).unwrap()
    }

    #[test]
    fn insert_into_empty() {
        let mut g = RankedDynamicGraph::new(3, 2, 3, 1);
        let mut m = MaximalMatchingMaintainer::new(3);
        g.insert_edge(ek(1, 2)).unwrap();
        assert_eq!(m.apply_update(&g.full(), UpdateKind::Insert, ek(1, 2)), Ok(1));
        assert!(m.matching().contains(ek(1, 2)));
    }

    #[test]
    fn triangle_replacement() {
        let mut g = RankedDynamicGraph::new(3, 2, 3, 1);
        let mut m = MaximalMatchingMaintainer::new(3);
        for e in [ek(0, 1), ek(1, 2), ek(0, 2)] {
            g.insert_edge(e).unwrap();
            m.apply_update(&g.full(), UpdateKind::Insert, e).unwrap();
        }
        assert!(m.matching().contains(ek(0, 1)));
        g.delete_edge(ek(0, 1)).unwrap();
        assert_eq!(m.apply_update(&g.full(), UpdateKind::Delete, ek(0, 1)), Ok(1));
        assert!(m.matching().is_maximal_in(&g.full()));
        assert!(m.matching().is_matching_of(&g.full()));
    }

    #[test]
    fn unmatched_delete_keeps_size() {
        let mut g = RankedDynamicGraph::new(4, 3, 6, 1);
        let mut m = MaximalMatchingMaintainer::new(4);
        for e in [ek(0, 1), ek(1, 2)] {
            g.insert_edge(e).unwrap();
            m.apply_update(&g.full(), UpdateKind::Insert, e).unwrap();
        }
        g.delete_edge(ek(1, 2)).unwrap();
        assert_eq!(m.apply_update(&g.full(), UpdateKind::Delete, ek(1, 2)), Ok(1));
    }

    #[test]
    fn inconsistent_events_rejected() {
        let g = RankedDynamicGraph::new(3, 2, 3, 1);
        let mut m = MaximalMatchingMaintainer::new(3);
        assert!(matches!(
            m.apply_update(&g.full(), UpdateKind::Insert, ek(0, 1)),
            Err(MatchingError::InconsistentEvent { .. })
        ));
    }
}
