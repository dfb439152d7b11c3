//! The recomputable part of the engine state: the H hierarchy with its
//! degree tables, the uncovered sets, the per-level snapshots and the
//! output matching.

use std::collections::BTreeMap;

use indexmap::{IndexMap, IndexSet};
use rustc_hash::FxBuildHasher;
use serde::Serialize;

use crate::graph::{EdgeKey, EdgeRank, VertexId};
use crate::matching::Matching;

pub(crate) type FxIndexSet<T> = IndexSet<T, FxBuildHasher>;
pub(crate) type FxIndexMap<K, V> = IndexMap<K, V, FxBuildHasher>;

/// `Φ = Φ₁ − Φ₂` with `Φ₁ = (2β−1)|H|` and `Φ₂ = Σ_{e∈H} deg_H(e)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Potential {
    pub phi1: i64,
    pub phi2: i64,
    pub phi: i64,
}

impl Potential {
    fn new(beta: usize, edges: usize, sum_deg_sq: i64) -> Self {
        let phi1 = (2 * beta as i64 - 1) * edges as i64;
        Self { phi1, phi2: sum_deg_sq, phi: phi1 - sum_deg_sq }
    }
}

/// Computes the potential of `h_i` directly from its edge list.
///
/// `h_prev` only documents the precondition `h_prev ⊆ h_i`; the
/// potential itself depends on `h_i` alone.
pub fn potential_of(h_i: &[EdgeKey], h_prev: &[EdgeKey], beta: usize) -> Potential {
    debug_assert!({
        let set: std::collections::HashSet<_> = h_i.iter().collect();
        h_prev.iter().all(|e| set.contains(e))
    });
    let mut deg: rustc_hash::FxHashMap<VertexId, i64> = Default::default();
    for e in h_i {
        *deg.entry(e.u()).or_default() += 1;
        *deg.entry(e.v()).or_default() += 1;
    }
    let phi2 = h_i.iter().map(|e| deg[&e.u()] + deg[&e.v()]).sum();
    Potential::new(beta, h_i.len(), phi2)
}

/// Instrumentation of one add_layer run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AddLayerRecord {
    pub level: usize,
    pub mu: usize,
    pub beta: usize,
    pub gamma_len: usize,
    /// `⌊|Γ|/(4μβ²+1)⌋`.
    pub tau: usize,
    pub insertions: usize,
    pub removals: usize,
    pub scanned: usize,
    pub phi_start: i64,
    pub phi_end: i64,
    pub phi_max: i64,
    /// Smallest potential change over all insertions and removals.
    pub min_phi_step: Option<i64>,
    /// Edges of Γ skipped because a stale copy already sits in H.
    pub stale_hits: usize,
}

impl AddLayerRecord {
    /// `4μβ²`.
    pub fn potential_cap(&self) -> i64 {
        4 * self.mu as i64 * (self.beta * self.beta) as i64
    }

    /// Checks the three potential-method claims; returns the failures.
    pub fn violations(&self) -> Vec<String> {
        let cap = self.potential_cap();
        let mut out = Vec::new();
        if self.insertions as i64 > cap {
            out.push(format!("level {}: {} insertions > 4μβ² = {cap}", self.level, self.insertions));
        }
        if self.phi_max > cap {
            out.push(format!("level {}: Φ reached {} > 4μβ² = {cap}", self.level, self.phi_max));
        }
        if self.phi_start < 0 {
            out.push(format!("level {}: Φ starts negative ({})", self.level, self.phi_start));
        }
        if let Some(step) = self.min_phi_step {
            if step < 1 {
                out.push(format!("level {}: Φ changed by {step} on a step", self.level));
            }
        }
        out
    }
}

/// Statistics written at each level recomputation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LevelStats {
    pub recomputations: u64,
    /// `|U_{i+1}|·p_i/(μ_i·β²·ln n)` at the most recent recomputation.
    pub s_last: Option<f64>,
    pub s_max: Option<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Layers {
    pub k: usize,
    pub beta: usize,
    /// `h_new[i-1]`: edges of `H_i \ H_{i-1}` with the rank they had when added.
    pub h_new: Vec<FxIndexMap<EdgeKey, EdgeRank>>,
    /// Neighbour to level tag, over all of `H_k`.
    pub h_adj: Vec<BTreeMap<VertexId, u8>>,
    /// `h_deg[i-1][v] = deg_{H_i}(v)`.
    pub h_deg: Vec<Vec<u32>>,
    /// `u[i-2] = U_i` for `i ∈ 2..=k+1`.
    pub u: Vec<FxIndexSet<EdgeKey>>,
    /// `mu[i-1] = μ_i` at the last recomputation of level `i`.
    pub mu: Vec<usize>,
    pub matching: Matching,
    pub stats: Vec<LevelStats>,
}

impl Layers {
    pub fn new(n: usize, k: usize, beta: usize) -> Self {
        Self {
            k,
            beta,
            h_new: vec![FxIndexMap::default(); k],
            h_adj: vec![BTreeMap::new(); n],
            h_deg: vec![vec![0; n]; k],
            u: vec![FxIndexSet::default(); k],
            mu: vec![0; k + 1],
            matching: Matching::new(n),
            stats: vec![LevelStats::default(); k + 1],
        }
    }

    #[inline]
    pub fn deg(&self, level: usize, v: VertexId) -> u32 {
        self.h_deg[level - 1][v as usize]
    }

    #[inline]
    pub fn edge_degree(&self, level: usize, e: EdgeKey) -> u32 {
        self.deg(level, e.u()) + self.deg(level, e.v())
    }

    #[inline]
    pub fn is_underfull(&self, level: usize, e: EdgeKey) -> bool {
        (self.edge_degree(level, e) as usize) + 1 < self.beta
    }

    /// Level tag of `e` in H, if any.
    pub fn h_level(&self, e: EdgeKey) -> Option<usize> {
        self.h_adj[e.u() as usize].get(&e.v()).map(|&l| l as usize)
    }

    pub fn h_insert(&mut self, level: usize, e: EdgeKey, rank: EdgeRank) {
        self.h_new[level - 1].insert(e, rank);
        self.h_adj[e.u() as usize].insert(e.v(), level as u8);
        self.h_adj[e.v() as usize].insert(e.u(), level as u8);
        for row in &mut self.h_deg[level - 1..] {
            row[e.u() as usize] += 1;
            row[e.v() as usize] += 1;
        }
    }

    pub fn h_remove(&mut self, level: usize, e: EdgeKey) {
        self.h_new[level - 1].swap_remove(&e);
        self.h_adj[e.u() as usize].remove(&e.v());
        self.h_adj[e.v() as usize].remove(&e.u());
        for row in &mut self.h_deg[level - 1..] {
            row[e.u() as usize] -= 1;
            row[e.v() as usize] -= 1;
        }
    }

    /// Drops `H_i \ H_{i-1}` for every `i ≥ from`, returning the edge count.
    pub fn clear_levels_from(&mut self, from: usize) -> usize {
        let mut removed = 0;
        for level in (from..=self.k).rev() {
            let edges: Vec<EdgeKey> = self.h_new[level - 1].keys().copied().collect();
            removed += edges.len();
            for e in edges {
                self.h_remove(level, e);
            }
        }
        removed
    }

    /// `U_i` for `i ∈ 2..=k+1`.
    pub fn uncovered(&self, i: usize) -> &FxIndexSet<EdgeKey> {
        &self.u[i - 2]
    }

    pub fn uncovered_mut(&mut self, i: usize) -> &mut FxIndexSet<EdgeKey> {
        &mut self.u[i - 2]
    }

    fn sum_deg_sq(&self, level: usize) -> i64 {
        self.h_deg[level - 1].iter().map(|&d| (d as i64) * (d as i64)).sum()
    }

    fn h_size(&self, level: usize) -> usize {
        self.h_new[..level].iter().map(IndexMap::len).sum()
    }

    /// Runs add_layer for `level` over `gamma`, which must already be in
    /// ascending (rank, key) order. `H_level` must equal `H_{level-1}` on
    /// entry. Every scanned edge and every adjacency probe counts as one
    /// work unit.
    pub fn add_layer(
        &mut self,
        level: usize,
        gamma: &[(EdgeRank, EdgeKey)],
        mu: usize,
        work: &mut u64,
    ) -> AddLayerRecord {
        debug_assert!(self.h_new[level - 1].is_empty());
        let beta = self.beta;
        let tau = gamma.len() / (4 * mu * beta * beta + 1);
        let mut edges = self.h_size(level);
        let mut sq = self.sum_deg_sq(level);
        let start = Potential::new(beta, edges, sq).phi;
        let mut rec = AddLayerRecord {
            level,
            mu,
            beta,
            gamma_len: gamma.len(),
            tau,
            phi_start: start,
            phi_end: start,
            phi_max: start,
            ..Default::default()
        };
        let mut phi = start;
        let mut step = |rec: &mut AddLayerRecord, edges: usize, sq: i64| {
            let next = Potential::new(beta, edges, sq).phi;
            let d = next - phi;
            rec.min_phi_step = Some(rec.min_phi_step.map_or(d, |m: i64| m.min(d)));
            phi = next;
            rec.phi_max = rec.phi_max.max(next);
        };
        let mut eta = 0usize;
        for &(rank, e) in gamma {
            rec.scanned += 1;
            *work += 1;
            let stale = self.h_level(e).is_some();
            if stale {
                rec.stale_hits += 1;
            }
            if stale || !self.is_underfull(level, e) {
                eta += 1;
                if eta > tau {
                    break;
                }
                continue;
            }
            let (du, dv) = (self.deg(level, e.u()) as i64, self.deg(level, e.v()) as i64);
            self.h_insert(level, e, rank);
            edges += 1;
            sq += 2 * (du + dv) + 2;
            rec.insertions += 1;
            step(&mut rec, edges, sq);
            for x in [e.u(), e.v()] {
                let mut victim = None;
                for (&w, &tag) in &self.h_adj[x as usize] {
                    *work += 1;
                    if tag as usize == level && (self.deg(level, x) + self.deg(level, w)) as usize > beta {
                        victim = Some(EdgeKey::new(x, w).expect("H has no self-loops"));
                        break;
                    }
                }
                if let Some(f) = victim {
                    let (a, b) = (self.deg(level, f.u()) as i64, self.deg(level, f.v()) as i64);
                    self.h_remove(level, f);
                    edges -= 1;
                    sq -= 2 * (a + b) - 2;
                    rec.removals += 1;
                    step(&mut rec, edges, sq);
                }
            }
            eta = 0;
        }
        rec.phi_end = phi;
        rec
    }
}

/// Outcome of the standalone [`add_layer`].
#[derive(Clone, Debug)]
pub struct AddLayerOutcome {
    /// The returned `H_i`, sorted.
    pub h: Vec<EdgeKey>,
    pub record: AddLayerRecord,
}

/// One add_layer run over `gamma` (already in scan order) starting from
/// `h_prev`. Vertices must lie in `0..n`.
pub fn add_layer(n: usize, gamma: &[EdgeKey], h_prev: &[EdgeKey], mu: usize, beta: usize) -> AddLayerOutcome {
    // Level 1 holds h_prev, level 2 is built.
    let mut layers = Layers::new(n, 2, beta);
    for &e in h_prev {
        layers.h_insert(1, e, EdgeRank(0));
    }
    let ordered: Vec<(EdgeRank, EdgeKey)> = gamma.iter().enumerate().map(|(i, &e)| (EdgeRank(i as u64), e)).collect();
    let mut work = 0;
    let mut record = layers.add_layer(2, &ordered, mu, &mut work);
    record.level = 1;
    let mut h: Vec<EdgeKey> = layers.h_new.iter().flat_map(|m| m.keys().copied()).collect();
    h.sort_unstable();
    AddLayerOutcome { h, record }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ek(a: u32, b: u32) -> EdgeKey {
        EdgeKey::new(a, b).unwrap()
    }

    #[test]
    fn empty_gamma_keeps_prev() {
        let out = add_layer(4, &[], &[ek(0, 1)], 1, 3);
        assert_eq!(out.h, vec![ek(0, 1)]);
        assert_eq!(out.record.insertions, 0);
    }

    #[test]
    fn path_with_beta_two() {
        let path = [ek(0, 1), ek(1, 2), ek(2, 3)];
        // μ = 1 gives τ = ⌊3/17⌋ = 0: the covered (1,2) ends the scan.
        let out = add_layer(4, &path, &[], 1, 2);
        assert_eq!(out.h, vec![ek(0, 1)]);
        // μ = 0 gives τ = 3 and the scan reaches (2,3).
        let out = add_layer(4, &path, &[], 0, 2);
        assert_eq!(out.h, vec![ek(0, 1), ek(2, 3)]);
    }

    #[test]
    fn tau_arithmetic() {
        // |Γ| = 100, μ = 2, β = 3: ⌊100/73⌋ = 1, so two consecutive
        // covered edges stop the scan.
        let gamma: Vec<EdgeKey> =
            [ek(0, 1), ek(0, 2), ek(0, 3), ek(0, 4)].into_iter().chain((10..106).map(|i| ek(i, i + 200))).collect();
        assert_eq!(gamma.len(), 100);
        let out = add_layer(400, &gamma, &[], 2, 3);
        assert_eq!(out.record.tau, 1);
        // (0,1) added; (0,2) has degree 1 < 2 so it is added too; (0,3),
        // (0,4) are covered and end the scan.
        assert_eq!(out.h, vec![ek(0, 1), ek(0, 2)]);
        assert_eq!(out.record.scanned, 4);
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential_of(&[ek(0, 1)], &[], 3), Potential { phi1: 5, phi2: 2, phi: 3 });
        assert_eq!(potential_of(&[], &[], 3).phi, 0);
    }

    #[test]
    fn overfull_removal_picks_smallest_neighbour() {
        // β = 4: once (3,4) joins, (0,3) has edge-degree 5 and goes.
        let gamma = [ek(0, 1), ek(0, 2), ek(0, 3), ek(3, 4), ek(3, 5)];
        let out = add_layer(6, &gamma, &[], 10, 4);
        for e in &out.h {
            let d = |v| out.h.iter().filter(|f| f.u() == v || f.v() == v).count();
            assert!(d(e.u()) + d(e.v()) <= 4, "{e:?} overfull in {:?}", out.h);
        }
        assert!(out.record.removals >= 1);
        assert!(out.record.min_phi_step.unwrap() >= 1);
    }
}
