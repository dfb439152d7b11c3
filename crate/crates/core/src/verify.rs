//! Independent checkers. Every degree is recomputed from the edge sets;
//! nothing here reads the engine's degree tables.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::Serialize;
use thiserror::Error;

use crate::engine::HedcsEngine;
use crate::graph::{EdgeKey, GraphView, StaticGraph};
use crate::matching::maximum_matching_exact_bounded;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("malformed witness: {0}")]
    Malformed(String),
}

/// A claimed hierarchical decomposition `H_1 ⊆ … ⊆ H_k` of `base`.
#[derive(Clone, Debug, Serialize)]
pub struct HedcsWitness {
    pub n: usize,
    pub beta: usize,
    pub k: usize,
    /// `decomposition[i-1] = H_i`, each cumulative.
    pub decomposition: Vec<Vec<EdgeKey>>,
    pub base: Vec<EdgeKey>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Some `e ∈ H_i \ H_{i-1}` has `deg_{H_i}(e) > β`.
    LevelDegree,
    /// Some `e ∈ base \ H_k` has `deg_{H_k}(e) < β − 1`.
    Coverage,
    GChain,
    HChain,
    UChain,
    UCharacterization,
    MaxDegree,
    HOutsideSample,
    Matching,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub level: Option<usize>,
    pub edge: Option<EdgeKey>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, level: Option<usize>, edge: Option<EdgeKey>, detail: String) {
        self.violations.push(Violation { kind, level, edge, detail });
    }
}

fn degrees(n: usize, edges: &[EdgeKey]) -> Vec<usize> {
    let mut d = vec![0; n];
    for e in edges {
        d[e.u() as usize] += 1;
        d[e.v() as usize] += 1;
    }
    d
}

/// Checks both HEDCS properties of a witness.
pub fn is_valid_hedcs(w: &HedcsWitness) -> Result<Verdict, VerifyError> {
    if w.decomposition.len() != w.k {
        return Err(VerifyError::Malformed(format!("{} levels for k = {}", w.decomposition.len(), w.k)));
    }
    let in_range = |e: &EdgeKey| (e.v() as usize) < w.n;
    if let Some(e) = w.decomposition.iter().flatten().chain(&w.base).find(|e| !in_range(e)) {
        return Err(VerifyError::Malformed(format!("edge {e} has an endpoint outside 0..{}", w.n)));
    }
    let sets: Vec<FxHashSet<EdgeKey>> = w.decomposition.iter().map(|h| h.iter().copied().collect()).collect();
    for i in 1..w.k {
        if let Some(e) = sets[i - 1].iter().find(|e| !sets[i].contains(e)) {
            return Err(VerifyError::Malformed(format!("H_{i} ⊄ H_{}: {e} missing", i + 1)));
        }
    }

    let mut verdict = Verdict::default();
    let empty = FxHashSet::default();
    for i in 1..=w.k {
        let h = &w.decomposition[i - 1];
        let deg = degrees(w.n, h);
        let prev = if i == 1 { &empty } else { &sets[i - 2] };
        let mut new_edges: Vec<EdgeKey> = h.iter().copied().filter(|e| !prev.contains(e)).collect();
        new_edges.sort_unstable();
        for e in new_edges {
            let d = deg[e.u() as usize] + deg[e.v() as usize];
            if d > w.beta {
                verdict.push(
                    ViolationKind::LevelDegree,
                    Some(i),
                    Some(e),
                    format!("deg_H{i}{e} = {d} > β = {}", w.beta),
                );
            }
        }
    }
    let top = w.decomposition.last().map(Vec::as_slice).unwrap_or(&[]);
    let deg = degrees(w.n, top);
    let top_set = sets.last().unwrap_or(&empty);
    let mut base = w.base.clone();
    base.sort_unstable();
    for e in base.into_iter().filter(|e| !top_set.contains(e)) {
        let d = deg[e.u() as usize] + deg[e.v() as usize];
        if d + 1 < w.beta {
            verdict.push(
                ViolationKind::Coverage,
                Some(w.k),
                Some(e),
                format!("deg_H{e} = {d} < β − 1 = {}", w.beta - 1),
            );
        }
    }
    Ok(verdict)
}

/// The engine's current hierarchy as a witness for `(G \ G_k) \ U_{k+1}`.
pub fn witness_of(engine: &HedcsEngine) -> HedcsWitness {
    let k = engine.k();
    let g = engine.graph();
    let uncovered: FxHashSet<EdgeKey> = engine.uncovered(k + 1).into_iter().collect();
    let base = g
        .edges()
        .filter(|&(e, r)| (k == 0 || !g.params().in_level(r, k)) && !uncovered.contains(&e))
        .map(|(e, _)| e)
        .collect();
    HedcsWitness {
        n: g.vertex_count(),
        beta: engine.beta(),
        k,
        decomposition: (1..=k).map(|i| engine.h_edges(i)).collect(),
        base,
    }
}

const MAX_LISTED: usize = 5;

/// Full rescan of the structural invariants of a quiescent engine.
pub fn check_state_invariants(engine: &HedcsEngine) -> Verdict {
    let mut v = Verdict::default();
    let k = engine.k();
    let beta = engine.beta();
    let g = engine.graph();
    let params = g.params();
    let n = g.vertex_count();

    // G-chain: thresholds nondecreasing up to 2^64, and memberships nested.
    let t = &params.thresholds;
    if t.windows(2).any(|w| w[0] > w[1]) || t.last() != Some(&(1u128 << 64)) {
        v.push(ViolationKind::GChain, None, None, format!("thresholds not nested: {t:?}"));
    }
    for (e, r) in g.edges() {
        let member: Vec<bool> = (1..=k + 1).map(|i| params.in_level(r, i)).collect();
        if member.windows(2).any(|w| w[0] && !w[1]) || !member[k] {
            v.push(ViolationKind::GChain, None, Some(e), format!("membership of {e} not nested"));
        }
    }

    // H-chain: every key carries exactly one level tag.
    let mut seen = FxHashSet::default();
    for i in 1..=k {
        for (e, _) in engine.h_level_edges(i) {
            if !seen.insert(e) {
                v.push(ViolationKind::HChain, Some(i), Some(e), format!("{e} appears on two levels"));
            }
        }
    }

    // H_i ⊆ G_i for every H edge that is still the same edge of G.
    for i in 1..=k {
        let mut bad: Vec<EdgeKey> = engine
            .h_level_edges(i)
            .filter(|&(e, r)| g.rank(e) == Some(r) && !params.in_level(r, i))
            .map(|(e, _)| e)
            .collect();
        bad.sort_unstable();
        for e in bad.into_iter().take(MAX_LISTED) {
            v.push(ViolationKind::HOutsideSample, Some(i), Some(e), format!("{e} ∈ H_{i} but ∉ G_{i}"));
        }
    }

    // U-chain: U_{i+1} ⊆ U_i, U_1 = G.
    let u: Vec<BTreeSet<EdgeKey>> = (1..=k + 1).map(|i| engine.uncovered(i).into_iter().collect()).collect();
    for i in 2..=k + 1 {
        let missing: Vec<_> = u[i - 1].difference(&u[i - 2]).take(MAX_LISTED).copied().collect();
        for e in missing {
            v.push(ViolationKind::UChain, Some(i), Some(e), format!("{e} ∈ U_{i} but ∉ U_{}", i - 1));
        }
    }

    // U_{i+1} is exactly the (H_i, β)-underfull edges of G \ G_i; max deg H_i ≤ β.
    for i in 1..=k {
        let h = engine.h_edges(i);
        let deg = degrees(n, &h);
        if let Some((x, &d)) = deg.iter().enumerate().max_by_key(|&(_, d)| *d).filter(|&(_, &d)| d > beta) {
            v.push(ViolationKind::MaxDegree, Some(i), None, format!("deg_H{i}({x}) = {d} > β = {beta}"));
        }
        let expected: BTreeSet<EdgeKey> = g
            .edges()
            .filter(|&(e, r)| !params.in_level(r, i) && deg[e.u() as usize] + deg[e.v() as usize] + 1 < beta)
            .map(|(e, _)| e)
            .collect();
        let actual = &u[i];
        for e in expected.symmetric_difference(actual).take(MAX_LISTED) {
            let why =
                if actual.contains(e) { "in U but not underfull or sampled" } else { "underfull but missing from U" };
            v.push(ViolationKind::UCharacterization, Some(i + 1), Some(*e), format!("{e}: {why}"));
        }
    }

    let m = engine.current_matching();
    if !m.is_matching_of(&g.full()) {
        let stray: Vec<_> = m.edges().filter(|&e| !g.contains(e)).take(MAX_LISTED).collect();
        v.push(
            ViolationKind::Matching,
            None,
            stray.first().copied(),
            format!("M not a matching of G; stray {stray:?}"),
        );
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledMatchingReport {
    pub n: usize,
    pub edges: usize,
    pub delta: usize,
    pub p: f64,
    /// `max{15 ln n/Δ, 32 ln n/|E|}`.
    pub required_p: f64,
    pub precondition_met: bool,
    /// `|E|/(8Δ)`.
    pub target: f64,
    pub trials: usize,
    pub successes: usize,
    pub fraction: f64,
}

/// Samples `G_p` `trials` times and counts how often `μ(G_p) ≥ |E|/(8Δ)`.
///
/// `delta` is the degree bound Δ of the bound; it must be at least the
/// maximum degree of `g`. Trials are only run when the precondition holds.
pub fn check_sampled_matching(
    g: &StaticGraph,
    delta: usize,
    p: f64,
    trials: usize,
    seed: u64,
) -> SampledMatchingReport {
    let n = g.vertex_count();
    let m = g.edge_count();
    let ln_n = (n.max(2) as f64).ln();
    let required_p = if m == 0 { 0.0 } else { (15.0 * ln_n / delta as f64).max(32.0 * ln_n / m as f64) };
    let target = if delta == 0 { 0.0 } else { m as f64 / (8.0 * delta as f64) };
    let mut report = SampledMatchingReport {
        n,
        edges: m,
        delta,
        p,
        required_p,
        precondition_met: m == 0 || (p >= required_p && delta >= g.max_degree()),
        target,
        trials,
        successes: 0,
        fraction: 1.0,
    };
    if m == 0 || !report.precondition_met {
        report.successes = if m == 0 { trials } else { 0 };
        report.fraction = if m == 0 { 1.0 } else { 0.0 };
        return report;
    }
    let all = g.edge_list();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let kept: Vec<EdgeKey> = all.iter().copied().filter(|_| rng.gen_bool(p.min(1.0))).collect();
        let sample = StaticGraph::from_edges(n, kept);
        let mu = maximum_matching_exact_bounded(&sample, usize::MAX).expect("unbounded").len();
        if mu as f64 >= target {
            report.successes += 1;
        }
    }
    report.fraction = if trials == 0 { 1.0 } else { report.successes as f64 / trials as f64 };
    report
}
