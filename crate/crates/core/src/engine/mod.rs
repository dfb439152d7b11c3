//! The dynamic HEDCS matching engine.
//!
//! The engine owns its [`RankedDynamicGraph`]. Updates go through a cheap
//! bookkeeping phase (ranks, memberships, uncovered sets, maximal-matching
//! maintainers) followed by per-level counters that periodically rebuild
//! a suffix of the hierarchy.

mod layers;

pub use layers::{add_layer, potential_of, AddLayerOutcome, AddLayerRecord, LevelStats, Potential};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{compute_level_probs, EdgeKey, EdgeRank, GraphError, LevelParams, RankedDynamicGraph, StaticGraph};
use crate::matching::{approx_max_matching_with_stats, Matching, MatchingError, MaximalMatchingMaintainer, UpdateKind};
use layers::{FxIndexSet, Layers};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Amortized,
    Deamortized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub k: usize,
    pub beta: usize,
    pub epsilon: f64,
    pub mode: Mode,
    /// Keep an [`AddLayerRecord`] for every add_layer run.
    pub record_add_layers: bool,
}

impl EngineConfig {
    pub fn new(k: usize, beta: usize, epsilon: f64) -> Self {
        Self { k, beta, epsilon, mode: Mode::Amortized, record_add_layers: false }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.beta < 2 {
            return Err(EngineError::InvalidConfig(format!("beta {} < 2", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 / 12.0) {
            return Err(EngineError::InvalidConfig(format!("epsilon {} not in (0, 1/12)", self.epsilon)));
        }
        if self.k > u8::MAX as usize - 1 {
            return Err(EngineError::InvalidConfig(format!("k {} too large", self.k)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct UpdateReport {
    pub update_index: u64,
    /// Level whose counter fired on this update.
    pub triggered_level: Option<usize>,
    /// Level whose rebuilt structures became live on this update. Equal to
    /// `triggered_level` in amortized mode; a swap in deamortized mode.
    pub applied_level: Option<usize>,
    pub work_units: u64,
    pub matching_size: usize,
}

#[derive(Clone, Debug)]
struct PendingJob {
    level: usize,
    staged: Layers,
    total: u64,
    paid: u64,
    budget: u64,
}

/// Shared read-only inputs of a recomputation.
struct Inputs<'a> {
    graph: &'a RankedDynamicGraph,
    g_levels: &'a [FxIndexSet<EdgeKey>],
    maintainers: &'a [MaximalMatchingMaintainer],
    epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct HedcsEngine {
    config: EngineConfig,
    graph: RankedDynamicGraph,
    layers: Layers,
    /// `g_levels[i-1]`: present edges whose smallest level is `i`.
    g_levels: Vec<FxIndexSet<EdgeKey>>,
    /// `maintainers[i-1]` keeps a maximal matching of `G_i`.
    maintainers: Vec<MaximalMatchingMaintainer>,
    counters: Vec<u64>,
    update_index: u64,
    pending: Option<PendingJob>,
    add_layer_log: Vec<AddLayerRecord>,
    total_work: u64,
}

impl HedcsEngine {
    /// Sets the level probabilities, builds the maintainers and runs
    /// computeLayers(1).
    pub fn preprocess(mut graph: RankedDynamicGraph, config: EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let params = compute_level_probs(config.k, config.epsilon, graph.delta_cap())?;
        graph.set_params(params);
        let k = config.k;
        let n = graph.vertex_count();
        let mut g_levels = vec![FxIndexSet::default(); k + 1];
        for (e, r) in graph.edges() {
            g_levels[graph.params().level_of_rank(r) - 1].insert(e);
        }
        let maintainers = (1..=k + 1)
            .map(|i| graph.level(i).map(|v| MaximalMatchingMaintainer::from_view(&v)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut engine = Self {
            layers: Layers::new(n, k, config.beta),
            config,
            graph,
            g_levels,
            maintainers,
            counters: vec![0; k + 1],
            update_index: 0,
            pending: None,
            add_layer_log: Vec::new(),
            total_work: 0,
        };
        let mut log = Vec::new();
        let inputs = Inputs {
            graph: &engine.graph,
            g_levels: &engine.g_levels,
            maintainers: &engine.maintainers,
            epsilon: engine.config.epsilon,
        };
        let work = compute_layers(&mut engine.layers, &inputs, 1, &mut log);
        engine.total_work += work;
        if engine.config.record_add_layers {
            engine.add_layer_log = log;
        }
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn graph(&self) -> &RankedDynamicGraph {
        &self.graph
    }

    pub fn params(&self) -> &LevelParams {
        self.graph.params()
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn beta(&self) -> usize {
        self.config.beta
    }

    pub fn update_count(&self) -> u64 {
        self.update_index
    }

    pub fn total_work(&self) -> u64 {
        self.total_work
    }

    pub fn current_matching(&self) -> &Matching {
        &self.layers.matching
    }

    /// `μ_1 … μ_{k+1}` as of each level's last recomputation.
    pub fn mu_snapshots(&self) -> &[usize] {
        &self.layers.mu
    }

    /// Current size of the maintained maximal matching of `G_i`.
    pub fn maintained_mu(&self, i: usize) -> usize {
        self.maintainers[i - 1].size()
    }

    pub fn maintainer(&self, i: usize) -> &MaximalMatchingMaintainer {
        &self.maintainers[i - 1]
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    /// Indexed by level `1..=k+1`.
    pub fn level_stats(&self) -> &[LevelStats] {
        &self.layers.stats
    }

    pub fn has_pending_job(&self) -> bool {
        self.pending.is_some()
    }

    /// Records collected since the last call (only with `record_add_layers`).
    pub fn take_add_layer_log(&mut self) -> Vec<AddLayerRecord> {
        std::mem::take(&mut self.add_layer_log)
    }

    /// Edges of `H_i \ H_{i-1}` with the rank each had when it was added.
    pub fn h_level_edges(&self, i: usize) -> impl Iterator<Item = (EdgeKey, EdgeRank)> + '_ {
        self.layers.h_new[i - 1].iter().map(|(&e, &r)| (e, r))
    }

    /// `H_i`, sorted.
    pub fn h_edges(&self, i: usize) -> Vec<EdgeKey> {
        let mut out: Vec<EdgeKey> = (1..=i).flat_map(|l| self.layers.h_new[l - 1].keys().copied()).collect();
        out.sort_unstable();
        out
    }

    /// `|H_i|`.
    pub fn h_len(&self, i: usize) -> usize {
        (1..=i).map(|l| self.layers.h_new[l - 1].len()).sum()
    }

    /// `U_i` for `i ∈ 1..=k+1`, sorted. `U_1` is all of G.
    pub fn uncovered(&self, i: usize) -> Vec<EdgeKey> {
        let mut out: Vec<EdgeKey> = if i == 1 {
            self.graph.edges().map(|(e, _)| e).collect()
        } else {
            self.layers.uncovered(i).iter().copied().collect()
        };
        out.sort_unstable();
        out
    }

    pub fn uncovered_len(&self, i: usize) -> usize {
        if i == 1 {
            self.graph.edge_count()
        } else {
            self.layers.uncovered(i).len()
        }
    }

    /// Adds `e` to `U_i` without any checks, for exercising the verifiers.
    #[doc(hidden)]
    pub fn debug_inject_uncovered(&mut self, i: usize, e: EdgeKey) {
        self.layers.uncovered_mut(i).insert(e);
    }

    /// Integer counter threshold `⌈(ε/k_eff)·(μ_j+1)/p_j⌉` using the
    /// maintained `μ_j`.
    pub fn threshold(&self, j: usize) -> u64 {
        let k_eff = self.config.k.max(1) as f64;
        let raw = self.config.epsilon / k_eff * (self.maintained_mu(j) + 1) as f64 / self.params().prob(j);
        counter_threshold(raw)
    }

    pub fn apply_update(&mut self, kind: UpdateKind, e: EdgeKey) -> Result<UpdateReport, EngineError> {
        let k = self.config.k;
        let mut work = 1u64;
        let rank = match kind {
            UpdateKind::Insert => self.graph.insert_edge(e)?,
            UpdateKind::Delete => self.graph.delete_edge(e)?,
        };
        let level = self.params().level_of_rank(rank);
        match kind {
            UpdateKind::Insert => {
                self.g_levels[level - 1].insert(e);
            }
            UpdateKind::Delete => {
                self.g_levels[level - 1].swap_remove(&e);
            }
        }
        for i in level..=k + 1 {
            let view = self.graph.level(i)?;
            self.maintainers[i - 1].apply_update(&view, kind, e)?;
            work += self.maintainers[i - 1].last_work();
        }
        trivial_update(&mut self.layers, kind, e, level, &mut work);
        if let Some(job) = &mut self.pending {
            let mut ignored = 0;
            trivial_update(&mut job.staged, kind, e, level, &mut ignored);
        }

        for c in &mut self.counters {
            *c += 1;
        }
        let mut applied_level = None;
        if let Some(job) = &mut self.pending {
            let pay = job.budget.min(job.total - job.paid);
            job.paid += pay;
            work += pay;
            if job.paid >= job.total {
                let job = self.pending.take().expect("checked above");
                self.layers = job.staged;
                applied_level = Some(job.level);
            }
        }

        let mut triggered_level = None;
        match self.config.mode {
            Mode::Amortized => {
                if let Some(j) = (1..=k + 1).find(|&j| self.counters[j - 1] >= self.threshold(j)) {
                    self.reset_counters(j);
                    let mut log = Vec::new();
                    let inputs = Inputs {
                        graph: &self.graph,
                        g_levels: &self.g_levels,
                        maintainers: &self.maintainers,
                        epsilon: self.config.epsilon,
                    };
                    work += compute_layers(&mut self.layers, &inputs, j, &mut log);
                    self.push_log(log);
                    triggered_level = Some(j);
                    applied_level = Some(j);
                }
            }
            Mode::Deamortized => {
                let limit = self.pending.as_ref().map_or(k + 1, |job| job.level - 1);
                if let Some(j) = (1..=limit).find(|&j| self.counters[j - 1] >= self.threshold(j).div_ceil(2)) {
                    let half = self.threshold(j).div_ceil(2);
                    self.reset_counters(j);
                    let mut staged = self.layers.clone();
                    let mut log = Vec::new();
                    let inputs = Inputs {
                        graph: &self.graph,
                        g_levels: &self.g_levels,
                        maintainers: &self.maintainers,
                        epsilon: self.config.epsilon,
                    };
                    let total = compute_layers(&mut staged, &inputs, j, &mut log);
                    self.push_log(log);
                    self.pending =
                        Some(PendingJob { level: j, staged, total, paid: 0, budget: total.div_ceil(half).max(1) });
                    triggered_level = Some(j);
                }
            }
        }

        self.update_index += 1;
        self.total_work += work;
        Ok(UpdateReport {
            update_index: self.update_index,
            triggered_level,
            applied_level,
            work_units: work,
            matching_size: self.layers.matching.len(),
        })
    }

    fn reset_counters(&mut self, j: usize) {
        for c in &mut self.counters[j - 1..] {
            *c = 0;
        }
    }

    fn push_log(&mut self, log: Vec<AddLayerRecord>) {
        if self.config.record_add_layers {
            self.add_layer_log.extend(log);
        }
    }
}

/// `⌈raw⌉` with a little slack so that values like `2550.0000000000005`
/// produced by float rounding do not add one, and never below 1.
fn counter_threshold(raw: f64) -> u64 {
    ((raw - 1e-9).ceil().max(1.0)) as u64
}

fn trivial_update(layers: &mut Layers, kind: UpdateKind, e: EdgeKey, level: usize, work: &mut u64) {
    match kind {
        UpdateKind::Insert => {
            // U-levels are contiguous: stop at the first level that either
            // samples e or covers it.
            for i in 1..=layers.k {
                *work += 1;
                if level <= i || !layers.is_underfull(i, e) {
                    break;
                }
                layers.uncovered_mut(i + 1).insert(e);
            }
        }
        UpdateKind::Delete => {
            for i in 2..=layers.k + 1 {
                *work += 1;
                if !layers.uncovered_mut(i).swap_remove(&e) {
                    break;
                }
            }
            layers.matching.remove(e);
        }
    }
}

/// computeLayers(j) on `layers`. Returns the work units spent.
fn compute_layers(layers: &mut Layers, inp: &Inputs<'_>, j: usize, log: &mut Vec<AddLayerRecord>) -> u64 {
    let k = layers.k;
    let g = inp.graph;
    let params = g.params();
    let n = g.vertex_count();
    let mut work = 0u64;
    if j <= k {
        work += layers.clear_levels_from(j) as u64;
        for i in j..=k {
            layers.uncovered_mut(i + 1).clear();
        }
    }
    let rank_of = |e: EdgeKey| g.rank(e).expect("tracked edges are present");
    for i in j..=k {
        let mu = inp.maintainers[i - 1].size();
        layers.mu[i - 1] = mu;

        let mut gamma: Vec<(EdgeRank, EdgeKey)> = if i == 1 {
            inp.g_levels[0].iter().map(|&e| (rank_of(e), e)).collect()
        } else {
            let u_i = layers.uncovered(i);
            work += u_i.len() as u64;
            u_i.iter()
                .filter_map(|&e| {
                    let r = rank_of(e);
                    params.in_level(r, i).then_some((r, e))
                })
                .collect()
        };
        work += gamma.len() as u64;
        gamma.sort_unstable();
        log.push(layers.add_layer(i, &gamma, mu, &mut work));

        let next: FxIndexSet<EdgeKey> = if i == 1 {
            inp.g_levels[1..].iter().flatten().copied().filter(|&e| layers.is_underfull(1, e)).collect()
        } else {
            layers
                .uncovered(i)
                .iter()
                .copied()
                .filter(|&e| !params.in_level(rank_of(e), i) && layers.is_underfull(i, e))
                .collect()
        };
        work += if i == 1 {
            inp.g_levels[1..].iter().map(|s| s.len() as u64).sum()
        } else {
            layers.uncovered(i).len() as u64
        };
        let u_next = next.len();
        *layers.uncovered_mut(i + 1) = next;

        let st = &mut layers.stats[i - 1];
        st.recomputations += 1;
        st.s_last = (mu > 0 && n > 1).then(|| {
            u_next as f64 * params.prob(i) / (mu as f64 * (layers.beta * layers.beta) as f64 * (n as f64).ln())
        });
        if let Some(s) = st.s_last {
            st.s_max = Some(st.s_max.map_or(s, |m: f64| m.max(s)));
        }
    }
    layers.mu[k] = inp.maintainers[k].size();

    let mut edges: Vec<EdgeKey> = Vec::new();
    if k == 0 {
        edges.extend(inp.g_levels[0].iter().copied());
    } else {
        for level in &layers.h_new {
            edges.extend(level.keys().copied().filter(|&e| g.contains(e)));
        }
        edges.extend(layers.uncovered(k + 1).iter().copied());
    }
    work += edges.len() as u64;
    let view = StaticGraph::from_edges(n, edges);
    let (m, st) = approx_max_matching_with_stats(&view, inp.epsilon);
    work += st.edge_visits;
    layers.matching = m;
    layers.stats[k].recomputations += 1;
    work
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ek(a: u32, b: u32) -> EdgeKey {
        EdgeKey::new(a, b).unwrap()
    }

    #[test]
    fn threshold_rounding() {
        assert_eq!(counter_threshold(0.1 / 2.0 * 51.0 / 0.001), 2550);
        assert_eq!(counter_threshold(0.2), 1);
        assert_eq!(counter_threshold(3.5), 4);
    }

    #[test]
    fn config_validation() {
        let g = RankedDynamicGraph::new(4, 3, 6, 0);
        assert!(HedcsEngine::preprocess(g.clone(), EngineConfig::new(1, 1, 0.05)).is_err());
        assert!(HedcsEngine::preprocess(g.clone(), EngineConfig::new(1, 3, 0.1)).is_err());
        assert!(HedcsEngine::preprocess(g, EngineConfig::new(1, 3, 0.05)).is_ok());
    }

    #[test]
    fn empty_graph_preprocess() {
        let g = RankedDynamicGraph::new(5, 4, 10, 0);
        let e = HedcsEngine::preprocess(g, EngineConfig::new(2, 4, 0.05)).unwrap();
        assert!(e.current_matching().is_empty());
        for i in 1..=2 {
            assert_eq!(e.h_len(i), 0);
        }
        for i in 2..=3 {
            assert_eq!(e.uncovered_len(i), 0);
        }
    }

    #[test]
    fn k_zero_matches_everything() {
        let mut g = RankedDynamicGraph::new(6, 5, 15, 0);
        for (a, b) in [(0, 1), (2, 3), (4, 5), (1, 2)] {
            g.insert_edge(ek(a, b)).unwrap();
        }
        let e = HedcsEngine::preprocess(g, EngineConfig::new(0, 4, 0.05)).unwrap();
        assert_eq!(e.current_matching().len(), 3);
    }

    #[test]
    fn single_edge_lands_in_h_or_u() {
        for seed in 0..20 {
            let mut g = RankedDynamicGraph::new(2, 4, 1, seed);
            g.insert_edge(ek(0, 1)).unwrap();
            let e = HedcsEngine::preprocess(g, EngineConfig::new(1, 3, 0.05)).unwrap();
            let in_g1 = e.graph().in_level(ek(0, 1), 1);
            assert_eq!(e.h_len(1), in_g1 as usize);
            assert_eq!(e.uncovered_len(2), !in_g1 as usize);
            assert_eq!(e.current_matching().len(), 1);
        }
    }

    #[test]
    fn ranks_at_top_leave_h_empty() {
        // Δ = 4 with ε = 0.05 gives p_1 = 0.025; force every rank above it.
        let mut g = RankedDynamicGraph::new(20, 4, 40, 0);
        let mut count = 0;
        'outer: for a in 0..20u32 {
            for b in a + 1..20 {
                if count == 20 {
                    break 'outer;
                }
                if g.degree(a) < 3 && g.degree(b) < 3 {
                    g.insert_with_rank(ek(a, b), EdgeRank(u64::MAX - count));
                    count += 1;
                }
            }
        }
        let e = HedcsEngine::preprocess(g, EngineConfig::new(1, 3, 0.05)).unwrap();
        assert_eq!(e.h_len(1), 0);
        assert_eq!(e.uncovered_len(2), 20);
        assert!(e.current_matching().is_matching_of(&e.graph().full()));
    }

    #[test]
    fn deleting_matched_edge_shrinks_m() {
        let mut g = RankedDynamicGraph::new(6, 5, 15, 4);
        for (a, b) in [(0, 1), (2, 3), (4, 5)] {
            g.insert_edge(ek(a, b)).unwrap();
        }
        let mut e = HedcsEngine::preprocess(g, EngineConfig::new(1, 3, 0.05)).unwrap();
        assert_eq!(e.current_matching().len(), 3);
        let r = e.apply_update(UpdateKind::Delete, ek(2, 3)).unwrap();
        // Level 2 has threshold ⌈0.05·3/1⌉ = 1 and fires first; level 1
        // needs ⌈0.05·(μ_1+1)/p_1⌉ ≥ 3.
        assert_eq!(r.triggered_level, Some(2));
        assert_eq!(r.matching_size, 2);
        assert!(e.current_matching().is_matching_of(&e.graph().full()));
    }

    #[test]
    fn insert_above_all_levels_enters_u2() {
        let g = RankedDynamicGraph::new(4, 1 << 20, 6, 0);
        let mut e = HedcsEngine::preprocess(g, EngineConfig::new(1, 3, 0.05)).unwrap();
        // p_1 = 0.05/1024 is tiny; with this seed the rank is above it.
        e.apply_update(UpdateKind::Insert, ek(0, 1)).unwrap();
        assert!(!e.graph().in_level(ek(0, 1), 1));
        assert_eq!(e.uncovered(2), vec![ek(0, 1)]);
    }
}
