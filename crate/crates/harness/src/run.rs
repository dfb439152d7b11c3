use std::collections::BTreeSet;
use std::io::Write;

use hedcs::engine::{AddLayerRecord, EngineConfig, EngineError, HedcsEngine, Mode};
use hedcs::graph::{EdgeKey, RankedDynamicGraph, StaticGraph};
use hedcs::matching::{maximum_matching_exact_bounded, UpdateKind};
use hedcs::sparsify::{capped_delta_prime, MarkedSubgraph, SparsifyError};
use hedcs::verify::{check_state_invariants, is_valid_hedcs, witness_of, Verdict};
use serde::Serialize;
use thiserror::Error;

use crate::trace::{Trace, TraceHeader};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Sparsify(#[from] SparsifyError),
    #[error("{check} failed after update {update}: {violations:?}")]
    Invariant { check: &'static str, update: u64, violations: Vec<String> },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub engine: EngineConfig,
    /// Seed for the engine's edge ranks.
    pub seed: u64,
    /// Run the state invariant checks every this many updates (0 = never).
    pub check_every: u64,
    /// Compute μ(G) exactly every this many updates (0 = never).
    pub oracle_every: u64,
    /// Ratios count towards min/median only when μ(G) ≥ mu_prime.
    pub mu_prime: usize,
    /// Route updates through the degree cap with this ε.
    pub sparsify: Option<f64>,
    /// Check the HEDCS definition whenever rebuilt levels go live.
    pub verify_hedcs: bool,
}

impl RunConfig {
    pub fn new(engine: EngineConfig, seed: u64) -> Self {
        Self { engine, seed, check_every: 0, oracle_every: 0, mu_prime: 20, sparsify: None, verify_hedcs: false }
    }
}

/// One CSV row. Per-level columns hold `;`-separated values for levels
/// 1, 2, … in order.
#[derive(Clone, Debug, Serialize)]
pub struct MetricsRecord {
    pub update_index: u64,
    pub op: UpdateKind,
    pub u: u32,
    pub v: u32,
    pub matching_size: usize,
    pub mu_exact: Option<usize>,
    pub ratio: Option<f64>,
    pub mu_sparsified: Option<usize>,
    pub work_units: u64,
    pub triggered_level: Option<usize>,
    pub applied_level: Option<usize>,
    pub forwarded: Option<usize>,
    pub u_sizes: String,
    pub h_sizes: String,
    pub counters: String,
    pub mu_levels: String,
    pub s_levels: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AddLayerSummary {
    pub calls: u64,
    pub insertion_cap_violations: u64,
    pub step_violations: u64,
    pub phi_cap_violations: u64,
    pub phi_start_negative: u64,
    /// Cap violations on calls where μ_i = 0, so the cap itself is 0.
    pub phi_cap_violations_zero_mu: u64,
    pub examples: Vec<String>,
}

impl AddLayerSummary {
    pub fn violations(&self) -> u64 {
        self.insertion_cap_violations + self.step_violations + self.phi_cap_violations + self.phi_start_negative
    }

    fn absorb(&mut self, rec: &AddLayerRecord) {
        self.calls += 1;
        let cap = rec.potential_cap();
        let mut bad = false;
        if rec.insertions as i64 > cap {
            self.insertion_cap_violations += 1;
            bad = true;
        }
        if rec.min_phi_step.is_some_and(|s| s < 1) {
            self.step_violations += 1;
            bad = true;
        }
        if rec.phi_max > cap {
            self.phi_cap_violations += 1;
            if rec.mu == 0 {
                self.phi_cap_violations_zero_mu += 1;
            }
            bad = true;
        }
        if rec.phi_start < 0 {
            self.phi_start_negative += 1;
            bad = true;
        }
        if bad && self.examples.len() < 5 {
            self.examples.push(format!("{rec:?}"));
        }
    }

    pub fn merge(&mut self, other: &AddLayerSummary) {
        self.calls += other.calls;
        self.insertion_cap_violations += other.insertion_cap_violations;
        self.step_violations += other.step_violations;
        self.phi_cap_violations += other.phi_cap_violations;
        self.phi_start_negative += other.phi_start_negative;
        self.phi_cap_violations_zero_mu += other.phi_cap_violations_zero_mu;
        for e in &other.examples {
            if self.examples.len() < 5 {
                self.examples.push(e.clone());
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SparsifySummary {
    pub epsilon: f64,
    pub delta_prime: usize,
    pub max_forwarded: usize,
    pub max_tilde_degree: usize,
    /// Minimum of μ(G̃)/μ(G) over oracle checkpoints with μ(G) > 0.
    pub min_tilde_ratio: Option<f64>,
    pub tilde_ratio_checkpoints: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub updates: u64,
    pub final_edges: usize,
    pub final_matching_size: usize,
    pub checkpoints: u64,
    pub gated_checkpoints: u64,
    pub min_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
    pub min_ratio_ungated: Option<f64>,
    pub total_work: u64,
    pub max_work: u64,
    pub mean_work: f64,
    /// Per level 1..=k+1.
    pub recomputations: Vec<u64>,
    /// Per level 1..=k+1; null where μ_i was never positive.
    pub s_max: Vec<Option<f64>>,
    pub max_s: Option<f64>,
    pub invariant_checks: u64,
    pub hedcs_checks: u64,
    pub add_layer: AddLayerSummary,
    pub sparsify: Option<SparsifySummary>,
}

/// Everything `summary.json` holds.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutput {
    pub schema_version: u32,
    pub trace: TraceHeader,
    pub trace_events: usize,
    pub config: RunConfig,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn new(trace: &Trace, config: &RunConfig, summary: RunSummary) -> Self {
        let mut config = config.clone();
        // run_trace always records add_layer calls.
        config.engine.record_add_layers = true;
        Self { schema_version: 1, trace: trace.header, trace_events: trace.len(), config, summary }
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

fn verdict_lines(v: &Verdict) -> Vec<String> {
    v.violations.iter().take(20).map(|x| format!("{x:?}")).collect()
}

/// Replays `trace` through a fresh engine, writing one CSV row per update.
pub fn run_trace<W: Write>(trace: &Trace, cfg: &RunConfig, csv_out: W) -> Result<RunSummary, RunError> {
    let h = trace.header;
    let mut engine_cfg = cfg.engine.clone();
    engine_cfg.record_add_layers = true;
    let mut wrapper = match cfg.sparsify {
        Some(eps) => Some(MarkedSubgraph::new(h.n, capped_delta_prime(h.m_cap.max(1), eps)?)),
        None => None,
    };
    let delta = wrapper.as_ref().map_or(h.delta_cap, |w| h.delta_cap.min(w.delta_prime()));
    let graph = RankedDynamicGraph::new(h.n.max(2), delta.max(2), h.m_cap.max(1), cfg.seed);
    let mut engine = HedcsEngine::preprocess(graph, engine_cfg)?;
    let mut g_edges: BTreeSet<EdgeKey> = BTreeSet::new();

    let mut summary = RunSummary::default();
    if let Some(w) = &wrapper {
        summary.sparsify = Some(SparsifySummary {
            epsilon: cfg.sparsify.unwrap_or_default(),
            delta_prime: w.delta_prime(),
            ..Default::default()
        });
    }
    for rec in engine.take_add_layer_log() {
        summary.add_layer.absorb(&rec);
    }
    let mut gated = Vec::new();
    let mut csv = csv::Writer::from_writer(csv_out);
    let k = engine.k();

    for (i, ev) in trace.events.iter().enumerate() {
        let t = i as u64 + 1;
        let e = EdgeKey::new(ev.u, ev.v).map_err(EngineError::from)?;
        match ev.op {
            UpdateKind::Insert => g_edges.insert(e),
            UpdateKind::Delete => g_edges.remove(&e),
        };
        let forwarded = match wrapper.as_mut() {
            Some(w) => w.wrap_update(ev.op, e)?,
            None => vec![(ev.op, e)],
        };
        let (mut work, mut triggered, mut applied) = (0u64, None, None);
        for &(kind, fe) in &forwarded {
            let r = engine.apply_update(kind, fe)?;
            work += r.work_units;
            triggered = triggered.min(r.triggered_level).or(triggered).or(r.triggered_level);
            applied = applied.min(r.applied_level).or(applied).or(r.applied_level);
            if cfg.verify_hedcs && r.applied_level.is_some() {
                summary.hedcs_checks += 1;
                let verdict = is_valid_hedcs(&witness_of(&engine)).expect("engine witness is well-formed");
                if !verdict.is_valid() {
                    return Err(RunError::Invariant {
                        check: "is_valid_hedcs",
                        update: t,
                        violations: verdict_lines(&verdict),
                    });
                }
            }
        }
        if wrapper.is_some() {
            work += 1;
        }
        for rec in engine.take_add_layer_log() {
            summary.add_layer.absorb(&rec);
        }
        summary.total_work += work;
        summary.max_work = summary.max_work.max(work);

        if cfg.check_every > 0 && t.is_multiple_of(cfg.check_every) {
            summary.invariant_checks += 1;
            let verdict = check_state_invariants(&engine);
            if !verdict.is_valid() {
                return Err(RunError::Invariant {
                    check: "check_state_invariants",
                    update: t,
                    violations: verdict_lines(&verdict),
                });
            }
        }

        let matching_size = engine.current_matching().len();
        let (mut mu_exact, mut ratio, mut mu_sparsified) = (None, None, None);
        if cfg.oracle_every > 0 && t.is_multiple_of(cfg.oracle_every) {
            let g = StaticGraph::from_edges(h.n, g_edges.iter().copied());
            let mu = maximum_matching_exact_bounded(&g, usize::MAX).expect("unbounded").len();
            summary.checkpoints += 1;
            mu_exact = Some(mu);
            if mu > 0 {
                let r = matching_size as f64 / mu as f64;
                ratio = Some(r);
                summary.min_ratio_ungated = Some(summary.min_ratio_ungated.map_or(r, |m: f64| m.min(r)));
                if mu >= cfg.mu_prime {
                    gated.push(r);
                }
            }
            if let (Some(w), Some(ss)) = (&wrapper, summary.sparsify.as_mut()) {
                let gt = StaticGraph::from_edges(h.n, w.tilde_edges());
                let mt = maximum_matching_exact_bounded(&gt, usize::MAX).expect("unbounded").len();
                mu_sparsified = Some(mt);
                ss.max_tilde_degree = ss.max_tilde_degree.max(w.tilde_max_degree());
                if mu > 0 {
                    let r = mt as f64 / mu as f64;
                    ss.min_tilde_ratio = Some(ss.min_tilde_ratio.map_or(r, |m: f64| m.min(r)));
                    ss.tilde_ratio_checkpoints += 1;
                }
            }
        }
        if let (Some(w), Some(ss)) = (&wrapper, summary.sparsify.as_mut()) {
            ss.max_forwarded = ss.max_forwarded.max(forwarded.len());
            if cfg.check_every > 0 && t.is_multiple_of(cfg.check_every) {
                ss.max_tilde_degree = ss.max_tilde_degree.max(w.tilde_max_degree());
            }
        }

        let stats = engine.level_stats();
        csv.serialize(MetricsRecord {
            update_index: t,
            op: ev.op,
            u: ev.u,
            v: ev.v,
            matching_size,
            mu_exact,
            ratio,
            mu_sparsified,
            work_units: work,
            triggered_level: triggered,
            applied_level: applied,
            forwarded: wrapper.as_ref().map(|_| forwarded.len()),
            u_sizes: join((1..=k + 1).map(|i| engine.uncovered_len(i))),
            h_sizes: join((1..=k).map(|i| engine.h_len(i))),
            counters: join(engine.counters().iter()),
            mu_levels: join((1..=k + 1).map(|i| engine.maintained_mu(i))),
            s_levels: join(stats.iter().map(|s| s.s_last.map_or(String::new(), |x| x.to_string()))),
        })?;
    }
    csv.flush()?;

    summary.updates = trace.len() as u64;
    summary.final_edges = g_edges.len();
    summary.final_matching_size = engine.current_matching().len();
    summary.mean_work = if trace.is_empty() { 0.0 } else { summary.total_work as f64 / trace.len() as f64 };
    summary.recomputations = engine.level_stats().iter().map(|s| s.recomputations).collect();
    summary.s_max = engine.level_stats().iter().map(|s| s.s_max).collect();
    summary.max_s =
        summary.s_max.iter().flatten().copied().fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
    gated.sort_by(f64::total_cmp);
    summary.gated_checkpoints = gated.len() as u64;
    summary.min_ratio = gated.first().copied();
    summary.median_ratio = median(&gated);
    Ok(summary)
}

/// Convenience for tests and benchmarks: config with the given mode.
pub fn engine_config(k: usize, beta: usize, epsilon: f64, mode: Mode) -> EngineConfig {
    let mut c = EngineConfig::new(k, beta, epsilon);
    c.mode = mode;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceEvent;

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[1.0]), Some(1.0));
        assert_eq!(median(&[1.0, 2.0, 4.0, 8.0]), Some(3.0));
    }

    #[test]
    fn empty_trace() {
        let t = Trace::new(TraceHeader { n: 5, delta_cap: 2, m_cap: 4 });
        let mut out = Vec::new();
        let s = run_trace(&t, &RunConfig::new(EngineConfig::new(1, 4, 0.05), 1), &mut out).unwrap();
        assert!(out.is_empty());
        assert_eq!(s.updates, 0);
        assert_eq!(s.total_work, 0);
        assert_eq!(s.min_ratio, None);
    }

    #[test]
    fn insert_then_delete() {
        let e = EdgeKey::new(0, 1).unwrap();
        let mut t = Trace::new(TraceHeader { n: 2, delta_cap: 1, m_cap: 1 });
        t.events = vec![TraceEvent::insert(e), TraceEvent::delete(e)];
        let mut cfg = RunConfig::new(EngineConfig::new(1, 4, 0.05), 3);
        cfg.check_every = 1;
        cfg.oracle_every = 1;
        let s = run_trace(&t, &cfg, Vec::new()).unwrap();
        assert_eq!(s.final_matching_size, 0);
        assert_eq!(s.invariant_checks, 2);
    }
}
