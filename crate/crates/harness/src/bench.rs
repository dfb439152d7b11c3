use hedcs::engine::{EngineError, HedcsEngine, Mode};
use hedcs::graph::RankedDynamicGraph;
use hedcs::matching::UpdateKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::run::engine_config;
use crate::trace::{generate_trace, TraceError, TraceKind};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("need at least 3 strictly increasing deltas, got {0:?}")]
    Deltas(Vec<usize>),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchEngine {
    #[default]
    Hedcs,
    /// Charges one work unit per update; calibrates the fit.
    ConstantStub,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub k: usize,
    pub beta: usize,
    pub epsilon: f64,
    pub deltas: Vec<usize>,
    pub seed: u64,
    /// Vertex count shared by every Δ; 0 means twice the largest Δ.
    pub n: usize,
    /// Average degree is Δ divided by this.
    pub density_divisor: usize,
    /// Measured churn updates per Δ, after the fill phase.
    pub updates: usize,
    pub mode: Mode,
    pub engine: BenchEngine,
}

impl BenchSpec {
    pub fn new(k: usize, beta: usize, epsilon: f64, deltas: Vec<usize>, seed: u64) -> Self {
        Self {
            k,
            beta,
            epsilon,
            deltas,
            seed,
            n: 0,
            density_divisor: 2,
            updates: 20_000,
            mode: Mode::Amortized,
            engine: BenchEngine::Hedcs,
        }
    }

    fn vertex_count(&self) -> usize {
        if self.n > 0 {
            self.n
        } else {
            2 * self.deltas.iter().copied().max().unwrap_or(1)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchPoint {
    pub delta: usize,
    pub n: usize,
    pub m_cap: usize,
    /// Edges loaded before preprocessing.
    pub initial_edges: usize,
    pub updates: usize,
    pub total_work: u64,
    pub work_per_update: f64,
    /// Per level 1..=k+1, during the measured updates.
    pub recomputations: Vec<u64>,
    /// `|U_i|` for i = 1..=k+1 after the last update.
    pub final_uncovered: Vec<usize>,
    pub final_matching_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogLogFit {
    pub exponent: f64,
    pub intercept: f64,
    /// `ln y − (intercept + exponent·ln x)` per point.
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub spec: BenchSpec,
    pub points: Vec<BenchPoint>,
    pub fit: LogLogFit,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_loglog(points: &[(f64, f64)]) -> LogLogFit {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let exponent = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - exponent * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + exponent * x)).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LogLogFit { exponent, intercept, residuals, r_squared }
}

fn measure(spec: &BenchSpec, delta: usize) -> Result<BenchPoint, BenchError> {
    let n = spec.vertex_count();
    let m_cap = (n * delta / (2 * spec.density_divisor.max(1))).max(1);
    // Fill phase: the churn generator grows to 90% of m_cap first.
    let fill_target = (m_cap.min(n * delta.min(n - 1) / 2) * 9 / 10).max(1);
    let budget = 2 * fill_target + spec.updates + 1000;
    let trace = generate_trace(TraceKind::Churn, n, delta, m_cap, budget, spec.seed ^ delta as u64)?;
    let mut present = 0usize;
    let mut split = trace.len();
    for (i, ev) in trace.events.iter().enumerate() {
        match ev.op {
            UpdateKind::Insert => present += 1,
            UpdateKind::Delete => present -= 1,
        }
        if present >= fill_target {
            split = i + 1;
            break;
        }
    }
    let mut graph = RankedDynamicGraph::new(n, delta, m_cap, spec.seed);
    for ev in &trace.events[..split] {
        let e = ev.edge().map_err(EngineError::from)?;
        match ev.op {
            UpdateKind::Insert => graph.insert_edge(e).map_err(EngineError::from)?,
            UpdateKind::Delete => graph.delete_edge(e).map_err(EngineError::from)?,
        };
    }
    let initial_edges = graph.edge_count();
    let tail = &trace.events[split..(split + spec.updates).min(trace.len())];
    let (mut recomputations, mut final_uncovered, mut final_matching_size) = (Vec::new(), Vec::new(), 0);
    let total_work = match spec.engine {
        BenchEngine::ConstantStub => tail.len() as u64,
        BenchEngine::Hedcs => {
            let mut engine = HedcsEngine::preprocess(graph, engine_config(spec.k, spec.beta, spec.epsilon, spec.mode))?;
            let before: Vec<u64> = engine.level_stats().iter().map(|s| s.recomputations).collect();
            let mut work = 0;
            for ev in tail {
                work += engine.apply_update(ev.op, ev.edge().map_err(EngineError::from)?)?.work_units;
            }
            recomputations = engine.level_stats().iter().zip(&before).map(|(s, b)| s.recomputations - b).collect();
            final_uncovered = (1..=spec.k + 1).map(|i| engine.uncovered_len(i)).collect();
            final_matching_size = engine.current_matching().len();
            work
        }
    };
    Ok(BenchPoint {
        delta,
        n,
        m_cap,
        initial_edges,
        updates: tail.len(),
        total_work,
        work_per_update: total_work as f64 / tail.len().max(1) as f64,
        recomputations,
        final_uncovered,
        final_matching_size,
    })
}

/// Mean work per churn update at each Δ, after loading a graph of average
/// degree Δ/density_divisor, and the log-log slope through the points.
pub fn scaling_bench(spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    if spec.deltas.len() < 3 || spec.deltas.windows(2).any(|w| w[0] >= w[1]) || spec.deltas[0] == 0 {
        return Err(BenchError::Deltas(spec.deltas.clone()));
    }
    let points = spec.deltas.iter().map(|&d| measure(spec, d)).collect::<Result<Vec<_>, _>>()?;
    let xy: Vec<(f64, f64)> =
        points.iter().map(|p| (p.delta as f64, p.work_per_update.max(f64::MIN_POSITIVE))).collect();
    Ok(BenchReport { spec: spec.clone(), points, fit: fit_loglog(&xy) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [2.0, 8.0, 32.0, 128.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(0.75))).collect();
        let fit = fit_loglog(&pts);
        assert!((fit.exponent - 0.75).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn stub_is_flat() {
        let mut spec = BenchSpec::new(1, 4, 0.05, vec![8, 16, 32], 5);
        spec.engine = BenchEngine::ConstantStub;
        spec.updates = 500;
        let rep = scaling_bench(&spec).unwrap();
        assert!(rep.fit.exponent.abs() < 1e-9);
        assert!(rep.points.iter().all(|p| p.updates == 500));
    }

    #[test]
    fn rejects_short_lists() {
        assert!(scaling_bench(&BenchSpec::new(1, 4, 0.05, vec![8, 16], 1)).is_err());
        assert!(scaling_bench(&BenchSpec::new(1, 4, 0.05, vec![8, 8, 16], 1)).is_err());
    }
}
