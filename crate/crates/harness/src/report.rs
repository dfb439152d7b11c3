use std::path::{Path, PathBuf};

use hedcs_bounds::{
    alpha_from_f, analytic_alpha, build_lp, export_lp_file, lp_size, solve_lp, trivial_alpha, BoundsError, LpStats,
    LpStatus,
};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticReport {
    pub delta: f64,
    pub value: f64,
    pub underflow: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub k: usize,
    pub beta: u32,
    pub beta_minus: u32,
    pub status: LpStatus,
    pub r: Option<f64>,
    pub alpha: Option<f64>,
    /// Column count, including n_P, n_Q and r.
    pub vars: u128,
    /// Row count; absent when the LP was neither built nor exported.
    pub constraints: Option<u64>,
    pub max_residual: Option<f64>,
    pub trivial_alpha: f64,
    /// `1/2 + h(k)/6 − 2δ/3` with `δ = 1 − β⁻/β`, when defined.
    pub analytic_alpha: Option<AnalyticReport>,
    pub lp_file: Option<PathBuf>,
    pub lp_file_stats: Option<LpStats>,
}

/// Builds and solves LP(k, β, β⁻). Instances above the size cap are written
/// to `lp_out` instead, when given.
pub fn bounds_report(k: usize, beta: u32, beta_minus: u32, lp_out: Option<&Path>) -> Result<BoundsReport, BoundsError> {
    let trivial = trivial_alpha(k, beta, beta_minus)?;
    let delta = 1.0 - beta_minus as f64 / beta as f64;
    let analytic = match analytic_alpha(k, delta) {
        Ok(a) => Some(AnalyticReport { delta, value: a.value, underflow: a.underflow }),
        Err(BoundsError::Domain(_) | BoundsError::InvalidParams(_)) => None,
        Err(e) => return Err(e),
    };
    let size = lp_size(k, beta);
    let mut report = BoundsReport {
        k,
        beta,
        beta_minus,
        status: LpStatus::SizeExceeded,
        r: None,
        alpha: None,
        vars: size.vars,
        constraints: None,
        max_residual: None,
        trivial_alpha: trivial,
        analytic_alpha: analytic,
        lp_file: None,
        lp_file_stats: None,
    };
    match build_lp(k, beta, beta_minus) {
        Ok(inst) => {
            let sol = solve_lp(&inst);
            report.status = sol.status;
            report.constraints = Some(inst.rows.len() as u64);
            if sol.status == LpStatus::Optimal {
                report.r = Some(sol.r);
                report.alpha = Some(alpha_from_f(sol.r));
                report.max_residual = Some(sol.max_residual);
            }
            if let Some(path) = lp_out {
                report.lp_file_stats = Some(export_lp_file(k, beta, beta_minus, path)?);
                report.lp_file = Some(path.to_path_buf());
            }
        }
        Err(BoundsError::SizeExceeded { .. }) => {
            if let Some(path) = lp_out {
                let stats = export_lp_file(k, beta, beta_minus, path)?;
                report.constraints = Some(stats.rows);
                report.lp_file_stats = Some(stats);
                report.lp_file = Some(path.to_path_buf());
            }
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}
