//! Lower bounds on the approximation ratio of a HEDCS: the factor-revealing
//! LP, its interchange-format export, and the closed-form bounds.

mod analytic;
mod export;
mod lp;
mod profile;
pub mod simplex;

use thiserror::Error;

pub use analytic::{
    alpha_from_f, analytic_alpha, check_h_recurrence, trivial_alpha, AnalyticAlpha, HRecurrenceRow, EXACT_H_MAX_K,
};
pub use export::{export_lp_file, parse_lp, write_lp, LpChecker, LpStats, ParsedLp, ParsedRow};
pub use lp::{
    build_lp, build_lp_with_cap, lp_size, solve_lp, solve_lp_with, verify_solution, LpInstance, LpRow, LpSize,
    LpSolution, LpStatus, RowKind, Triplet, DEFAULT_VAR_CAP,
};
pub use profile::{profile_name, Profiles};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("LP has {vars} variables, above the cap of {cap}")]
    SizeExceeded { vars: u128, cap: u128 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("LP parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Checks k ≥ 1 and β > β⁻ ≥ 1.
pub(crate) fn check_params(k: usize, beta: u32, beta_minus: u32) -> Result<(), BoundsError> {
    if k == 0 {
        return Err(BoundsError::InvalidParams("k must be at least 1".into()));
    }
    if !(beta > beta_minus && beta_minus >= 1) {
        return Err(BoundsError::InvalidParams(format!(
            "need beta > beta_minus >= 1, got beta = {beta}, beta_minus = {beta_minus}"
        )));
    }
    Ok(())
}
