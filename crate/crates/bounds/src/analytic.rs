use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::{check_params, BoundsError};

/// Largest k accepted by `check_h_recurrence`.
pub const EXACT_H_MAX_K: usize = 12;

/// Above this k, h(k) < 2^−1074 and `analytic_alpha` skips the exact value.
const EXACT_ALPHA_MAX_K: usize = 6;

/// `2f / (2f + 1)`.
pub fn alpha_from_f(f: f64) -> f64 {
    2.0 * f / (2.0 * f + 1.0)
}

/// `(β⁻/(β−1)) / (β⁻/(β−1) + 1)`.
pub fn trivial_alpha(k: usize, beta: u32, beta_minus: u32) -> Result<f64, BoundsError> {
    check_params(k.max(1), beta, beta_minus)?;
    let ratio = beta_minus as f64 / (beta - 1) as f64;
    Ok(ratio / (ratio + 1.0))
}

fn pow2_inv(bits: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << bits)
}

fn h_exact(k: usize) -> BigRational {
    pow2_inv(4u64.pow(k as u32))
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticAlpha {
    pub value: f64,
    /// `1/2 + h(k)/6 − 2δ/3`, when k is small enough to hold exactly.
    #[serde(skip)]
    pub exact: Option<BigRational>,
    /// The bound exceeds 1/2 but the f64 value has rounded to 1/2.
    pub underflow: bool,
    /// `log2 h(k) = −4^k`.
    pub log2_h: f64,
}

/// `1/2 + h(k)/6 − (2/3)δ` with `h(k) = 2^(−2^(2k))`.
pub fn analytic_alpha(k: usize, delta: f64) -> Result<AnalyticAlpha, BoundsError> {
    if k == 0 {
        return Err(BoundsError::InvalidParams("k must be at least 1".into()));
    }
    if !(0.0..=0.2).contains(&delta) {
        return Err(BoundsError::InvalidParams(format!("delta {delta} outside [0, 0.2]")));
    }
    let log2_h = -(4f64.powi(k as i32));
    if k > EXACT_ALPHA_MAX_K {
        // Any positive f64 exceeds h(k)/4 here.
        if delta > 0.0 {
            return Err(BoundsError::Domain(format!("h({k}) - 4*delta < 0 for delta = {delta}")));
        }
        return Ok(AnalyticAlpha { value: 0.5, exact: None, underflow: true, log2_h });
    }
    let h = h_exact(k);
    let d = BigRational::from_float(delta).expect("finite delta");
    let four = BigRational::from_integer(4.into());
    if (&h - &d * &four).is_negative() {
        return Err(BoundsError::Domain(format!("h({k}) - 4*delta < 0 for delta = {delta}")));
    }
    let half = BigRational::new(1.into(), 2.into());
    let exact = &half + &h / BigRational::from_integer(6.into()) - &d * BigRational::new(2.into(), 3.into());
    let value = exact.to_f64().unwrap_or(0.5);
    let underflow = exact > half && value <= 0.5;
    Ok(AnalyticAlpha { value, exact: Some(exact), underflow, log2_h })
}

#[derive(Clone, Debug, Serialize)]
pub struct HRecurrenceRow {
    pub k: usize,
    pub holds: bool,
    /// `(h(k−1) − 12√h(k) − h(k)) / h(k−1)`.
    pub relative_margin: f64,
}

/// Checks `h(k−1) − 12√h(k) ≥ h(k)` for k = 2..=k_max. With a = 4^(k−1)
/// every term is a power of two, so scaling by 2^(4a) leaves the integer
/// test `2^(3a) − 12·2^(2a) − 1 > 0`.
pub fn check_h_recurrence(k_max: usize) -> Result<Vec<HRecurrenceRow>, BoundsError> {
    if k_max < 2 {
        return Err(BoundsError::InvalidParams("k_max must be at least 2".into()));
    }
    if k_max > EXACT_H_MAX_K {
        return Err(BoundsError::InvalidParams(format!("k_max above {EXACT_H_MAX_K}")));
    }
    Ok((2..=k_max)
        .map(|k| {
            let a = 4u64.pow(k as u32 - 1);
            let scaled = (BigInt::one() << (3 * a)) - (BigInt::from(12) << (2 * a)) - BigInt::one();
            let rel = 1.0 - 12.0 * (-(a as f64)).exp2() - (-3.0 * a as f64).exp2();
            HRecurrenceRow { k, holds: scaled.is_positive(), relative_margin: rel }
        })
        .collect())
}
