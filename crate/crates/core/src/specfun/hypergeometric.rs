//! Gauss hypergeometric function `₂F₁(a, b; c; z)` for real arguments.
//!
//! Evaluation order:
//! 1. terminating series when `a` or `b` is a non-positive integer (exact finite sum, any `z`);
//! 2. `z = 0` gives 1, `z ≥ 1` is rejected;
//! 3. `z < -0.95` is mapped into `(0, 1)` with the Pfaff transformation;
//! 4. `z ∈ (0.95, 1)` uses the linear transformation toward `1 - z`;
//! 5. everything else is summed as a power series.

use serde::{Deserialize, Serialize};

use super::gamma::{gamma, recip_gamma};
use super::{SpecialFunctionError, SpecialResult};

/// Term budget for the power series.
pub const SERIES_TERM_BUDGET: usize = 10_000;
/// Relative size of the last term at which the series is accepted.
pub const SERIES_TAIL_TOLERANCE: f64 = 1e-14;

const TRANSFORM_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyp2f1Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

impl Hyp2f1Params {
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Self {
        Self { a, b, c, z }
    }
}

fn non_positive_integer(x: f64) -> Option<u64> {
    (x <= 0.0 && x.fract() == 0.0 && x > -1e15).then(|| (-x) as u64)
}

/// Exact finite sum for a terminating series of degree `n`.
fn terminating(a: f64, b: f64, c: f64, z: f64, n: u64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
    }
    sum
}

fn power_series(a: f64, b: f64, c: f64, z: f64) -> SpecialResult<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..SERIES_TERM_BUDGET {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Once the term ratio settles below 1 the tail is bounded by a geometric series.
        let ratio = ((a + kf + 1.0) * (b + kf + 1.0) / ((c + kf + 1.0) * (kf + 2.0)) * z).abs();
        if ratio < 1.0 && term.abs() / (1.0 - ratio) <= SERIES_TAIL_TOLERANCE * sum.abs() {
            return Ok(sum);
        }
    }
    Err(SpecialFunctionError::convergence("hyp2f1", SERIES_TERM_BUDGET))
}

/// Linear transformation toward `1 - z`, valid when `c - a - b` is not an integer.
fn one_minus_z_transform(a: f64, b: f64, c: f64, z: f64) -> SpecialResult<f64> {
    let s = c - a - b;
    let w = 1.0 - z;
    let gc = gamma(c)?;
    let first = if recip_gamma(c - a) == 0.0 || recip_gamma(c - b) == 0.0 {
        0.0
    } else {
        gc * gamma(s)? * recip_gamma(c - a) * recip_gamma(c - b) * power_series(a, b, 1.0 - s, w)?
    };
    let second = if recip_gamma(a) == 0.0 || recip_gamma(b) == 0.0 {
        0.0
    } else {
        w.powf(s) * gc * gamma(-s)? * recip_gamma(a) * recip_gamma(b) * power_series(c - a, c - b, 1.0 + s, w)?
    };
    Ok(first + second)
}

/// Gauss hypergeometric function `₂F₁(a, b; c; z)`.
pub fn hyp2f1(p: Hyp2f1Params) -> SpecialResult<f64> {
    let Hyp2f1Params { a, b, c, z } = p;
    if ![a, b, c, z].iter().all(|v| v.is_finite()) {
        return Err(SpecialFunctionError::domain("hyp2f1", format!("non-finite argument in {p:?}")));
    }
    if let Some(nc) = non_positive_integer(c) {
        // Admissible only if the series terminates before the zero denominator.
        let before_pole = [a, b]
            .iter()
            .filter_map(|&v| non_positive_integer(v))
            .any(|n| n < nc);
        if !before_pole {
            return Err(SpecialFunctionError::domain("hyp2f1", format!("c = {c} is a non-positive integer")));
        }
    }
    let degree = match (non_positive_integer(a), non_positive_integer(b)) {
        (Some(n), Some(m)) => Some(n.min(m)),
        (Some(n), None) | (None, Some(n)) => Some(n),
        (None, None) => None,
    };
    if let Some(n) = degree {
        return Ok(terminating(a, b, c, z, n));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z >= 1.0 {
        return Err(SpecialFunctionError::domain("hyp2f1", format!("z = {z} ≥ 1 in a non-terminating case")));
    }
    if z < -TRANSFORM_THRESHOLD {
        // Pfaff: ₂F₁(a,b;c;z) = (1-z)^{-a} ₂F₁(a, c-b; c; z/(z-1)), argument in (0.487, 1).
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * hyp2f1(Hyp2f1Params::new(a, c - b, c, w))?);
    }
    if z > TRANSFORM_THRESHOLD {
        let s = c - a - b;
        if s.fract() != 0.0 {
            return one_minus_z_transform(a, b, c, z);
        }
        // Integer c - a - b: the connection formula degenerates; fall back to
        // the direct series, which either converges within budget or errors.
    }
    power_series(a, b, c, z)
}
