//! Double-exponential (tanh-sinh) quadrature.
//!
//! Used for normalization checks of lifetime densities and for the radial
//! integrals behind the validation suites. Endpoint singularities of
//! integrable power type are handled without special treatment.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate}, last change {change:e})")]
    NoConvergence { estimate: f64, change: f64, tol: f64 },
    #[error("invalid integration interval [{a}, {b}]")]
    Interval { a: f64, b: f64 },
}

const MAX_LEVEL: u32 = 12;
const MIN_LEVEL: u32 = 4;
const T_MAX: f64 = 6.5;

/// `∫_a^b f(x) dx` by tanh-sinh quadrature with step halving until two
/// successive estimates agree to relative tolerance `tol`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadratureError::Interval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let half = 0.5 * (b - a);
    // Node at parameter t: distance from the nearer endpoint is half * 2/(e^{2u}+1).
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let gap = half * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let x = if t < 0.0 { a + gap } else { b - gap };
        if x <= a || x >= b {
            return 0.0;
        }
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = half * h * sum;
    let mut change = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        // Only the odd multiples of the new step are new nodes.
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = half * h * sum;
        change = (next - estimate).abs();
        estimate = next;
        if level >= MIN_LEVEL && change <= tol * estimate.abs().max(f64::MIN_POSITIVE) {
            return Ok(estimate);
        }
    }
    Err(QuadratureError::NoConvergence { estimate, change, tol })
}

/// `∫_a^∞ f(x) dx` through `x = a + s/(1-s)` on `s ∈ [0, 1)`.
pub fn tanh_sinh_semi_infinite<F>(f: F, a: f64, tol: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if !a.is_finite() {
        return Err(QuadratureError::Interval { a, b: f64::INFINITY });
    }
    tanh_sinh(
        |s| {
            let one_minus = 1.0 - s;
            f(a + s / one_minus) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        tol,
    )
}
