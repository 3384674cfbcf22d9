//! Scalar special functions used by the kernels and the benchmark solutions.
//!
//! All functions here are pure and deterministic.

mod beta;
mod gamma;
mod hypergeometric;

pub use beta::reg_inc_beta;
pub(crate) use beta::reg_inc_beta_split;
pub use gamma::{gamma, ln_beta, ln_gamma, recip_gamma, reg_lower_gamma};
pub use hypergeometric::{hyp2f1, Hyp2f1Params, SERIES_TAIL_TOLERANCE, SERIES_TERM_BUDGET};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFunctionError {
    #[error("{func}: domain error: {detail}")]
    Domain { func: &'static str, detail: String },
    #[error("{func}: series failed to converge within {terms} terms")]
    ConvergenceFailure { func: &'static str, terms: usize },
}

impl SpecialFunctionError {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Self::Domain { func, detail: detail.into() }
    }

    pub(crate) fn convergence(func: &'static str, terms: usize) -> Self {
        Self::ConvergenceFailure { func, terms }
    }
}

pub type SpecialResult<T> = Result<T, SpecialFunctionError>;

fn check_green_params(alpha: f64, d: u32) -> SpecialResult<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(SpecialFunctionError::domain("green_integral", format!("alpha = {alpha} outside (1, 2)")));
    }
    if d < 2 {
        return Err(SpecialFunctionError::domain("green_integral", format!("dimension d = {d} < 2")));
    }
    Ok(())
}

/// Radial integral `∫_0^r t^{α/2-1} (1+t)^{-d/2} dt` of the ball Green function.
///
/// Evaluated through `s = t/(1+t)` as `B(α/2, (d-α)/2) · I_{r/(1+r)}(α/2, (d-α)/2)`.
pub fn green_integral(r: f64, alpha: f64, d: u32) -> SpecialResult<f64> {
    check_green_params(alpha, d)?;
    if !(r >= 0.0) {
        return Err(SpecialFunctionError::domain("green_integral", format!("r = {r} must be nonnegative")));
    }
    let (a, b) = (alpha / 2.0, (d as f64 - alpha) / 2.0);
    let complete = ln_beta(a, b)?.exp();
    if r.is_infinite() {
        return Ok(complete);
    }
    let x = r / (1.0 + r);
    let y = 1.0 / (1.0 + r);
    Ok(complete * reg_inc_beta_split(x, y, a, b)?)
}

/// The `r → ∞` limit of [`green_integral`], the complete beta `B(α/2, (d-α)/2)`.
pub fn green_integral_limit(alpha: f64, d: u32) -> SpecialResult<f64> {
    check_green_params(alpha, d)?;
    Ok(ln_beta(alpha / 2.0, (d as f64 - alpha) / 2.0)?.exp())
}

/// Integrand of [`green_integral`].
pub fn green_integrand(t: f64, alpha: f64, d: u32) -> f64 {
    t.powf(alpha / 2.0 - 1.0) * (1.0 + t).powf(-(d as f64) / 2.0)
}
