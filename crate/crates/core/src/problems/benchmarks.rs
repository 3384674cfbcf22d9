//! Benchmark problems with the explicit solution `(1 - |x|²)_+^{k+α/2}`.

use std::f64::consts::LN_2;
use std::sync::Arc;

use crate::error::Result;
use crate::field::{norm_sq, Constant, RadialVector, SharedScalar, SharedVector};
use crate::kernels::BallGeometry;
use crate::specfun::{gamma, hyp2f1, ln_gamma, Hyp2f1Params};

use super::{MultiIndex, PdeProblem, PolynomialNonlinearity};

pub(crate) fn phi_from_norm_sq(r2: f64, exponent: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2).powf(exponent)
    }
}

/// `Φ_{k,α}(x) = (1 - |x|²)_+^{k+α/2}`.
pub fn phi_k_alpha(x: &[f64], k: u32, alpha: f64) -> f64 {
    phi_from_norm_sq(norm_sq(x), k as f64 + alpha / 2.0)
}

/// `b·∇Φ_{k,α}` for `b(x) = (1 - |x|²) x`, i.e. `-(2k+α)|x|²(1-|x|²)^{k+α/2}` inside the ball.
pub fn radial_derivative_k_alpha(x: &[f64], k: u32, alpha: f64) -> f64 {
    let r2 = norm_sq(x);
    -(2.0 * k as f64 + alpha) * r2 * phi_from_norm_sq(r2, k as f64 + alpha / 2.0)
}

/// `Ψ_{k,α} = -Δ_α Φ_{k,α}` with its Gamma-function prefactors evaluated once.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiProfile {
    k: u32,
    alpha: f64,
    dim: usize,
    interior_prefactor: f64,
    exterior_prefactor: f64,
}

impl PsiProfile {
    pub fn new(k: u32, alpha: f64, dim: usize) -> Result<Self> {
        BallGeometry::unit(dim, alpha)?;
        let (kf, d) = (k as f64, dim as f64);
        let common = alpha * LN_2 + ln_gamma((d + alpha) / 2.0)? + ln_gamma(kf + 1.0 + alpha / 2.0)?;
        let interior_prefactor = (common - ln_gamma(kf + 1.0)? - ln_gamma(d / 2.0)?).exp();
        let exterior_prefactor = (common - ln_gamma(kf + 1.0 + (d + alpha) / 2.0)?).exp() / gamma(-alpha / 2.0)?;
        Ok(Self { k, alpha, dim, interior_prefactor, exterior_prefactor })
    }

    pub fn at_center(&self) -> f64 {
        self.interior_prefactor
    }

    /// Value as a function of `|x|²`; `NaN` if the hypergeometric series fails.
    pub fn value_at_norm_sq(&self, r2: f64) -> f64 {
        let (kf, d, a) = (self.k as f64, self.dim as f64, self.alpha);
        if r2 <= 1.0 {
            let series = hyp2f1(Hyp2f1Params::new((d + a) / 2.0, -kf, d / 2.0, r2));
            self.interior_prefactor * series.unwrap_or(f64::NAN)
        } else {
            let series = hyp2f1(Hyp2f1Params::new((d + a) / 2.0, (2.0 + a) / 2.0, kf + 1.0 + (d + a) / 2.0, 1.0 / r2));
            self.exterior_prefactor * r2.powf(-(d + a) / 2.0) * series.unwrap_or(f64::NAN)
        }
    }
}

/// `Ψ_{k,α}(x)`; recomputes the prefactors, so prefer [`PsiProfile`] in loops.
pub fn psi_k_alpha(x: &[f64], k: u32, alpha: f64, dim: usize) -> Result<f64> {
    Ok(PsiProfile::new(k, alpha, dim)?.value_at_norm_sq(norm_sq(x)))
}

fn direction_field() -> SharedVector {
    Arc::new(RadialVector::new(|r2: f64| 1.0 - r2))
}

fn exact_fields(k: u32, alpha: f64) -> (SharedScalar, SharedScalar) {
    let value: SharedScalar = Arc::new(move |x: &[f64]| phi_k_alpha(x, k, alpha));
    let directional: SharedScalar = Arc::new(move |x: &[f64]| radial_derivative_k_alpha(x, k, alpha));
    (value, directional)
}

/// `Δ_α u + Ψ + (2k+α)|x|²(1-|x|²)^{k+α/2} + (1-|x|²) x·∇u = 0` on the unit ball, `u = 0` outside.
pub fn make_linear_gradient_problem(k: u32, alpha: f64, dim: usize) -> Result<PdeProblem> {
    let psi = Arc::new(PsiProfile::new(k, alpha, dim)?);
    let source: SharedScalar = Arc::new(move |x: &[f64]| {
        let r2 = norm_sq(x);
        psi.value_at_norm_sq(r2) + (2.0 * k as f64 + alpha) * r2 * phi_from_norm_sq(r2, k as f64 + alpha / 2.0)
    });
    let nonlinearity = PolynomialNonlinearity::new(
        vec![(MultiIndex::new(vec![0, 0]), source), (MultiIndex::new(vec![0, 1]), Arc::new(Constant(1.0)))],
        vec![direction_field()],
    )?;
    let (exact, directional) = exact_fields(k, alpha);
    Ok(PdeProblem::new("linear-gradient", BallGeometry::unit(dim, alpha)?, Arc::new(Constant(0.0)), nonlinearity)?
        .with_exact(exact, vec![directional]))
}

/// `Δ_α u + Ψ - (2k+α)²|x|⁴(1-|x|²)^{2k+α} + ((1-|x|²) x·∇u)² = 0` on the unit ball, `u = 0` outside.
///
/// The source carries a minus sign so that `Φ_{k,α}` solves the equation.
pub fn make_nonlinear_gradient_problem(k: u32, alpha: f64, dim: usize) -> Result<PdeProblem> {
    let psi = Arc::new(PsiProfile::new(k, alpha, dim)?);
    let source: SharedScalar = Arc::new(move |x: &[f64]| {
        let r2 = norm_sq(x);
        let g = (2.0 * k as f64 + alpha) * r2 * phi_from_norm_sq(r2, k as f64 + alpha / 2.0);
        psi.value_at_norm_sq(r2) - g * g
    });
    let nonlinearity = PolynomialNonlinearity::new(
        vec![(MultiIndex::new(vec![0, 0]), source), (MultiIndex::new(vec![0, 2]), Arc::new(Constant(1.0)))],
        vec![direction_field()],
    )?;
    let (exact, directional) = exact_fields(k, alpha);
    Ok(PdeProblem::new("nonlinear-gradient", BallGeometry::unit(dim, alpha)?, Arc::new(Constant(0.0)), nonlinearity)?
        .with_exact(exact, vec![directional]))
}
