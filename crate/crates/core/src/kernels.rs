//! Green and Poisson kernels of the fractional Laplacian on a centered ball,
//! their log-gradients in the pole, and the branch weights built from them.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dot, norm_sq, VectorField};
use crate::specfun::{gamma, green_integral, green_integrand, ln_gamma, reg_inc_beta};
use crate::stable::check_alpha;

/// Relative separation below which kernel evaluation is refused.
pub const DEGENERATE_SEPARATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    pub radius: f64,
    pub dim: usize,
    pub alpha: f64,
}

impl BallGeometry {
    pub fn new(radius: f64, dim: usize, alpha: f64) -> Result<Self> {
        let g = Self { radius, dim, alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn unit(dim: usize, alpha: f64) -> Result<Self> {
        Self::new(1.0, dim, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("radius", format!("radius {} must be positive and finite", self.radius)));
        }
        if self.dim < 2 {
            return Err(Error::invalid("dim", format!("dimension {} must be at least 2", self.dim)));
        }
        check_alpha(self.alpha)
    }

    fn d(&self) -> f64 {
        self.dim as f64
    }

    /// Green normalization `Γ(d/2) / (2^α π^{d/2} Γ(α/2)²)`.
    pub fn kappa(&self) -> f64 {
        let (d, a) = (self.d(), self.alpha);
        let ln = ln_gamma(d / 2.0).unwrap() - a * LN_2 - d / 2.0 * PI.ln() - 2.0 * ln_gamma(a / 2.0).unwrap();
        ln.exp()
    }

    /// Poisson normalization `Γ(d/2) π^{-d/2-1} sin(πα/2)`.
    pub fn poisson_constant(&self) -> f64 {
        let d = self.d();
        (ln_gamma(d / 2.0).unwrap() - (d / 2.0 + 1.0) * PI.ln()).exp() * (PI * self.alpha / 2.0).sin()
    }

    /// Constant `A(d, -α) = 2^α Γ((d+α)/2) / (π^{d/2} |Γ(-α/2)|)` of the fractional Laplacian.
    pub fn laplacian_constant(&self) -> f64 {
        let (d, a) = (self.d(), self.alpha);
        let ln = a * LN_2 + ln_gamma((d + a) / 2.0).unwrap() - d / 2.0 * PI.ln();
        ln.exp() / gamma(-a / 2.0).unwrap().abs()
    }

    /// Surface area of the unit sphere in `R^d`.
    pub fn sphere_area(&self) -> f64 {
        let d = self.d();
        2.0 * (d / 2.0 * PI.ln() - ln_gamma(d / 2.0).unwrap()).exp()
    }

    /// Closed-form `E[τ]` for the process started at the center.
    pub fn mean_exit_time_from_center(&self) -> f64 {
        let (d, a) = (self.d(), self.alpha);
        let ln = ln_gamma(d / 2.0).unwrap() + a * self.radius.ln()
            - a * LN_2
            - ln_gamma(1.0 + a / 2.0).unwrap()
            - ln_gamma((d + a) / 2.0).unwrap();
        ln.exp()
    }

    fn check_len(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Domain(format!("point has {} coordinates, expected {}", p.len(), self.dim)));
        }
        Ok(())
    }

    fn check_interior(&self, p: &[f64], what: &str) -> Result<f64> {
        self.check_len(p)?;
        let gap = self.radius * self.radius - norm_sq(p);
        if !(gap > 0.0) {
            return Err(Error::Domain(format!("{what} must lie in the open ball")));
        }
        Ok(gap)
    }

    fn separation_sq(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if s.sqrt() < DEGENERATE_SEPARATION * self.radius {
            return Err(Error::DegenerateKernel(format!("|x - y| = {:e} is below the separation guard", s.sqrt())));
        }
        Ok(s)
    }

    /// Green-kernel intermediates: (|x-y|², R²-|x|², R²-|y|², r0).
    fn green_parts(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
        let ax = self.check_interior(x, "pole x")?;
        let ay = self.check_interior(y, "field point y")?;
        let s = self.separation_sq(x, y)?;
        let r0 = ax * ay / (self.radius * self.radius * s);
        Ok((s, ax, ay, r0))
    }

    /// Gap `|y|² - R²` for an exterior field point.
    fn exterior_gap(&self, y: &[f64]) -> Result<f64> {
        self.check_len(y)?;
        let gap = norm_sq(y) - self.radius * self.radius;
        if gap < 0.0 {
            return Err(Error::Domain("field point y must lie outside the ball".into()));
        }
        if gap == 0.0 {
            return Err(Error::DegenerateKernel("field point y lies on the sphere".into()));
        }
        Ok(gap)
    }

    /// Green function `G_R(x, y)` of the ball.
    pub fn green(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (s, _, _, r0) = self.green_parts(x, y)?;
        let integral = green_integral(r0, self.alpha, self.dim as u32)?;
        Ok(self.kappa() * s.powf((self.alpha - self.d()) / 2.0) * integral)
    }

    /// Poisson kernel `P_R(x, y)`, the exit-position density from `x`.
    pub fn poisson(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let ax = self.check_interior(x, "pole x")?;
        let gy = self.exterior_gap(y)?;
        let s = self.separation_sq(x, y)?;
        Ok(self.poisson_from_parts(ax, gy, s))
    }

    /// Poisson kernel from `R²-|x|²`, `|y|²-R²` and `|x-y|²`.
    fn poisson_from_parts(&self, ax: f64, gy: f64, s: f64) -> f64 {
        self.poisson_constant() * (ax / gy).powf(self.alpha / 2.0) * s.powf(-self.d() / 2.0)
    }

    /// `P(|X_τ| ≤ r)` for the process started at the center: `I_{1-R²/r²}(1-α/2, α/2)`.
    pub fn exit_radius_cdf_from_center(&self, r: f64) -> Result<f64> {
        if !(r >= self.radius) {
            return Err(Error::Domain(format!("exit radius {r} lies inside the ball")));
        }
        if r.is_infinite() {
            return Ok(1.0);
        }
        let v = 1.0 - (self.radius / r).powi(2);
        Ok(reg_inc_beta(v, 1.0 - self.alpha / 2.0, self.alpha / 2.0)?)
    }

    /// `∇_x log G_R(x, y)`.
    pub fn grad_log_green(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.grad_log_green_into(x, y, &mut out)?;
        Ok(out)
    }

    fn grad_log_green_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
        let (s, ax, ay, r0) = self.green_parts(x, y)?;
        if !(r0 > 0.0) {
            return Err(Error::DegenerateKernel("r0 underflowed to zero".into()));
        }
        let d = self.dim as u32;
        let ratio = green_integrand(r0, self.alpha, d) / green_integral(r0, self.alpha, d)?;
        let r2 = self.radius * self.radius;
        let near = (self.alpha - self.d()) / s;
        // ∇_x r0 = (ay/R²)(-2x s - 2 ax (x-y)) / s²
        let pre = ratio * ay / (r2 * s * s);
        for i in 0..self.dim {
            let diff = x[i] - y[i];
            out[i] = near * diff + pre * (-2.0 * x[i] * s - 2.0 * ax * diff);
        }
        Ok(())
    }

    /// `∇_x log P_R(x, y)`.
    pub fn grad_log_poisson(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.grad_log_poisson_into(x, y, &mut out)?;
        Ok(out)
    }

    fn grad_log_poisson_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
        let ax = self.check_interior(x, "pole x")?;
        self.exterior_gap(y)?;
        let s = self.separation_sq(x, y)?;
        let (a, d) = (self.alpha, self.d());
        for i in 0..self.dim {
            out[i] = -a * x[i] / ax + d * (y[i] - x[i]) / s;
        }
        Ok(())
    }

    /// Weight carried by a particle of `mark` born at `birth` and dying at `death`.
    ///
    /// Mark 0 has weight 1. Mark `i ≥ 1` uses `b_i(birth)` dotted with the
    /// log-gradient of the Green kernel (death inside) or the Poisson kernel
    /// (exit), with the birth position as the pole.
    pub fn branch_weight(
        &self,
        mark: usize,
        directions: &[impl AsRef<dyn VectorField>],
        birth: &[f64],
        death: &[f64],
        exited: bool,
    ) -> Result<f64> {
        if mark == 0 {
            return Ok(1.0);
        }
        let field = directions
            .get(mark - 1)
            .ok_or_else(|| Error::Domain(format!("mark {mark} has no direction field")))?;
        let mut b = vec![0.0; self.dim];
        field.as_ref().value_into(birth, &mut b);
        let mut grad = vec![0.0; self.dim];
        if exited {
            self.grad_log_poisson_into(birth, death, &mut grad)?;
        } else {
            self.grad_log_green_into(birth, death, &mut grad)?;
        }
        Ok(dot(&b, &grad))
    }
}
