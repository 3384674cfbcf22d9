//! Rotationally symmetric α-stable motion, realized as Brownian motion
//! time-changed by an α/2-stable subordinator.
//!
//! The subordinator is normalized so that `E[exp(-λ S_t)] = exp(-t (2λ)^{α/2})`,
//! which makes `B_{S_t}` the process with characteristic exponent `|ξ|^α`,
//! i.e. the one generated by the fractional Laplacian `-(-Δ)^{α/2}`.
//!
//! Increments of the subordinator are drawn exactly with the
//! Chambers–Mallows–Stuck transformation. Exit from a ball is detected on a
//! fixed sub-grid of step `step_h`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::ln_gamma;

/// Default sub-step used for exit detection.
pub const DEFAULT_STEP_H: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableConfig {
    pub alpha: f64,
    pub dim: usize,
    pub step_h: f64,
    /// Stream identifier for stand-alone simulations (see [`crate::rng::stream_rng`]).
    #[serde(default)]
    pub rng_stream: u64,
}

impl StableConfig {
    pub fn new(alpha: f64, dim: usize, step_h: f64) -> Result<Self> {
        let cfg = Self { alpha, dim, step_h, rng_stream: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.rng_stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.dim < 2 {
            return Err(Error::invalid("dim", format!("dimension {} must be at least 2", self.dim)));
        }
        if !(self.step_h > 0.0 && self.step_h.is_finite()) {
            return Err(Error::invalid("step_h", format!("sub-step {} must be positive and finite", self.step_h)));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("stability index {alpha} outside (1, 2)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitStatus {
    ReachedHorizon,
    Exited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub status: ExitStatus,
    pub elapsed: f64,
    pub position: Vec<f64>,
}

impl TrajectoryOutcome {
    pub fn exited(&self) -> bool {
        self.status == ExitStatus::Exited
    }
}

/// Precomputed constants of the CMS formula for one α.
#[derive(Debug, Clone, Copy)]
struct Cms {
    half_alpha: f64,
    inv_half_alpha: f64,
    tail_exponent: f64,
}

impl Cms {
    fn new(alpha: f64) -> Self {
        let beta = alpha / 2.0;
        Self { half_alpha: beta, inv_half_alpha: 1.0 / beta, tail_exponent: (1.0 - beta) / beta }
    }

    /// One draw of `S_1`.
    fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = loop {
                let v = FRAC_PI_2 * (2.0 * rng.random::<f64>() - 1.0);
                if v.abs() < FRAC_PI_2 {
                    break v;
                }
            };
            let e: f64 = Exp1.sample(rng);
            let shifted = self.half_alpha * (u + FRAC_PI_2);
            let s = 2.0 * shifted.sin() / u.cos().powf(self.inv_half_alpha)
                * ((u - shifted).cos() / e).powf(self.tail_exponent);
            if s > 0.0 && s.is_finite() {
                return s;
            }
        }
    }
}

/// Sample `S_dt` of the α/2-stable subordinator with Laplace exponent `(2λ)^{α/2}`.
pub fn sample_subordinator_increment<R: Rng + ?Sized>(dt: f64, alpha: f64, rng: &mut R) -> f64 {
    debug_assert!(dt > 0.0 && alpha > 1.0 && alpha < 2.0);
    dt.powf(2.0 / alpha) * Cms::new(alpha).sample_unit(rng)
}

/// Sampler bound to one configuration, reusing the CMS constants.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    cms: Cms,
    time_exponent: f64,
    dim: usize,
}

impl IncrementSampler {
    pub fn new(cfg: &StableConfig) -> Self {
        Self { cms: Cms::new(cfg.alpha), time_exponent: 2.0 / cfg.alpha, dim: cfg.dim }
    }

    /// Adds one increment over `dt` to `pos`.
    pub fn advance<R: Rng + ?Sized>(&self, dt: f64, pos: &mut [f64], rng: &mut R) {
        let scale = (dt.powf(self.time_exponent) * self.cms.sample_unit(rng)).sqrt();
        for p in pos.iter_mut().take(self.dim) {
            let g: f64 = StandardNormal.sample(rng);
            *p += scale * g;
        }
    }
}

/// Increment `X_{t+dt} - X_t` of the `dim`-dimensional symmetric α-stable process.
pub fn sample_stable_increment<R: Rng + ?Sized>(dt: f64, cfg: &StableConfig, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; cfg.dim];
    IncrementSampler::new(cfg).advance(dt, &mut out, rng);
    out
}

/// `C_{α,d,p}` such that `E|X_t|^{-p} = C_{α,d,p} t^{-p/α}`.
pub fn negative_moment_constant(alpha: f64, d: usize, p: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let df = d as f64;
    if !(p > 0.0 && p < df) {
        return Err(Error::Domain(format!("moment order p = {p} outside (0, {d})")));
    }
    let ln = (1.0 - p) * std::f64::consts::LN_2 + ln_gamma(p / alpha)? + ln_gamma((df - p) / 2.0)?
        - alpha.ln()
        - ln_gamma(p / 2.0)?
        - ln_gamma(df / 2.0)?;
    Ok(ln.exp())
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Runs the process from `x0` until it leaves the open ball `B(0, radius)` or
/// the time `horizon` is reached, observing it every `step_h`.
///
/// An exit is declared at the first observation with `|X| ≥ radius`; the
/// recorded position is that observation (the jump overshoot).
pub fn simulate_to_exit_or_horizon<R: Rng + ?Sized>(
    x0: &[f64],
    horizon: f64,
    radius: f64,
    cfg: &StableConfig,
    rng: &mut R,
) -> Result<TrajectoryOutcome> {
    let sampler = IncrementSampler::new(cfg);
    simulate_with(&sampler, x0, horizon, radius, cfg.step_h, rng)
}

pub(crate) fn simulate_with<R: Rng + ?Sized>(
    sampler: &IncrementSampler,
    x0: &[f64],
    horizon: f64,
    radius: f64,
    step_h: f64,
    rng: &mut R,
) -> Result<TrajectoryOutcome> {
    if x0.len() != sampler.dim {
        return Err(Error::Domain(format!("start point has {} coordinates, expected {}", x0.len(), sampler.dim)));
    }
    let r2 = radius * radius;
    if !(norm_sq(x0) < r2) {
        return Err(Error::Domain("start point must lie inside the open ball".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon {horizon} must be positive and finite")));
    }
    let mut pos = x0.to_vec();
    let mut steps: u64 = 0;
    loop {
        let start = steps as f64 * step_h;
        let remaining = horizon - start;
        let last = remaining <= step_h;
        let dt = if last { remaining } else { step_h };
        sampler.advance(dt, &mut pos, rng);
        steps += 1;
        let elapsed = if last { horizon } else { start + dt };
        if norm_sq(&pos) >= r2 {
            return Ok(TrajectoryOutcome { status: ExitStatus::Exited, elapsed, position: pos });
        }
        if last {
            return Ok(TrajectoryOutcome { status: ExitStatus::ReachedHorizon, elapsed, position: pos });
        }
    }
}
