//! Statistical health checks of the sampler and kernel implementations.

use std::fmt;

use fracbranch::kernels::BallGeometry;
use fracbranch::rng::{stream_rng, SampleRng};
use fracbranch::solver::Stats;
use fracbranch::specfun::reg_lower_gamma;
use fracbranch::stable::{negative_moment_constant, sample_stable_increment, sample_subordinator_increment, simulate_to_exit_or_horizon, StableConfig};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Subordinator,
    NegativeMoments,
    Kernels,
    ExitLaw,
}

/// Overrides of the per-suite defaults.
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub alpha: Option<f64>,
    pub dim: Option<usize>,
    pub samples: Option<u64>,
    pub step_h: Option<f64>,
    pub seed: u64,
}

/// Passes when `|statistic - target| ≤ tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub target: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        (self.statistic - self.target).abs() <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}  {:<34} statistic {:<12.5e} target {:<12.5e} tolerance {:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.target,
            self.tolerance
        )
    }
}

pub fn run(suite: Suite, opts: &SuiteOptions) -> fracbranch::Result<Vec<Check>> {
    match suite {
        Suite::Subordinator => subordinator(opts),
        Suite::NegativeMoments => negative_moments(opts),
        Suite::Kernels => kernels(opts),
        Suite::ExitLaw => exit_law(opts),
    }
}

fn mean_check(name: String, stats: &Stats, target: f64) -> Check {
    Check { name, statistic: stats.mean(), target, tolerance: 4.0 * stats.stderr() }
}

fn subordinator(opts: &SuiteOptions) -> fracbranch::Result<Vec<Check>> {
    let alpha = opts.alpha.unwrap_or(1.75);
    // Only the stability index is checked here.
    StableConfig::new(alpha, 2, 1.0)?;
    let n = opts.samples.unwrap_or(1_000_000);
    let cases = [(1.0, 1.0), (0.5, 1.0), (1.0, 0.25)];
    Ok(cases
        .iter()
        .enumerate()
        .map(|(j, &(t, lambda))| {
            let mut rng = stream_rng(opts.seed, j as u64);
            let mut stats = Stats::default();
            for _ in 0..n {
                stats.push((-lambda * sample_subordinator_increment(t, alpha, &mut rng)).exp());
            }
            let target = (-t * (2.0 * lambda).powf(alpha / 2.0)).exp();
            mean_check(format!("E exp(-{lambda} S_{t})"), &stats, target)
        })
        .collect())
}

fn negative_moments(opts: &SuiteOptions) -> fracbranch::Result<Vec<Check>> {
    let cfg = StableConfig::new(opts.alpha.unwrap_or(1.75), opts.dim.unwrap_or(10), 1.0)?;
    let n = opts.samples.unwrap_or(1_000_000);
    let powers = [0.5, 1.0];
    let mut checks = Vec::new();
    for (j, &t) in [0.5, 1.0].iter().enumerate() {
        let mut rng = stream_rng(opts.seed, j as u64);
        let mut stats = [Stats::default(), Stats::default()];
        for _ in 0..n {
            let r = sample_stable_increment(t, &cfg, &mut rng).iter().map(|v| v * v).sum::<f64>().sqrt();
            for (s, p) in stats.iter_mut().zip(powers) {
                s.push(r.powf(-p));
            }
        }
        for (s, p) in stats.iter().zip(powers) {
            let target = negative_moment_constant(cfg.alpha, cfg.dim, p)? * t.powf(-p / cfg.alpha);
            checks.push(mean_check(format!("E |X_{t}|^-{p}"), s, target));
        }
    }
    Ok(checks)
}

fn unit_vector<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm(&v);
    v.into_iter().map(|c| c / n).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Fourth-order Richardson extrapolation of central differences.
fn numerical_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let central = |s: f64| {
                let (mut p, mut m) = (x.to_vec(), x.to_vec());
                p[i] += s;
                m[i] -= s;
                (f(&p) - f(&m)) / (2.0 * s)
            };
            (4.0 * central(h / 2.0) - central(h)) / 3.0
        })
        .collect()
}

fn kernels(opts: &SuiteOptions) -> fracbranch::Result<Vec<Check>> {
    let g = BallGeometry::unit(opts.dim.unwrap_or(10), opts.alpha.unwrap_or(1.75))?;
    let pairs = opts.samples.unwrap_or(10_000);
    let mut rng = stream_rng(opts.seed, 0);
    let interior = |rng: &mut SampleRng| -> Vec<f64> {
        let r = rng.random::<f64>().powf(1.0 / g.dim as f64);
        unit_vector(g.dim, rng).into_iter().map(|c| c * r).collect()
    };
    let exterior = |rng: &mut SampleRng| -> Vec<f64> {
        let r = 1.0 + 1e-9 + 2.0 * rng.random::<f64>();
        unit_vector(g.dim, rng).into_iter().map(|c| c * r).collect()
    };
    let relative = |a: &[f64], b: &[f64]| distance(a, b) / norm(b);
    let (mut green_err, mut poisson_err) = (0.0f64, 0.0f64);
    for _ in 0..pairs.div_ceil(10) {
        let (x, y, z) = (interior(&mut rng), interior(&mut rng), exterior(&mut rng));
        let exact = g.grad_log_green(&x, &y)?;
        green_err = green_err.max(relative(&numerical_gradient(|p| g.green(p, &y).map_or(f64::NAN, f64::ln), &x), &exact));
        let exact = g.grad_log_poisson(&x, &z)?;
        poisson_err = poisson_err.max(relative(&numerical_gradient(|p| g.poisson(p, &z).map_or(f64::NAN, f64::ln), &x), &exact));
    }
    let (mut green_bad, mut poisson_bad) = (0u64, 0u64);
    let d = g.dim as f64;
    for _ in 0..pairs {
        let (x, y, z) = (interior(&mut rng), interior(&mut rng), exterior(&mut rng));
        let edge = g.radius - norm(&x);
        if norm(&g.grad_log_green(&x, &y)?) > d / distance(&x, &y).min(edge) {
            green_bad += 1;
        }
        if norm(&g.grad_log_poisson(&x, &z)?) > (d + g.alpha) / edge {
            poisson_bad += 1;
        }
    }
    Ok(vec![
        Check { name: "grad log G vs differences (rel)".into(), statistic: green_err, target: 0.0, tolerance: 1e-5 },
        Check { name: "grad log P vs differences (rel)".into(), statistic: poisson_err, target: 0.0, tolerance: 1e-6 },
        Check { name: "green gradient bound violations".into(), statistic: green_bad as f64, target: 0.0, tolerance: 0.0 },
        Check { name: "poisson gradient bound violations".into(), statistic: poisson_bad as f64, target: 0.0, tolerance: 0.0 },
    ])
}

/// Upper `level` quantile of the chi-square law with `df` degrees of freedom.
fn chi_square_critical(df: f64, level: f64) -> fracbranch::Result<f64> {
    let (mut lo, mut hi) = (0.0, 10.0 * df + 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if reg_lower_gamma(df / 2.0, mid / 2.0)? < 1.0 - level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn exit_law(opts: &SuiteOptions) -> fracbranch::Result<Vec<Check>> {
    let g = BallGeometry::unit(opts.dim.unwrap_or(2), opts.alpha.unwrap_or(1.5))?;
    let cfg = StableConfig::new(g.alpha, g.dim, opts.step_h.unwrap_or(1e-3))?;
    let n = opts.samples.unwrap_or(100_000);
    let mut rng = stream_rng(opts.seed, 0);
    let origin = vec![0.0; g.dim];
    let mut times = Stats::default();
    let mut radii = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let out = simulate_to_exit_or_horizon(&origin, f64::MAX, g.radius, &cfg, &mut rng)?;
        times.push(out.elapsed);
        radii.push(norm(&out.position));
    }
    let mean_tau = g.mean_exit_time_from_center();

    // Grid observation distorts radii within a few step displacements of the
    // sphere, so that layer is one bin and the remaining 19 are equiprobable.
    let layer = 1.0 + 5.0 * cfg.step_h.powf(1.0 / g.alpha);
    let layer_mass = g.exit_radius_cdf_from_center(layer)?;
    let mut edges = vec![1.0, layer];
    for j in 1..19 {
        let target = layer_mass + (1.0 - layer_mass) * j as f64 / 19.0;
        let (mut lo, mut hi) = (layer, 1e8);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g.exit_radius_cdf_from_center(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        edges.push(0.5 * (lo + hi));
    }
    edges.push(f64::INFINITY);
    let mut counts = [0u64; 20];
    for r in &radii {
        counts[edges[1..].partition_point(|e| e <= r).min(19)] += 1;
    }
    let mut statistic = 0.0;
    for (j, &c) in counts.iter().enumerate() {
        let p = if j == 0 { layer_mass } else { (1.0 - layer_mass) / 19.0 };
        let expected = p * n as f64;
        statistic += (c as f64 - expected).powi(2) / expected;
    }
    Ok(vec![
        Check {
            name: "mean exit time".into(),
            statistic: times.mean(),
            target: mean_tau,
            tolerance: (4.0 * times.stderr()).max(0.02 * mean_tau),
        },
        Check { name: "exit radius chi-square, 19 df".into(), statistic, target: 0.0, tolerance: chi_square_critical(19.0, 0.01)? },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_quantiles() {
        // Tabulated 99% points.
        assert!((chi_square_critical(19.0, 0.01).unwrap() - 36.191).abs() < 1e-3);
        assert!((chi_square_critical(1.0, 0.01).unwrap() - 6.635).abs() < 1e-3);
    }

    #[test]
    fn small_suites_run() {
        let opts = SuiteOptions { samples: Some(20_000), seed: 3, ..SuiteOptions::default() };
        for suite in [Suite::Subordinator, Suite::NegativeMoments] {
            let checks = run(suite, &opts).unwrap();
            assert!(checks.iter().all(Check::passed), "{checks:?}");
        }
        let checks = run(Suite::Kernels, &SuiteOptions { samples: Some(500), ..opts.clone() }).unwrap();
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(Check::passed), "{checks:?}");
    }

    #[test]
    fn invalid_alpha_is_an_error() {
        let opts = SuiteOptions { alpha: Some(2.5), samples: Some(10), ..SuiteOptions::default() };
        for suite in [Suite::Subordinator, Suite::NegativeMoments, Suite::Kernels, Suite::ExitLaw] {
            assert_eq!(run(suite, &opts).unwrap_err().field(), Some("alpha"));
        }
    }
}
