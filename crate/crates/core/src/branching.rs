//! Marked branching trees of α-stable particles and the score functional
//! whose expectation represents the solution.
//!
//! A tree is never stored: it is evaluated depth first with one running
//! product, so memory grows with the number of pending particles only.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{MultiIndex, PdeProblem};
use crate::quadrature::{tanh_sinh, tanh_sinh_semi_infinite};
use crate::specfun::{gamma, reg_lower_gamma};
use crate::stable::{simulate_with, IncrementSampler, StableConfig, DEFAULT_STEP_H};

/// Default generation limit for a single tree.
pub const DEFAULT_MAX_GENERATIONS: u32 = 10_000;

const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// Density `κ1 t^{δ-1} e^{-t}` on `(0, 1]` and `κ2 t^{-a}` on `(1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTail {
    pub delta: f64,
    pub tail_exponent: f64,
    pub head_coeff: f64,
    pub tail_coeff: f64,
}

impl PowerTail {
    pub fn new(delta: f64, tail_exponent: f64, head_coeff: f64, tail_coeff: f64) -> Result<Self> {
        let law = Self { delta, tail_exponent, head_coeff, tail_coeff };
        law.validate()?;
        Ok(law)
    }

    /// Law putting mass `head_mass` on `(0, 1]`.
    pub fn with_head_mass(delta: f64, tail_exponent: f64, head_mass: f64) -> Result<Self> {
        if !(head_mass > 0.0 && head_mass < 1.0) {
            return Err(Error::invalid("head_mass", format!("{head_mass} must lie in (0, 1)")));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", format!("{delta} must be positive")));
        }
        let lower = gamma(delta)? * reg_lower_gamma(delta, 1.0)?;
        Self::new(delta, tail_exponent, head_mass / lower, (1.0 - head_mass) * (tail_exponent - 1.0))
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", format!("{} must lie in (0, 1)", self.delta)));
        }
        if !(self.tail_exponent > 1.0 && self.tail_exponent.is_finite()) {
            return Err(Error::invalid("tail_exponent", format!("{} must exceed 1", self.tail_exponent)));
        }
        if !(self.head_coeff > 0.0 && self.head_coeff.is_finite()) {
            return Err(Error::invalid("head_coeff", format!("{} must be positive", self.head_coeff)));
        }
        if !(self.tail_coeff > 0.0 && self.tail_coeff.is_finite()) {
            return Err(Error::invalid("tail_coeff", format!("{} must be positive", self.tail_coeff)));
        }
        // Total mass by quadrature, independent of the closed form used for sampling.
        let head = tanh_sinh(|t| self.density(t), 0.0, 1.0, 1e-12)?;
        let tail = tanh_sinh_semi_infinite(|t| self.density(t), 1.0, 1e-12)?;
        let total = head + tail;
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::invalid("head_coeff", format!("density integrates to {total}, not 1")));
        }
        Ok(())
    }

    fn density(&self, t: f64) -> f64 {
        if t <= 1.0 {
            self.head_coeff * t.powf(self.delta - 1.0) * (-t).exp()
        } else {
            self.tail_coeff * t.powf(-self.tail_exponent)
        }
    }

    fn head_mass(&self) -> f64 {
        self.head_coeff * gamma(self.delta).unwrap() * reg_lower_gamma(self.delta, 1.0).unwrap()
    }

    fn survival(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0 - self.head_coeff * gamma(self.delta).unwrap() * reg_lower_gamma(self.delta, t).unwrap()
        } else {
            self.tail_coeff * t.powf(1.0 - self.tail_exponent) / (self.tail_exponent - 1.0)
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let open_unit = |rng: &mut R| 1.0 - rng.random::<f64>();
        if rng.random::<f64>() < self.head_mass() {
            // Proposal δ t^{δ-1} on (0, 1], accepted with probability e^{-t}.
            loop {
                let t = open_unit(rng).powf(1.0 / self.delta);
                if t > 0.0 && rng.random::<f64>() < (-t).exp() {
                    return t;
                }
            }
        }
        open_unit(rng).powf(-1.0 / (self.tail_exponent - 1.0)).max(1.0)
    }
}

/// Distribution of particle lifetimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LifetimeLaw {
    Exponential { rate: f64 },
    PowerTail(PowerTail),
}

impl LifetimeLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        let law = Self::Exponential { rate };
        law.validate(None)?;
        Ok(law)
    }

    /// Checks parameters; with `alpha` given, also `δ ≤ 1 - 1/α` for the power-tail law.
    pub fn validate(&self, alpha: Option<f64>) -> Result<()> {
        match self {
            Self::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid("rate", format!("{rate} must be positive and finite")));
                }
                Ok(())
            }
            Self::PowerTail(p) => {
                p.validate()?;
                if let Some(alpha) = alpha {
                    if p.delta > 1.0 - 1.0 / alpha {
                        return Err(Error::invalid("delta", format!("{} exceeds 1 - 1/alpha = {}", p.delta, 1.0 - 1.0 / alpha)));
                    }
                }
                Ok(())
            }
        }
    }

    /// `(ρ(t), F̄(t))` with `F̄(t) = ∫_t^∞ ρ`.
    pub fn density_and_survival(&self, t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("lifetime argument {t} must be positive")));
        }
        Ok(match self {
            Self::Exponential { rate } => {
                let s = (-rate * t).exp();
                (rate * s, s)
            }
            Self::PowerTail(p) => (p.density(t), p.survival(t)),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential { rate } => loop {
                let t = Exp::new(*rate).expect("validated rate").sample(rng);
                if t > 0.0 {
                    return t;
                }
            },
            Self::PowerTail(p) => p.sample(rng),
        }
    }
}

impl Default for LifetimeLaw {
    fn default() -> Self {
        Self::Exponential { rate: 1.5 }
    }
}

/// Probability mass function on the support of the nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringLaw {
    support: Vec<MultiIndex>,
    probabilities: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(support: Vec<MultiIndex>, probabilities: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probabilities.len() {
            return Err(Error::invalid("offspring", "support and probabilities must be non-empty and of equal length"));
        }
        if probabilities.iter().any(|q| !(*q > 0.0)) {
            return Err(Error::invalid("offspring", "every probability must be positive"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("offspring", format!("probabilities sum to {total}")));
        }
        for (i, l) in support.iter().enumerate() {
            if support[..i].contains(l) {
                return Err(Error::invalid("offspring", format!("multi-index {l} listed twice")));
            }
        }
        Ok(Self { support, probabilities })
    }

    pub fn uniform(support: Vec<MultiIndex>) -> Result<Self> {
        let q = 1.0 / support.len().max(1) as f64;
        let n = support.len();
        Self::new(support, vec![q; n])
    }

    pub fn support(&self) -> &[MultiIndex] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Index into the support, drawn with probability `q_l`.
    pub fn sample_position<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, q) in self.probabilities.iter().enumerate() {
            acc += q;
            if u < acc {
                return i;
            }
        }
        self.probabilities.len() - 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &MultiIndex {
        &self.support[self.sample_position(rng)]
    }

    /// Probabilities re-ordered to follow `support`; fails unless the sets agree.
    fn aligned_to(&self, support: &[MultiIndex]) -> Result<Vec<f64>> {
        if support.len() != self.support.len() {
            return Err(Error::invalid("offspring", "offspring support differs from the nonlinearity's support"));
        }
        support
            .iter()
            .map(|l| {
                self.support
                    .iter()
                    .position(|s| s == l)
                    .map(|i| self.probabilities[i])
                    .ok_or_else(|| Error::invalid("offspring", format!("multi-index {l} missing from the offspring law")))
            })
            .collect()
    }
}

/// One finished particle, as reported to an observer.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    /// Ancestral label `(1, k_2, …, k_n)`.
    pub label: Vec<u32>,
    pub mark: usize,
    pub birth_time: f64,
    pub death_time: f64,
    pub birth_pos: Vec<f64>,
    pub death_pos: Vec<f64>,
    pub exited: bool,
    pub offspring: Option<MultiIndex>,
    /// Factor this particle contributed to the score.
    pub factor: f64,
}

/// Tree-sampling options independent of the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeOptions {
    #[serde(default)]
    pub lifetime: LifetimeLaw,
    /// Offspring probabilities in support order; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offspring_probabilities: Option<Vec<f64>>,
    #[serde(default = "default_step")]
    pub step_h: f64,
    #[serde(default = "default_generations")]
    pub max_generations: u32,
    /// Skip the rest of a tree once the running product is exactly zero.
    #[serde(default = "default_true")]
    pub stop_on_zero: bool,
}

fn default_step() -> f64 {
    DEFAULT_STEP_H
}

fn default_generations() -> u32 {
    DEFAULT_MAX_GENERATIONS
}

fn default_true() -> bool {
    true
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            lifetime: LifetimeLaw::default(),
            offspring_probabilities: None,
            step_h: DEFAULT_STEP_H,
            max_generations: DEFAULT_MAX_GENERATIONS,
            stop_on_zero: true,
        }
    }
}

/// A problem together with the laws driving its trees.
#[derive(Debug, Clone)]
pub struct TreeModel {
    problem: Arc<PdeProblem>,
    lifetime: LifetimeLaw,
    offspring: OffspringLaw,
    /// `q_l` in the nonlinearity's support order.
    q: Vec<f64>,
    sampler: IncrementSampler,
    stable: StableConfig,
    max_generations: u32,
    stop_on_zero: bool,
}

impl TreeModel {
    pub fn new(problem: Arc<PdeProblem>, options: &TreeOptions) -> Result<Self> {
        let support = problem.nonlinearity.support().to_vec();
        let offspring = match &options.offspring_probabilities {
            Some(q) => OffspringLaw::new(support, q.clone())?,
            None => OffspringLaw::uniform(support)?,
        };
        Self::with_laws(problem, options.lifetime, offspring, options)
    }

    pub fn with_laws(problem: Arc<PdeProblem>, lifetime: LifetimeLaw, offspring: OffspringLaw, options: &TreeOptions) -> Result<Self> {
        let g = problem.geometry;
        lifetime.validate(Some(g.alpha))?;
        let q = offspring.aligned_to(problem.nonlinearity.support())?;
        if options.max_generations == 0 {
            return Err(Error::invalid("max_generations", "must be at least 1"));
        }
        let stable = StableConfig::new(g.alpha, g.dim, options.step_h)?;
        Ok(Self {
            sampler: IncrementSampler::new(&stable),
            problem,
            lifetime,
            offspring,
            q,
            stable,
            max_generations: options.max_generations,
            stop_on_zero: options.stop_on_zero,
        })
    }

    pub fn problem(&self) -> &PdeProblem {
        &self.problem
    }

    pub fn lifetime(&self) -> &LifetimeLaw {
        &self.lifetime
    }

    pub fn offspring(&self) -> &OffspringLaw {
        &self.offspring
    }

    pub fn stable(&self) -> &StableConfig {
        &self.stable
    }

    /// One realization of the score of the tree rooted at `x` with `root_mark`.
    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], root_mark: usize, rng: &mut R) -> Result<f64> {
        self.sample_observed(x, root_mark, rng, |_| {})
    }

    /// As [`TreeModel::sample`], reporting every finished particle to `observer`.
    pub fn sample_observed<R, F>(&self, x: &[f64], root_mark: usize, rng: &mut R, mut observer: F) -> Result<f64>
    where
        R: Rng + ?Sized,
        F: FnMut(&Particle),
    {
        let g = &self.problem.geometry;
        let nl = &self.problem.nonlinearity;
        if x.len() != g.dim {
            return Err(Error::Domain(format!("point has {} coordinates, expected {}", x.len(), g.dim)));
        }
        if root_mark > nl.order() {
            return Err(Error::Domain(format!("root mark {root_mark} exceeds the number of directions {}", nl.order())));
        }
        struct Pending {
            label: Vec<u32>,
            mark: usize,
            birth_time: f64,
            birth_pos: Vec<f64>,
        }
        let mut stack = vec![Pending { label: vec![1], mark: root_mark, birth_time: 0.0, birth_pos: x.to_vec() }];
        let mut score = 1.0;
        while let Some(p) = stack.pop() {
            if p.label.len() as u64 > self.max_generations as u64 {
                return Err(Error::DepthExceeded { limit: self.max_generations });
            }
            let lifetime = self.lifetime.sample(rng);
            let path = simulate_with(&self.sampler, &p.birth_pos, lifetime, g.radius, self.stable.step_h, rng)?;
            let exited = path.exited();
            let duration = path.elapsed;
            let weight = g.branch_weight(p.mark, nl.directions(), &p.birth_pos, &path.position, exited)?;
            let (factor, offspring) = if exited {
                let (_, survival) = self.lifetime.density_and_survival(duration)?;
                (self.problem.boundary.value(&path.position) * weight / survival, None)
            } else {
                let (density, _) = self.lifetime.density_and_survival(duration)?;
                let i = self.offspring.sample_position(rng);
                let l = self.offspring.support()[i].clone();
                let pos = nl.support().iter().position(|s| *s == l).expect("aligned supports");
                let c = nl.coefficient_at(pos).value(&path.position);
                (c * weight / (self.q[pos] * density), Some(l))
            };
            score *= factor;
            if let Some(l) = &offspring {
                // Push in reverse so children are evaluated in birth order.
                let marks: Vec<usize> = l.child_marks().collect();
                for (j, &mark) in marks.iter().enumerate().rev() {
                    let mut label = p.label.clone();
                    label.push(j as u32 + 1);
                    stack.push(Pending { label, mark, birth_time: p.birth_time + duration, birth_pos: path.position.clone() });
                }
            }
            observer(&Particle {
                label: p.label,
                mark: p.mark,
                birth_time: p.birth_time,
                death_time: p.birth_time + duration,
                birth_pos: p.birth_pos,
                death_pos: path.position,
                exited,
                offspring,
                factor,
            });
            if score == 0.0 && self.stop_on_zero {
                return Ok(0.0);
            }
        }
        Ok(score)
    }
}

/// One realization of the score for the tree rooted at `x`.
pub fn evaluate_tree<R: Rng + ?Sized>(model: &TreeModel, x: &[f64], root_mark: usize, rng: &mut R) -> Result<f64> {
    model.sample(x, root_mark, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{norm_sq, Constant, SharedScalar, SharedVector};
    use crate::kernels::BallGeometry;
    use crate::problems::{make_linear_gradient_problem, make_nonlinear_gradient_problem, PolynomialNonlinearity};
    use crate::rng::stream_rng;

    fn mean_and_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn exponential_mean() {
        let law = LifetimeLaw::exponential(1.5).unwrap();
        let mut rng = stream_rng(1, 0);
        let v: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
        assert!(v.iter().all(|t| *t > 0.0));
        let (m, se) = mean_and_se(&v);
        assert!((m - 1.0 / 1.5).abs() < 4.0 * se, "{m} ± {se}");
    }

    #[test]
    fn exponential_density_and_survival() {
        let law = LifetimeLaw::exponential(1.5).unwrap();
        let (rho, surv) = law.density_and_survival(1.0).unwrap();
        assert!((rho - 1.5 * (-1.5f64).exp()).abs() < 1e-16);
        assert!((surv - (-1.5f64).exp()).abs() < 1e-16);
        assert!(law.density_and_survival(0.0).is_err());
        assert!(LifetimeLaw::exponential(0.0).is_err());
    }

    fn power_tail() -> LifetimeLaw {
        LifetimeLaw::PowerTail(PowerTail::with_head_mass(0.3, 2.5, 0.6).unwrap())
    }

    #[test]
    fn power_tail_normalization_and_survival() {
        let LifetimeLaw::PowerTail(p) = power_tail() else { unreachable!() };
        assert!(PowerTail::new(0.3, 2.5, p.head_coeff * 1.01, p.tail_coeff).is_err());
        let law = power_tail();
        // F̄(0+) = 1
        assert!((law.density_and_survival(1e-300).unwrap().1 - 1.0).abs() < 1e-12);
        // Tail survival against quadrature of κ2 t^{-a}.
        for &t in &[1.5, 4.0, 30.0] {
            let oracle = tanh_sinh_semi_infinite(|s| p.tail_coeff * s.powf(-2.5), t, 1e-13).unwrap();
            let (_, surv) = law.density_and_survival(t).unwrap();
            assert!(((surv - oracle) / oracle).abs() < 1e-10);
        }
        // Head survival against quadrature, and continuity at t = 1.
        for &t in &[0.01, 0.5, 1.0] {
            let mass = tanh_sinh(|s| p.head_coeff * s.powf(-0.7) * (-s).exp(), 0.0, t, 1e-13).unwrap();
            assert!((law.density_and_survival(t).unwrap().1 - (1.0 - mass)).abs() < 1e-10);
        }
        let below = law.density_and_survival(1.0).unwrap().1;
        let above = law.density_and_survival(1.0 + 1e-12).unwrap().1;
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn power_tail_decreasing_survival() {
        let law = power_tail();
        let mut last = 1.0;
        for i in 1..400 {
            let t = i as f64 * 0.01;
            let (rho, surv) = law.density_and_survival(t).unwrap();
            assert!(rho > 0.0 && surv < last);
            last = surv;
        }
    }

    #[test]
    fn power_tail_sampler_matches_cdf_at_one() {
        let law = power_tail();
        let LifetimeLaw::PowerTail(p) = law else { unreachable!() };
        let oracle = tanh_sinh(|s| p.head_coeff * s.powf(p.delta - 1.0) * (-s).exp(), 0.0, 1.0, 1e-13).unwrap();
        let mut rng = stream_rng(2, 0);
        let n = 1_000_000;
        let hits: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).map(|t| {
            assert!(t > 0.0);
            (t <= 1.0) as u8 as f64
        }).collect();
        let (m, se) = mean_and_se(&hits);
        assert!((m - oracle).abs() < 4.0 * se, "{m} vs {oracle}");
        // Tail quantile: P(T > 4) = F̄(4).
        let mut rng = stream_rng(3, 0);
        let beyond: Vec<f64> = (0..n).map(|_| (law.sample(&mut rng) > 4.0) as u8 as f64).collect();
        let (m, se) = mean_and_se(&beyond);
        assert!((m - law.density_and_survival(4.0).unwrap().1).abs() < 4.0 * se);
    }

    #[test]
    fn power_tail_delta_constraint() {
        let law = power_tail();
        assert!(law.validate(Some(1.75)).is_ok());
        // 1 - 1/1.2 = 1/6 < 0.3
        assert_eq!(law.validate(Some(1.2)).unwrap_err().field(), Some("delta"));
    }

    #[test]
    fn offspring_sampling() {
        let single = OffspringLaw::uniform(vec![MultiIndex::new(vec![0, 2])]).unwrap();
        let mut rng = stream_rng(4, 0);
        for _ in 0..100 {
            assert_eq!(single.sample(&mut rng), &MultiIndex::new(vec![0, 2]));
        }
        let three = OffspringLaw::uniform(vec![
            MultiIndex::new(vec![0, 0]),
            MultiIndex::new(vec![1, 0]),
            MultiIndex::new(vec![0, 1]),
        ])
        .unwrap();
        let n = 300_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[three.sample_position(&mut rng)] += 1;
        }
        let se = (1.0 / 3.0 * (2.0 / 3.0) / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 4.0 * se);
        }
        assert!(OffspringLaw::new(vec![MultiIndex::new(vec![1])], vec![0.5]).is_err());
        assert!(OffspringLaw::new(vec![MultiIndex::new(vec![1]), MultiIndex::new(vec![2])], vec![1.0, 0.0]).is_err());
    }

    fn zero_problem(boundary: SharedScalar) -> Arc<PdeProblem> {
        let b: SharedVector = Arc::new(|x: &[f64], out: &mut [f64]| out.copy_from_slice(x));
        let nl = PolynomialNonlinearity::new(
            vec![(MultiIndex::new(vec![0, 0]), Arc::new(Constant(0.0))), (MultiIndex::new(vec![1, 1]), Arc::new(Constant(0.0)))],
            vec![b],
        )
        .unwrap();
        Arc::new(PdeProblem::new("zero", BallGeometry::unit(3, 1.5).unwrap(), boundary, nl).unwrap())
    }

    #[test]
    fn zero_coefficients_give_boundary_over_survival() {
        let boundary: SharedScalar = Arc::new(|y: &[f64]| 1.0 / norm_sq(y));
        let model = TreeModel::new(zero_problem(boundary.clone()), &TreeOptions::default()).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..200 {
            let mut root = None;
            let value = model.sample_observed(&[0.1, 0.0, 0.2], 0, &mut rng, |p| root = Some(p.clone())).unwrap();
            let p = root.unwrap();
            if p.exited {
                let surv = model.lifetime().density_and_survival(p.death_time).unwrap().1;
                assert!((value - boundary.value(&p.death_pos) / surv).abs() < 1e-12 * value.abs());
            } else {
                assert_eq!(value, 0.0);
            }
        }
        let zero = TreeModel::new(zero_problem(Arc::new(Constant(0.0))), &TreeOptions::default()).unwrap();
        for _ in 0..200 {
            assert_eq!(zero.sample(&[0.0, 0.5, 0.0], 1, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn particles_satisfy_their_invariants() {
        let problem = Arc::new(make_nonlinear_gradient_problem(0, 1.75, 10).unwrap());
        let options = TreeOptions { stop_on_zero: false, ..TreeOptions::default() };
        let model = TreeModel::new(problem, &options).unwrap();
        let mut rng = stream_rng(6, 0);
        let mut branched = 0;
        for _ in 0..2000 {
            let mut particles = Vec::new();
            let mut x = vec![0.0; 10];
            x[0] = 0.3;
            model.sample_observed(&x, 0, &mut rng, |p| particles.push(p.clone())).unwrap();
            for p in &particles {
                assert!(p.death_time >= p.birth_time);
                let r2 = norm_sq(&p.death_pos);
                if p.exited {
                    assert!(r2 >= 1.0 && p.offspring.is_none());
                } else {
                    assert!(r2 < 1.0);
                    let l = p.offspring.as_ref().unwrap();
                    let children: Vec<&Particle> = particles
                        .iter()
                        .filter(|c| c.label.len() == p.label.len() + 1 && c.label.starts_with(&p.label))
                        .collect();
                    assert_eq!(children.len() as u32, l.child_count());
                    if *l == MultiIndex::new(vec![0, 2]) {
                        branched += 1;
                        assert!(children.iter().all(|c| c.mark == 1 && c.birth_pos == p.death_pos));
                    }
                }
            }
        }
        assert!(branched > 0);
    }

    #[test]
    fn depth_guard_triggers() {
        // A pure-branching law with one child per death runs until exit; a
        // generation limit of one forces the error whenever the root dies inside.
        let problem = Arc::new(make_linear_gradient_problem(0, 1.75, 2).unwrap());
        let options = TreeOptions {
            lifetime: LifetimeLaw::Exponential { rate: 50.0 },
            max_generations: 1,
            stop_on_zero: false,
            ..TreeOptions::default()
        };
        let model = TreeModel::new(problem, &options).unwrap();
        let mut rng = stream_rng(7, 0);
        let errors = (0..200).filter(|_| matches!(model.sample(&[0.0, 0.0], 0, &mut rng), Err(Error::DepthExceeded { limit: 1 }))).count();
        assert!(errors > 0);
    }

    #[test]
    fn mark_one_root_at_center_is_zero() {
        let problem = Arc::new(make_linear_gradient_problem(1, 1.75, 10).unwrap());
        let model = TreeModel::new(problem, &TreeOptions::default()).unwrap();
        let mut rng = stream_rng(8, 0);
        for _ in 0..100 {
            assert_eq!(model.sample(&[0.0; 10], 1, &mut rng).unwrap(), 0.0);
        }
        assert!(model.sample(&[0.0; 10], 2, &mut rng).is_err());
    }

    #[test]
    fn linear_benchmark_at_center() {
        let problem = Arc::new(make_linear_gradient_problem(1, 1.75, 10).unwrap());
        let model = TreeModel::new(problem, &TreeOptions::default()).unwrap();
        let v: Vec<f64> = (0..100_000u64)
            .map(|i| evaluate_tree(&model, &[0.0; 10], 0, &mut stream_rng(9, i)).unwrap())
            .collect();
        let (m, se) = mean_and_se(&v);
        assert!((m - 1.0).abs() < 4.0 * se, "{m} ± {se}");
    }

    #[test]
    fn mismatched_offspring_support_is_rejected() {
        let problem = Arc::new(make_linear_gradient_problem(1, 1.75, 10).unwrap());
        let wrong = OffspringLaw::uniform(vec![MultiIndex::new(vec![0, 0]), MultiIndex::new(vec![0, 2])]).unwrap();
        let err = TreeModel::with_laws(problem.clone(), LifetimeLaw::default(), wrong, &TreeOptions::default()).unwrap_err();
        assert_eq!(err.field(), Some("offspring"));
        let options = TreeOptions { offspring_probabilities: Some(vec![0.25, 0.75]), ..TreeOptions::default() };
        let model = TreeModel::new(problem, &options).unwrap();
        assert_eq!(model.offspring().probabilities(), &[0.25, 0.75]);
    }
}
