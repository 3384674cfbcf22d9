//! Parallel Monte Carlo estimates from independent tree samples.
//!
//! Sample `i` always draws from stream `i` of the root seed, and samples are
//! accumulated in fixed-size chunks merged in index order, so an estimate is
//! a function of `(seed, n)` alone.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching::TreeModel;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

/// Default number of fresh draws allowed per sample after degenerate kernel inputs.
pub const DEFAULT_RETRY_BUDGET: u32 = 10;

const CHUNK: u64 = 1024;

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two disjoint partial accumulations.
    pub fn merge(&mut self, other: &Stats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let weight = other.count as f64 / n as f64;
        self.mean += delta * weight;
        self.m2 += other.m2 + delta * delta * self.count as f64 * weight;
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    /// Wall time in seconds.
    pub elapsed: f64,
    /// Samples redrawn after degenerate kernel inputs.
    pub retries: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub workers: usize,
    #[serde(default = "default_budget")]
    pub retry_budget: u32,
}

fn default_budget() -> u32 {
    DEFAULT_RETRY_BUDGET
}

impl SolverOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self { workers, retry_budget: DEFAULT_RETRY_BUDGET }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::with_workers(1)
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::invalid("workers", "at least one worker is required"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))
}

fn one_sample(model: &TreeModel, x: &[f64], root_mark: usize, seed: u64, index: u64, budget: u32) -> Result<(f64, u64)> {
    let mut rng = stream_rng(seed, index);
    let mut retries = 0;
    loop {
        match model.sample(x, root_mark, &mut rng) {
            Ok(v) => return Ok((v, retries)),
            Err(Error::DegenerateKernel(_)) if retries < budget as u64 => retries += 1,
            Err(Error::DegenerateKernel(_)) => {
                return Err(Error::RetryBudgetExhausted { sample: index, attempts: retries as u32 + 1 })
            }
            Err(e) => return Err(e),
        }
    }
}

fn check_point(model: &TreeModel, x: &[f64]) -> Result<()> {
    let g = &model.problem().geometry;
    if x.len() != g.dim {
        return Err(Error::Domain(format!("point has {} coordinates, expected {}", x.len(), g.dim)));
    }
    if !(x.iter().map(|c| c * c).sum::<f64>() < g.radius * g.radius) {
        return Err(Error::Domain(format!("point {x:?} is not inside the ball")));
    }
    Ok(())
}

fn estimate_in(
    pool: &rayon::ThreadPool,
    model: &TreeModel,
    x: &[f64],
    root_mark: usize,
    n: u64,
    seed: u64,
    budget: u32,
) -> Result<Estimate> {
    check_point(model, x)?;
    if n == 0 {
        return Err(Error::invalid("samples", "at least one sample is required"));
    }
    let start = Instant::now();
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<(Stats, u64)> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut stats = Stats::default();
                let mut retries = 0;
                for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    let (v, r) = one_sample(model, x, root_mark, seed, i, budget)?;
                    stats.push(v);
                    retries += r;
                }
                Ok((stats, retries))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut total = Stats::default();
    let mut retries = 0;
    for (s, r) in &partials {
        total.merge(s);
        retries += r;
    }
    Ok(Estimate {
        mean: total.mean(),
        stderr: total.stderr(),
        n,
        seed,
        elapsed: start.elapsed().as_secs_f64(),
        retries,
    })
}

/// Mean of `n` tree scores rooted at `x` with `root_mark`.
pub fn estimate_point(model: &TreeModel, x: &[f64], root_mark: usize, n: u64, seed: u64, options: &SolverOptions) -> Result<Estimate> {
    let pool = pool(options.workers)?;
    estimate_in(&pool, model, x, root_mark, n, seed, options.retry_budget)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub point: Vec<f64>,
    pub estimate: Estimate,
    /// Known value of the estimated quantity, if the problem carries one.
    pub exact: Option<f64>,
    /// `mean - exact`.
    pub error: Option<f64>,
}

/// One estimate per point; point `j` uses the seed `derive_seed(seed, j)`.
pub fn estimate_profile(
    model: &TreeModel,
    points: &[Vec<f64>],
    root_mark: usize,
    n: u64,
    seed: u64,
    options: &SolverOptions,
) -> Result<Vec<ProfileRow>> {
    let pool = pool(options.workers)?;
    let exact = model.problem().exact_for_mark(root_mark);
    points
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let estimate = estimate_in(&pool, model, x, root_mark, n, derive_seed(seed, j as u64), options.retry_budget)?;
            let exact = exact.map(|f| f.value(x));
            let error = exact.map(|e| estimate.mean - e);
            Ok(ProfileRow { point: x.clone(), estimate, exact, error })
        })
        .collect()
}
