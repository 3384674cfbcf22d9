//! Scalar and vector fields on `R^d`, the building blocks of problem data.

use std::fmt;
use std::sync::Arc;

pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
}

pub trait VectorField: Send + Sync {
    /// Writes the field value at `x` into `out` (same length as `x`).
    fn value_into(&self, x: &[f64], out: &mut [f64]);

    fn value(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.value_into(x, &mut out);
        out
    }
}

impl<F> ScalarField for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

impl<F> VectorField for F
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn value_into(&self, x: &[f64], out: &mut [f64]) {
        self(x, out)
    }
}

pub type SharedScalar = Arc<dyn ScalarField>;
pub type SharedVector = Arc<dyn VectorField>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
}

/// The vector field `x ↦ g(|x|²) x` for a scalar profile `g`.
pub struct RadialVector<G> {
    profile: G,
}

impl<G> RadialVector<G> {
    pub fn new(profile: G) -> Self {
        Self { profile }
    }
}

impl<G: Fn(f64) -> f64 + Send + Sync> VectorField for RadialVector<G> {
    fn value_into(&self, x: &[f64], out: &mut [f64]) {
        let s = (self.profile)(norm_sq(x));
        for (o, xi) in out.iter_mut().zip(x) {
            *o = s * xi;
        }
    }
}

impl<G> fmt::Debug for RadialVector<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RadialVector")
    }
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
