//! Monte Carlo branching-tree estimates of solutions to semilinear equations
//! `Δ_α u + f(x, u, ∇u) = 0` on a ball, driven by isotropic α-stable motion.
//!
//! A [`problems::PdeProblem`] fixes the geometry, boundary data and polynomial
//! gradient nonlinearity; a [`branching::TreeModel`] adds lifetime and
//! offspring laws; [`solver::estimate_point`] averages tree scores.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branching;
pub mod error;
pub mod field;
pub mod kernels;
pub mod problems;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod specfun;
pub mod stable;

pub use error::{Error, Result};
