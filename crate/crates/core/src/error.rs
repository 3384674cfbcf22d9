use thiserror::Error;

use crate::quadrature::QuadratureError;
use crate::specfun::SpecialFunctionError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates its invariant; `name` is the offending field.
    #[error("invalid {name}: {detail}")]
    InvalidParameter { name: String, detail: String },
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Kernel evaluated at (numerically) coincident points or on the sphere itself.
    #[error("degenerate kernel input: {0}")]
    DegenerateKernel(String),
    #[error("branching tree exceeded {limit} generations")]
    DepthExceeded { limit: u32 },
    #[error("sample {sample}: gave up after {attempts} degenerate draws")]
    RetryBudgetExhausted { sample: u64, attempts: u32 },
    #[error("expression error: {0}")]
    Expression(String),
    #[error(transparent)]
    Special(#[from] SpecialFunctionError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self::InvalidParameter { name: name.into(), detail: detail.into() }
    }

    /// Name of the offending field, for configuration diagnostics.
    pub fn field(&self) -> Option<&str> {
        match self {
            Self::InvalidParameter { name, .. } => Some(name),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
