//! Problem data: polynomial gradient nonlinearities, boundary data, and the
//! named problem registry used by configuration files.

pub mod benchmarks;
pub mod expr;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dot, norm_sq, SharedScalar, SharedVector, VectorField};
use crate::kernels::BallGeometry;
use crate::rng::stream_rng;

pub use benchmarks::{
    make_linear_gradient_problem, make_nonlinear_gradient_problem, phi_k_alpha, psi_k_alpha,
    radial_derivative_k_alpha, PsiProfile,
};
pub use expr::{Expr, ExprContext};

/// Exponents `(l_0, …, l_m)` of one monomial `y^{l_0} Π (b_i·z)^{l_i}`.
///
/// A particle dying with offspring index `l` spawns `l_0` children of mark 0,
/// then `l_1` of mark 1, and so on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Number of gradient directions `m`.
    pub fn order(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn child_count(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Marks of the children in birth order.
    pub fn child_marks(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(mark, &n)| std::iter::repeat_n(mark, n as usize))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `f(x, y, z) = Σ_l c_l(x) y^{l_0} Π_i (b_i(x)·z)^{l_i}`.
#[derive(Clone)]
pub struct PolynomialNonlinearity {
    support: Vec<MultiIndex>,
    coefficients: Vec<SharedScalar>,
    directions: Vec<SharedVector>,
}

impl PolynomialNonlinearity {
    pub fn new(terms: Vec<(MultiIndex, SharedScalar)>, directions: Vec<SharedVector>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("terms", "the nonlinearity needs at least one term"));
        }
        let m = directions.len();
        let mut support = Vec::with_capacity(terms.len());
        let mut coefficients = Vec::with_capacity(terms.len());
        for (index, c) in terms {
            if index.exponents().len() != m + 1 {
                return Err(Error::invalid(
                    "terms",
                    format!("multi-index {index} must have {} entries for {m} direction(s)", m + 1),
                ));
            }
            if support.contains(&index) {
                return Err(Error::invalid("terms", format!("multi-index {index} appears twice")));
            }
            support.push(index);
            coefficients.push(c);
        }
        Ok(Self { support, coefficients, directions })
    }

    /// Number of gradient directions `m`.
    pub fn order(&self) -> usize {
        self.directions.len()
    }

    pub fn support(&self) -> &[MultiIndex] {
        &self.support
    }

    pub fn directions(&self) -> &[SharedVector] {
        &self.directions
    }

    pub(crate) fn coefficient_at(&self, position: usize) -> &SharedScalar {
        &self.coefficients[position]
    }

    pub fn coefficient(&self, index: &MultiIndex) -> Option<&SharedScalar> {
        self.support.iter().position(|l| l == index).map(|i| &self.coefficients[i])
    }

    /// `f(x, u, ∇u)`.
    pub fn evaluate(&self, x: &[f64], u: f64, grad: &[f64]) -> f64 {
        let projections: Vec<f64> = self.directions.iter().map(|b| dot(&b.value(x), grad)).collect();
        self.support
            .iter()
            .zip(&self.coefficients)
            .map(|(l, c)| {
                let e = l.exponents();
                let mut term = c.value(x) * u.powi(e[0] as i32);
                for (p, &k) in projections.iter().zip(&e[1..]) {
                    term *= p.powi(k as i32);
                }
                term
            })
            .sum()
    }
}

impl fmt::Debug for PolynomialNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolynomialNonlinearity")
            .field("support", &self.support)
            .field("order", &self.order())
            .finish()
    }
}

/// Sampled suprema behind the boundedness assumptions on the data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `sup |c_l|` per multi-index, in support order.
    pub coefficient_sup: Vec<f64>,
    /// `max_i sup |b_i|`.
    pub b0_inf: f64,
    /// `max_i sup |b_i(x)| / (R - |x|)`.
    pub b1_inf: f64,
    /// `sup |φ|` over exterior samples.
    pub boundary_sup: f64,
}

/// The semilinear problem on `B(0, R)` with exterior data `φ`.
#[derive(Clone)]
pub struct PdeProblem {
    name: String,
    pub geometry: BallGeometry,
    pub boundary: SharedScalar,
    pub nonlinearity: PolynomialNonlinearity,
    exact: Option<SharedScalar>,
    exact_directional: Vec<SharedScalar>,
}

impl PdeProblem {
    pub fn new(
        name: impl Into<String>,
        geometry: BallGeometry,
        boundary: SharedScalar,
        nonlinearity: PolynomialNonlinearity,
    ) -> Result<Self> {
        geometry.validate()?;
        Ok(Self { name: name.into(), geometry, boundary, nonlinearity, exact: None, exact_directional: Vec::new() })
    }

    /// Attaches a known solution and, optionally, its derivatives `b_i·∇u`.
    pub fn with_exact(mut self, exact: SharedScalar, directional: Vec<SharedScalar>) -> Self {
        self.exact = Some(exact);
        self.exact_directional = directional;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Known value of the quantity estimated by root mark `mark`.
    pub fn exact_for_mark(&self, mark: usize) -> Option<&SharedScalar> {
        if mark == 0 {
            self.exact.as_ref()
        } else {
            self.exact_directional.get(mark - 1)
        }
    }

    /// Samples the data on `samples` interior and exterior points and fails if
    /// any value is not finite.
    pub fn check_assumptions(&self, samples: usize, seed: u64) -> Result<AssumptionReport> {
        let g = &self.geometry;
        let mut rng = stream_rng(seed, 0);
        let nl = &self.nonlinearity;
        let mut coefficient_sup = vec![0.0f64; nl.support.len()];
        let (mut b0_inf, mut b1_inf, mut boundary_sup) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..samples {
            let direction = unit_vector(g.dim, &mut rng);
            // Radii cover the closed ball, with extra weight near the sphere.
            let u: f64 = rng.random();
            let r = g.radius * if i % 2 == 0 { u.powf(1.0 / g.dim as f64) } else { 1.0 - u * u * 1e-3 };
            let x: Vec<f64> = direction.iter().map(|c| c * r).collect();
            for (sup, c) in coefficient_sup.iter_mut().zip(&nl.coefficients) {
                *sup = sup.max(c.value(&x).abs());
            }
            for b in &nl.directions {
                let norm = norm_sq(&b.value(&x)).sqrt();
                b0_inf = b0_inf.max(norm);
                if r < g.radius {
                    b1_inf = b1_inf.max(norm / (g.radius - r));
                }
            }
            let outside = g.radius * (1.0 + 1e-9 + (1.0 - rng.random::<f64>()).powf(-0.5) - 1.0);
            let y: Vec<f64> = direction.iter().map(|c| c * outside).collect();
            boundary_sup = boundary_sup.max(self.boundary.value(&y).abs());
        }
        let report = AssumptionReport { coefficient_sup, b0_inf, b1_inf, boundary_sup };
        for (index, sup) in nl.support.iter().zip(&report.coefficient_sup) {
            if !sup.is_finite() {
                return Err(Error::Domain(format!("coefficient {index} is unbounded on the ball")));
            }
        }
        if !(report.b0_inf.is_finite() && report.b1_inf.is_finite()) {
            return Err(Error::Domain("direction fields violate the boundedness conditions".into()));
        }
        if !report.boundary_sup.is_finite() {
            return Err(Error::Domain("boundary data is unbounded outside the ball".into()));
        }
        Ok(report)
    }
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("name", &self.name)
            .field("geometry", &self.geometry)
            .field("nonlinearity", &self.nonlinearity)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

fn unit_vector<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm_sq(&v).sqrt();
        if n > 0.0 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Names accepted by [`build_problem`].
pub const REGISTERED_PROBLEMS: [&str; 3] = ["linear-gradient", "nonlinear-gradient", "custom"];

/// Declarative problem description, as found in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default)]
    pub k: u32,
    pub alpha: f64,
    pub dim: usize,
    #[serde(default = "unit_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSpec>,
}

fn unit_radius() -> f64 {
    1.0
}

/// A user-defined problem written with [`Expr`] strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSpec {
    #[serde(default = "zero_expr")]
    pub boundary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub directions: Vec<DirectionSpec>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub index: MultiIndex,
    pub coefficient: String,
}

/// Either `b(x) = g(x) x` from a scalar profile, or one expression per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    Radial { radial: String },
    Components { components: Vec<String> },
}

struct ExprVector {
    radial: Option<Expr>,
    components: Vec<Expr>,
}

impl VectorField for ExprVector {
    fn value_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.radial {
            Some(g) => {
                let s = g.eval(x);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = s * xi;
                }
            }
            None => {
                for (o, c) in out.iter_mut().zip(&self.components) {
                    *o = c.eval(x);
                }
            }
        }
    }
}

/// Resolves a named problem from the registry.
pub fn build_problem(spec: &ProblemSpec) -> Result<PdeProblem> {
    let geometry = BallGeometry::new(spec.radius, spec.dim, spec.alpha)?;
    match spec.name.as_str() {
        "linear-gradient" | "nonlinear-gradient" => {
            if spec.radius != 1.0 {
                return Err(Error::invalid("radius", format!("benchmark '{}' is posed on the unit ball", spec.name)));
            }
            if spec.custom.is_some() {
                return Err(Error::invalid("custom", format!("benchmark '{}' takes no custom section", spec.name)));
            }
            if spec.name == "linear-gradient" {
                make_linear_gradient_problem(spec.k, spec.alpha, spec.dim)
            } else {
                make_nonlinear_gradient_problem(spec.k, spec.alpha, spec.dim)
            }
        }
        "custom" => {
            let custom = spec
                .custom
                .as_ref()
                .ok_or_else(|| Error::invalid("custom", "problem 'custom' needs a custom section"))?;
            build_custom(geometry, custom)
        }
        other => Err(Error::invalid(
            "name",
            format!("unknown problem '{other}' (known: {})", REGISTERED_PROBLEMS.join(", ")),
        )),
    }
}

fn build_custom(geometry: BallGeometry, spec: &CustomSpec) -> Result<PdeProblem> {
    let ctx = ExprContext::new(geometry.dim, geometry.alpha, geometry.radius).with_params(spec.params.clone());
    let mut terms = Vec::with_capacity(spec.terms.len());
    for t in &spec.terms {
        let c: SharedScalar = Arc::new(Expr::parse(&t.coefficient, &ctx)?);
        terms.push((t.index.clone(), c));
    }
    let mut directions: Vec<SharedVector> = Vec::with_capacity(spec.directions.len());
    for d in &spec.directions {
        let field = match d {
            DirectionSpec::Radial { radial } => ExprVector { radial: Some(Expr::parse(radial, &ctx)?), components: vec![] },
            DirectionSpec::Components { components } => {
                if components.len() != geometry.dim {
                    return Err(Error::invalid(
                        "directions",
                        format!("{} components given for dimension {}", components.len(), geometry.dim),
                    ));
                }
                let parsed = components.iter().map(|c| Expr::parse(c, &ctx)).collect::<Result<Vec<_>>>()?;
                ExprVector { radial: None, components: parsed }
            }
        };
        directions.push(Arc::new(field));
    }
    let nonlinearity = PolynomialNonlinearity::new(terms, directions)?;
    let boundary: SharedScalar = Arc::new(Expr::parse(&spec.boundary, &ctx)?);
    let problem = PdeProblem::new("custom", geometry, boundary, nonlinearity)?;
    Ok(match &spec.exact {
        Some(src) => problem.with_exact(Arc::new(Expr::parse(src, &ctx)?), Vec::new()),
        None => problem,
    })
}
