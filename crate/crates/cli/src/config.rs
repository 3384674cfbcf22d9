//! Run configuration files and their validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracbranch::branching::{TreeModel, TreeOptions};
use fracbranch::problems::{build_problem, ProblemSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {detail}")]
    Invalid { field: String, detail: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), detail: detail.into() }
    }

    /// Qualifies a library error with the config section it came from.
    fn from_core(section: &str, err: fracbranch::Error) -> Self {
        match err {
            fracbranch::Error::InvalidParameter { name, detail } => Self::invalid(format!("{section}.{name}"), detail),
            other => Self::invalid(section, other.to_string()),
        }
    }

    /// Dotted path of the offending field, for validation errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            Self::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Written to stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// Evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PointSet {
    /// `count` equally spaced points from the center to `max_radius` along
    /// `direction` (the first axis by default).
    Ray {
        count: usize,
        max_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
    List { coordinates: Vec<Vec<f64>> },
}

impl PointSet {
    fn resolve(&self, dim: usize, radius: f64) -> Result<Vec<Vec<f64>>, ConfigError> {
        let points = match self {
            PointSet::Ray { count, max_radius, direction } => {
                if *count < 2 {
                    return Err(ConfigError::invalid("points.count", "a ray needs at least two points"));
                }
                if !(*max_radius > 0.0 && *max_radius < radius) {
                    return Err(ConfigError::invalid("points.max_radius", format!("must lie in (0, {radius})")));
                }
                let dir = match direction {
                    Some(v) => {
                        if v.len() != dim {
                            return Err(ConfigError::invalid("points.direction", format!("expected {dim} components")));
                        }
                        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                        if !(n > 0.0 && n.is_finite()) {
                            return Err(ConfigError::invalid("points.direction", "must be a nonzero finite vector"));
                        }
                        v.iter().map(|c| c / n).collect()
                    }
                    None => {
                        let mut e = vec![0.0; dim];
                        e[0] = 1.0;
                        e
                    }
                };
                (0..*count)
                    .map(|j| {
                        let r = max_radius * j as f64 / (*count - 1) as f64;
                        dir.iter().map(|c| c * r).collect()
                    })
                    .collect()
            }
            PointSet::List { coordinates } => {
                for (j, x) in coordinates.iter().enumerate() {
                    if x.len() != dim {
                        return Err(ConfigError::invalid(format!("points.coordinates[{j}]"), format!("expected {dim} components")));
                    }
                    if !(x.iter().map(|c| c * c).sum::<f64>() < radius * radius) {
                        return Err(ConfigError::invalid(format!("points.coordinates[{j}]"), "point is not inside the ball"));
                    }
                }
                coordinates.clone()
            }
        };
        if points.is_empty() {
            return Err(ConfigError::invalid("points", "no evaluation points"));
        }
        Ok(points)
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    /// 0 estimates `u`; `i ≥ 1` estimates `b_i·∇u`.
    #[serde(default)]
    pub root_mark: usize,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub tree: TreeOptions,
    pub points: PointSet,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A validated configuration with its model and resolved points.
pub struct PreparedRun {
    pub config: RunConfig,
    pub model: TreeModel,
    pub points: Vec<Vec<f64>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    /// Checks fields in declaration order and reports the first invalid one.
    pub fn prepare(self) -> Result<PreparedRun, ConfigError> {
        if self.samples == 0 {
            return Err(ConfigError::invalid("samples", "at least one sample is required"));
        }
        if self.workers == 0 {
            return Err(ConfigError::invalid("workers", "at least one worker is required"));
        }
        let problem = build_problem(&self.problem).map_err(|e| ConfigError::from_core("problem", e))?;
        if self.root_mark > problem.nonlinearity.order() {
            return Err(ConfigError::invalid(
                "root_mark",
                format!("the problem has directions 1..={}", problem.nonlinearity.order()),
            ));
        }
        let geometry = problem.geometry;
        let model = TreeModel::new(Arc::new(problem), &self.tree).map_err(|e| ConfigError::from_core("tree", e))?;
        let points = self.points.resolve(geometry.dim, geometry.radius)?;
        Ok(PreparedRun { config: self, model, points })
    }
}
