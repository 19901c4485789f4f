//! Run configuration, read from JSON and overridden by command-line flags.

use nested_tess::geom::{ConvexPolytope, Dim, PolytopeJson};
use nested_tess::kernels::SplitKernelSpec;
use nested_tess::measure::{DirectionalDistribution, DrivingMeasure};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("field \"{field}\": {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum WindowSpec {
    /// `[0, side]^d`.
    Cube {
        side: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Polytope(PolytopeJson),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub jsonl: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default = "default_dim")]
    pub dim: Dim,
    /// Defaults to `[0, 30]²` in the plane and `[0, 8]³` in space.
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "SplitKernelSpec::stit")]
    pub kernel: SplitKernelSpec,
    #[serde(default)]
    pub measure: DrivingMeasure,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Minus-sampling clearance; three mean cell widths when absent.
    #[serde(default)]
    pub clearance: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_dim() -> Dim {
    Dim::Two
}

fn default_t() -> f64 {
    1.0
}

fn default_reps() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: SCHEMA_VERSION,
            dim: default_dim(),
            window: None,
            t: default_t(),
            kernel: SplitKernelSpec::stit(),
            measure: DrivingMeasure::isotropic(),
            replications: default_reps(),
            seed: 0,
            clearance: None,
            outputs: Outputs::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(
                "schema",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema),
            ));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(invalid(
                "t",
                format!("must be finite and nonnegative, got {}", self.t),
            ));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if let Some(c) = self.clearance {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(invalid(
                    "clearance",
                    format!("must be finite and nonnegative, got {c}"),
                ));
            }
        }
        self.kernel
            .validate()
            .map_err(|e| invalid("kernel", e.to_string()))?;
        if !(self.measure.rho > 0.0 && self.measure.rho.is_finite()) {
            return Err(invalid(
                "measure",
                format!("rho must be positive, got {}", self.measure.rho),
            ));
        }
        let planar_dirs = match &self.measure.directions {
            DirectionalDistribution::Isotropic => None,
            DirectionalDistribution::Atoms(a) => Some(a.iter().all(|(u, _)| u.z == 0.0)),
            DirectionalDistribution::Density(g) => Some(g.dim() == Dim::Two),
        };
        if self.dim == Dim::Two && planar_dirs == Some(false) {
            return Err(invalid(
                "measure",
                "directions must lie in the plane when \"dim\" is 2",
            ));
        }
        if let DirectionalDistribution::Density(g) = &self.measure.directions {
            if g.dim() != self.dim {
                return Err(invalid("measure", "density grid does not match \"dim\""));
            }
        }
        self.window()?;
        Ok(())
    }

    pub fn window(&self) -> Result<ConvexPolytope, ConfigError> {
        let d = self.dim.get();
        let w = match &self.window {
            None => match self.dim {
                Dim::Two => ConvexPolytope::square(30.0),
                Dim::Three => ConvexPolytope::cube(8.0),
            },
            Some(WindowSpec::Cube { side }) => {
                if !(*side > 0.0 && side.is_finite()) {
                    return Err(invalid(
                        "window",
                        format!("side must be positive, got {side}"),
                    ));
                }
                ConvexPolytope::aa_box(self.dim, &vec![0.0; d], &vec![*side; d])
            }
            Some(WindowSpec::Box { lo, hi }) => {
                if lo.len() != d || hi.len() != d {
                    return Err(invalid(
                        "window",
                        format!("box corners need {d} coordinates"),
                    ));
                }
                if lo
                    .iter()
                    .zip(hi)
                    .any(|(a, b)| a >= b || !a.is_finite() || !b.is_finite())
                {
                    return Err(invalid("window", "box needs lo < hi in every coordinate"));
                }
                ConvexPolytope::aa_box(self.dim, lo, hi)
            }
            Some(WindowSpec::Polytope(p)) => {
                if p.dim != self.dim {
                    return Err(invalid(
                        "window",
                        "polytope dimension does not match \"dim\"",
                    ));
                }
                ConvexPolytope::try_from(p.clone()).map_err(|e| invalid("window", e.to_string()))?
            }
        };
        Ok(w)
    }
}
