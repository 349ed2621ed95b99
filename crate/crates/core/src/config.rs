//! Run configuration for the command-line driver.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::DEFAULT_TRUNC;
use crate::grid::{Axis, Grid2};
use crate::laurent::MAX_DEGREE;
use crate::potentials::{PotentialConfig, PotentialSpec, Preset};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("grid resolution must be at least 3 nodes per side, got {0}")]
    Resolution(usize),
    #[error("lambda entries must be finite and > 0, got {0}")]
    Lambda(f64),
    #[error("lambda list is empty")]
    NoLambda,
    #[error("tolerance `{name}` must be finite and > 0, got {value}")]
    Tolerance { name: &'static str, value: f64 },
    #[error("truncation degree must be in 1..={max}, got {got}")]
    Trunc { got: usize, max: usize },
    #[error("domain {axis}-range [{lo}, {hi}] must satisfy lo < 0 < hi")]
    Domain { axis: char, lo: f64, hi: f64 },
    #[error("finite-difference order must be 2, 4 or 6, got {0}")]
    FdOrder(usize),
    #[error("at least one output format is required")]
    NoFormat,
    #[error("grid: {0}")]
    Grid(#[from] crate::grid::GridError),
    #[error("potential: {0}")]
    Potential(#[from] crate::potentials::PotentialError),
    #[error("reading config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Ply,
    Csv,
}

impl MeshFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            Self::Obj => "obj",
            Self::Ply => "ply",
            Self::Csv => "csv",
        }
    }
}

/// Pass thresholds for the verification invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub curvature: f64,
    pub first_form: f64,
    pub f_cos: f64,
    pub second_form: f64,
    pub sine_gordon: f64,
    pub harmonicity: f64,
    pub torsion: f64,
    pub front: f64,
    pub closure: f64,
    pub boundary: f64,
    pub unitarity: f64,
    pub split: f64,
    pub zcc: f64,
    pub angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            curvature: 1e-3,
            first_form: 1e-8,
            f_cos: 1e-6,
            second_form: 1e-5,
            sine_gordon: 1e-3,
            harmonicity: 1e-3,
            torsion: 1e-2,
            front: 1e-3,
            closure: 1e-6,
            boundary: 1e-3,
            unitarity: 1e-8,
            split: 1e-8,
            zcc: 1e-3,
            angle: 1e-4,
        }
    }
}

impl Tolerances {
    /// Every threshold set to `v`.
    pub fn uniform(v: f64) -> Self {
        Self {
            curvature: v,
            first_form: v,
            f_cos: v,
            second_form: v,
            sine_gordon: v,
            harmonicity: v,
            torsion: v,
            front: v,
            closure: v,
            boundary: v,
            unitarity: v,
            split: v,
            zcc: v,
            angle: v,
        }
    }

    fn entries(&self) -> [(&'static str, f64); 14] {
        [
            ("curvature", self.curvature),
            ("first_form", self.first_form),
            ("f_cos", self.f_cos),
            ("second_form", self.second_form),
            ("sine_gordon", self.sine_gordon),
            ("harmonicity", self.harmonicity),
            ("torsion", self.torsion),
            ("front", self.front),
            ("closure", self.closure),
            ("boundary", self.boundary),
            ("unitarity", self.unitarity),
            ("split", self.split),
            ("zcc", self.zcc),
            ("angle", self.angle),
        ]
    }
}

fn default_domain() -> [f64; 4] {
    [-2.0, 2.0, -2.0, 2.0]
}
fn default_resolution() -> usize {
    129
}
fn default_trunc() -> usize {
    DEFAULT_TRUNC
}
fn default_lambdas() -> Vec<f64> {
    vec![1.0]
}
fn default_fd_order() -> usize {
    crate::analysis::DEFAULT_ORDER
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<MeshFormat> {
    vec![MeshFormat::Obj]
}

/// JSON run configuration. Only `potential` is required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    /// `[x_lo, x_hi, y_lo, y_hi]`.
    #[serde(default = "default_domain")]
    pub domain: [f64; 4],
    /// Nodes per side.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_trunc")]
    pub trunc: usize,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_fd_order")]
    pub fd_order: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<MeshFormat>,
}

impl RunConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            potential: PotentialConfig::from_preset(preset),
            domain: default_domain(),
            resolution: default_resolution(),
            trunc: default_trunc(),
            lambdas: default_lambdas(),
            tolerances: Tolerances::default(),
            fd_order: default_fd_order(),
            out: default_out(),
            formats: default_formats(),
        }
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text, path)
    }

    /// Checks every field; the first violation is returned.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.resolution < 3 {
            return Err(ConfigError::Resolution(self.resolution));
        }
        if self.lambdas.is_empty() {
            return Err(ConfigError::NoLambda);
        }
        if let Some(&l) = self.lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(ConfigError::Lambda(l));
        }
        for (name, value) in self.tolerances.entries() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::Tolerance { name, value });
            }
        }
        let max = MAX_DEGREE as usize / 4;
        if self.trunc == 0 || self.trunc > max {
            return Err(ConfigError::Trunc { got: self.trunc, max });
        }
        let [xl, xh, yl, yh] = self.domain;
        for (axis, lo, hi) in [('x', xl, xh), ('y', yl, yh)] {
            if !(lo < 0.0 && 0.0 < hi && lo.is_finite() && hi.is_finite()) {
                return Err(ConfigError::Domain { axis, lo, hi });
            }
        }
        if ![2, 4, 6].contains(&self.fd_order) {
            return Err(ConfigError::FdOrder(self.fd_order));
        }
        if self.formats.is_empty() {
            return Err(ConfigError::NoFormat);
        }
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2, ConfigError> {
        let [xl, xh, yl, yh] = self.domain;
        Ok(Grid2::new(Axis::new(xl, xh, self.resolution)?, Axis::new(yl, yh, self.resolution)?))
    }

    pub fn spec(&self) -> Result<PotentialSpec, ConfigError> {
        Ok(self.potential.build()?)
    }

    /// Short label for file names.
    pub fn label(&self) -> Result<String, ConfigError> {
        Ok(self.spec()?.name)
    }
}
