//! Boundary angle functions α(x), β(y) and the potentials η₊, η₋ built from them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laurent::{Mat2, C64};

pub const DEFAULT_STEP: f64 = 1.0 / 256.0;
pub const DEFAULT_INTERVAL: [f64; 2] = [-4.0, 4.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("{name}: parameter {t} outside [{lo}, {hi}]")]
    Domain { name: String, t: f64, lo: f64, hi: f64 },
    #[error("{name}: {reason}")]
    BadSamples { name: String, reason: String },
    #[error("unknown preset '{0}' (expected pseudosphere, vacuum or c0_kink)")]
    UnknownPreset(String),
    #[error("invalid sampling: {0}")]
    BadSampling(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    PiecewiseLinear,
    /// Value of the left node on each cell.
    PiecewiseConstant,
}

type Analytic = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Sampled real function on a compact interval containing 0.
#[derive(Clone)]
pub struct BoundaryFn {
    name: String,
    nodes: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
    analytic: Option<Analytic>,
    kinks: Vec<f64>,
}

impl fmt::Debug for BoundaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryFn")
            .field("name", &self.name)
            .field("interval", &self.interval())
            .field("samples", &self.nodes.len())
            .field("interpolation", &self.interpolation)
            .field("analytic", &self.analytic.is_some())
            .field("kinks", &self.kinks)
            .finish()
    }
}

/// Nodes `k·step` inside `[lo, hi]`, plus the endpoints when off-lattice.
fn lattice(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k_lo = (lo / step - 1e-9).ceil() as i64;
    let k_hi = (hi / step + 1e-9).floor() as i64;
    let mut nodes = Vec::with_capacity((k_hi - k_lo + 3).max(0) as usize);
    if (k_lo as f64 * step - lo).abs() > 1e-12 {
        nodes.push(lo);
    }
    nodes.extend((k_lo..=k_hi).map(|k| k as f64 * step));
    if (k_hi as f64 * step - hi).abs() > 1e-12 {
        nodes.push(hi);
    }
    nodes
}

impl BoundaryFn {
    /// Builds from explicit `(t, value)` samples with strictly increasing `t`.
    pub fn from_samples(
        name: impl Into<String>,
        samples: &[[f64; 2]],
        interpolation: Interpolation,
    ) -> Result<Self, PotentialError> {
        let name = name.into();
        let bad = |reason: &str| PotentialError::BadSamples {
            name: name.clone(),
            reason: reason.to_string(),
        };
        if samples.len() < 2 {
            return Err(bad("need at least two samples"));
        }
        if samples.iter().any(|s| !s[0].is_finite() || !s[1].is_finite()) {
            return Err(bad("samples must be finite"));
        }
        if samples.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(bad("sample abscissae must be strictly increasing"));
        }
        let (lo, hi) = (samples[0][0], samples[samples.len() - 1][0]);
        if lo > 0.0 || hi < 0.0 {
            return Err(bad("interval must contain 0"));
        }
        let kinks = samples
            .windows(3)
            .filter(|w| match interpolation {
                Interpolation::PiecewiseConstant => w[1][1] != w[0][1],
                Interpolation::PiecewiseLinear => {
                    let l = (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]);
                    let r = (w[2][1] - w[1][1]) / (w[2][0] - w[1][0]);
                    (r - l).abs() > 1e-12 * (1.0 + l.abs() + r.abs())
                }
            })
            .map(|w| w[1][0])
            .collect();
        Ok(Self {
            nodes: samples.iter().map(|s| s[0]).collect(),
            values: samples.iter().map(|s| s[1]).collect(),
            name,
            interpolation,
            analytic: None,
            kinks,
        })
    }

    /// Samples `f` on the `step` lattice of `[lo, hi]` and keeps `f` for exact evaluation.
    pub fn from_analytic(
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        step: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, PotentialError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(PotentialError::BadSampling(format!("step must be positive, got {step}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && hi >= 0.0 && lo < hi) {
            return Err(PotentialError::BadSampling(format!(
                "interval [{lo}, {hi}] must be finite and contain 0"
            )));
        }
        let nodes = lattice(lo, hi, step);
        let values = nodes.iter().map(|&t| f(t)).collect();
        Ok(Self {
            name: name.into(),
            nodes,
            values,
            interpolation: Interpolation::PiecewiseLinear,
            analytic: Some(Arc::new(f)),
            kinks: Vec::new(),
        })
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Sample abscissae; every one of them is a potential breakpoint.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Points where the function is known not to be differentiable.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    fn check(&self, t: f64) -> Result<(), PotentialError> {
        let (lo, hi) = self.interval();
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if t.is_finite() && t >= lo - slack && t <= hi + slack {
            Ok(())
        } else {
            Err(PotentialError::Domain {
                name: self.name.clone(),
                t,
                lo,
                hi,
            })
        }
    }

    /// Cell index `c` with `nodes[c] <= t < nodes[c+1]` (last cell closed).
    fn cell(&self, t: f64) -> usize {
        let p = self.nodes.partition_point(|&s| s <= t);
        p.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// Value of the cell-`c` interpolant at `t` (extended linearly if `t` is just outside).
    fn on_cell(&self, c: usize, t: f64) -> f64 {
        match self.interpolation {
            Interpolation::PiecewiseConstant => self.values[c],
            Interpolation::PiecewiseLinear => {
                let (t0, t1) = (self.nodes[c], self.nodes[c + 1]);
                let w = (t - t0) / (t1 - t0);
                self.values[c] * (1.0 - w) + self.values[c + 1] * w
            }
        }
    }

    /// Interpolated value of the stored representative.
    pub fn eval(&self, t: f64) -> Result<f64, PotentialError> {
        self.check(t)?;
        Ok(self.on_cell(self.cell(t), t))
    }

    /// Exact value when an analytic closure is attached, else the interpolant.
    pub fn eval_exact(&self, t: f64) -> Result<f64, PotentialError> {
        self.check(t)?;
        Ok(match &self.analytic {
            Some(f) => f(t),
            None => self.on_cell(self.cell(t), t),
        })
    }

    /// One-sided values at the ends of a segment that lies inside a single
    /// sample cell; for piecewise-constant data both values are the cell value.
    pub fn segment_values(&self, t0: f64, t1: f64) -> Result<(f64, f64), PotentialError> {
        self.check(t0)?;
        self.check(t1)?;
        let c = self.cell(0.5 * (t0 + t1));
        Ok((self.on_cell(c, t0), self.on_cell(c, t1)))
    }
}

/// The pair of boundary functions that determines the input potentials.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub name: String,
    pub alpha: BoundaryFn,
    pub beta: BoundaryFn,
}

fn off_diag(a: C64, b: C64) -> Mat2 {
    Mat2::new(C64::new(0.0, 0.0), a, b, C64::new(0.0, 0.0))
}

impl PotentialSpec {
    /// λ¹ coefficient of η₊: `(i/2)[[0, e^{−iα}], [e^{iα}, 0]]`.
    pub fn eta_plus(&self, x: f64) -> Result<Mat2, PotentialError> {
        let a = self.alpha.eval(x)?;
        let h = C64::new(0.0, 0.5);
        Ok(off_diag(h * C64::from_polar(1.0, -a), h * C64::from_polar(1.0, a)))
    }

    /// λ⁻¹ coefficient of η₋: `−(i/2)[[0, e^{iβ}], [e^{−iβ}, 0]]`.
    pub fn eta_minus(&self, y: f64) -> Result<Mat2, PotentialError> {
        let b = self.beta.eval(y)?;
        let h = C64::new(0.0, -0.5);
        Ok(off_diag(h * C64::from_polar(1.0, b), h * C64::from_polar(1.0, -b)))
    }

    /// True when either boundary function carries a kink.
    pub fn has_kinks(&self) -> bool {
        !self.alpha.kinks().is_empty() || !self.beta.kinks().is_empty()
    }
}

/// Named input families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    Pseudosphere,
    Vacuum,
    C0Kink { amplitude: f64 },
}

impl Preset {
    pub fn parse(name: &str, amplitude: Option<f64>) -> Result<Self, PotentialError> {
        match name {
            "pseudosphere" => Ok(Self::Pseudosphere),
            "vacuum" => Ok(Self::Vacuum),
            "c0_kink" | "c0-kink" => Ok(Self::C0Kink {
                amplitude: amplitude.unwrap_or(1.0),
            }),
            other => Err(PotentialError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pseudosphere => "pseudosphere",
            Self::Vacuum => "vacuum",
            Self::C0Kink { .. } => "c0_kink",
        }
    }

    fn alpha(&self, lo: f64, hi: f64, step: f64) -> Result<BoundaryFn, PotentialError> {
        side(*self, Side::Alpha, lo, hi, step)
    }

    fn beta(&self, lo: f64, hi: f64, step: f64) -> Result<BoundaryFn, PotentialError> {
        side(*self, Side::Beta, lo, hi, step)
    }

    /// Spec sampled with `step` on `[interval[0], interval[1]]` for both sides.
    pub fn spec_with(&self, interval: [f64; 2], step: f64) -> Result<PotentialSpec, PotentialError> {
        Ok(PotentialSpec {
            name: self.name().to_string(),
            alpha: self.alpha(interval[0], interval[1], step)?,
            beta: self.beta(interval[0], interval[1], step)?,
        })
    }

    pub fn spec(&self) -> PotentialSpec {
        self.spec_with(DEFAULT_INTERVAL, DEFAULT_STEP)
            .expect("default sampling is valid")
    }
}

#[derive(Clone, Copy)]
enum Side {
    Alpha,
    Beta,
}

fn side(preset: Preset, s: Side, lo: f64, hi: f64, step: f64) -> Result<BoundaryFn, PotentialError> {
    let label = match s {
        Side::Alpha => "alpha",
        Side::Beta => "beta",
    };
    match preset {
        Preset::Pseudosphere => match s {
            Side::Alpha => BoundaryFn::from_analytic(label, lo, hi, step, |x| 4.0 * x.exp().atan() - PI),
            Side::Beta => BoundaryFn::from_analytic(label, lo, hi, step, |y| 4.0 * y.exp().atan()),
        },
        Preset::Vacuum => BoundaryFn::from_analytic(label, lo, hi, step, |_| 0.0),
        Preset::C0Kink { amplitude } => {
            if !amplitude.is_finite() {
                return Err(PotentialError::BadSampling(format!("amplitude must be finite, got {amplitude}")));
            }
            let f = BoundaryFn::from_analytic(label, lo, hi, step, move |t| amplitude * t.abs())?;
            Ok(if amplitude != 0.0 { f.with_kinks(vec![0.0]) } else { f })
        }
    }
}

pub fn preset_pseudosphere() -> PotentialSpec {
    Preset::Pseudosphere.spec()
}

pub fn preset_vacuum() -> PotentialSpec {
    Preset::Vacuum.spec()
}

pub fn preset_c0_kink(amplitude: f64) -> PotentialSpec {
    Preset::C0Kink { amplitude }.spec()
}

/// Where a boundary function comes from in a JSON config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySource {
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    Samples {
        samples: Vec<[f64; 2]>,
    },
}

/// JSON schema: `{"alpha": {...}, "beta": {...}, "step": h, "interval": [lo, hi]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub alpha: BoundarySource,
    pub beta: BoundarySource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<Interpolation>,
}

impl PotentialConfig {
    pub fn from_preset(preset: Preset) -> Self {
        let amplitude = match preset {
            Preset::C0Kink { amplitude } => Some(amplitude),
            _ => None,
        };
        let src = BoundarySource::Preset {
            preset: preset.name().to_string(),
            amplitude,
        };
        Self {
            alpha: src.clone(),
            beta: src,
            step: None,
            interval: None,
            interpolation: None,
        }
    }

    pub fn build(&self) -> Result<PotentialSpec, PotentialError> {
        let step = self.step.unwrap_or(DEFAULT_STEP);
        let [lo, hi] = self.interval.unwrap_or(DEFAULT_INTERVAL);
        let interp = self.interpolation.unwrap_or_default();
        let make = |src: &BoundarySource, s: Side| -> Result<BoundaryFn, PotentialError> {
            match src {
                BoundarySource::Preset { preset, amplitude } => {
                    let p = Preset::parse(preset, *amplitude)?;
                    side(p, s, lo, hi, step)
                }
                BoundarySource::Samples { samples } => {
                    let label = match s {
                        Side::Alpha => "alpha",
                        Side::Beta => "beta",
                    };
                    BoundaryFn::from_samples(label, samples, interp)
                }
            }
        };
        let alpha = make(&self.alpha, Side::Alpha)?;
        let beta = make(&self.beta, Side::Beta)?;
        let name = match (&self.alpha, &self.beta) {
            (BoundarySource::Preset { preset: a, .. }, BoundarySource::Preset { preset: b, .. }) if a == b => a.clone(),
            _ => "custom".to_string(),
        };
        Ok(PotentialSpec { name, alpha, beta })
    }
}
