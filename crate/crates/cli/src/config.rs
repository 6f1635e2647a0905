//! Experiment configuration, read from a single JSON object.
//!
//! ```json
//! {
//!   "config_version": 1,
//!   "backend": "axisym",
//!   "n_grid": 128,
//!   "alpha": 0.25,
//!   "initial": { "kind": "perturbed", "semi_axes": [1.1, 0.826], "modes": [{ "k": 3, "amplitude": 0.05 }] },
//!   "flow": { "max_steps": 20000, "stop": { "ellipsoid_fit": 1e-3 } },
//!   "outputs": { "records_path": "records.csv", "snapshot_path": "snap_{step}.csv", "snapshot_every": 500 },
//!   "seed": 7
//! }
//! ```
//!
//! Relative paths are taken relative to the working directory.

use std::fs;
use std::path::{Path, PathBuf};

use gcf_core::flow::{FlowConfig, StopRule};
use gcf_core::soliton::SolveOptions;
use gcf_core::{AxisymBody, ConvexBody, CurveBody, DiagnosticBody, GeometryError, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Curve,
    Axisym,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub config_version: u32,
    pub backend: Backend,
    pub n_grid: usize,
    pub alpha: f64,
    pub initial: InitialShape,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub soliton: SolitonSection,
    #[serde(default)]
    pub outputs: Outputs,
    /// Seeds `initial.random_modes`.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Sphere,
    Ellipsoid,
    Perturbed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialShape {
    pub kind: ShapeKind,
    pub radius: Option<f64>,
    /// `[a, b]` of an ellipse, or `[a, c]` (equatorial, polar) of a spheroid.
    pub semi_axes: Option<[f64; 2]>,
    #[serde(default)]
    pub modes: Vec<ModeEntry>,
    pub random_modes: Option<RandomModes>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub k: u32,
    pub amplitude: f64,
}

/// Modes `k = 2..=max_k`, each with amplitude drawn uniformly from
/// `±max_amplitude / k²`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomModes {
    pub max_k: u32,
    pub max_amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StopSetting {
    #[default]
    None,
    MaxTime(f64),
    Roundness(f64),
    SolitonResidual(f64),
    EllipsoidFit(f64),
}

impl From<StopSetting> for StopRule {
    fn from(s: StopSetting) -> Self {
        match s {
            StopSetting::None => StopRule::None,
            StopSetting::MaxTime(v) => StopRule::MaxTime(v),
            StopSetting::Roundness(v) => StopRule::Roundness(v),
            StopSetting::SolitonResidual(v) => StopRule::SolitonResidual(v),
            StopSetting::EllipsoidFit(v) => StopRule::EllipsoidFit(v),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub dt_safety: f64,
    pub max_steps: usize,
    pub normalize_every: usize,
    pub emit_every: usize,
    pub stop: StopSetting,
}

impl Default for FlowSection {
    fn default() -> Self {
        let d = FlowConfig::new(1.0);
        Self {
            dt_safety: d.dt_safety,
            max_steps: d.max_steps,
            normalize_every: d.normalize_every,
            emit_every: d.emit_every,
            stop: StopSetting::None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolitonSection {
    pub tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub tikhonov: Option<f64>,
}

impl Default for SolitonSection {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            tol: d.tol,
            max_iters: d.max_iters,
            damping: d.damping,
            tikhonov: d.tikhonov,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub records_path: Option<PathBuf>,
    /// May contain `{step}`, replaced by the flow step (or Newton iteration
    /// count for `soliton`).
    pub snapshot_path: Option<String>,
    pub snapshot_every: Option<usize>,
    /// Solver report of `soliton`.
    pub report_path: Option<PathBuf>,
}

impl Outputs {
    pub fn snapshot_at(&self, step: usize) -> Option<PathBuf> {
        self.snapshot_path
            .as_ref()
            .map(|t| PathBuf::from(t.replace("{step}", &step.to_string())))
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::ConfigInvalid {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| CliError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.config_version != CONFIG_VERSION {
            return Err(invalid(
                "config_version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.config_version),
            ));
        }
        let min = match self.backend {
            Backend::Curve => CurveBody::MIN_SAMPLES,
            Backend::Axisym => AxisymBody::MIN_SAMPLES,
        };
        if self.n_grid < min {
            return Err(invalid("n_grid", format!("need at least {min} samples, got {}", self.n_grid)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        let init = &self.initial;
        if init.kind != ShapeKind::Perturbed && (!init.modes.is_empty() || init.random_modes.is_some()) {
            return Err(invalid("initial.modes", "modes are only used with kind `perturbed`"));
        }
        if init.kind == ShapeKind::Ellipsoid && init.semi_axes.is_none() {
            return Err(invalid("initial.semi_axes", "required for kind `ellipsoid`"));
        }
        if init.radius.is_some() && init.semi_axes.is_some() {
            return Err(invalid("initial.radius", "give either radius or semi_axes"));
        }
        if let Some(r) = init.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid("initial.radius", format!("must be positive, got {r}")));
            }
        }
        if let Some(ax) = init.semi_axes {
            if ax.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                return Err(invalid("initial.semi_axes", format!("must be positive, got {ax:?}")));
            }
        }
        if let Some(r) = init.random_modes {
            if r.max_k < 2 || !(r.max_amplitude >= 0.0) {
                return Err(invalid(
                    "initial.random_modes",
                    "max_k must be at least 2 and max_amplitude non-negative",
                ));
            }
        }
        if let Some(every) = self.outputs.snapshot_every {
            let Some(t) = &self.outputs.snapshot_path else {
                return Err(invalid("outputs.snapshot_every", "needs outputs.snapshot_path"));
            };
            if !t.contains("{step}") {
                return Err(invalid("outputs.snapshot_path", "must contain `{step}` when snapshot_every is set"));
            }
            if every == 0 || every % self.flow.emit_every.max(1) != 0 {
                return Err(invalid(
                    "outputs.snapshot_every",
                    format!("must be a positive multiple of flow.emit_every ({})", self.flow.emit_every),
                ));
            }
        }
        self.flow_config()
            .validate()
            .map_err(|e| invalid("flow", e.to_string()))?;
        self.solve_options()
            .validate()
            .map_err(|e| invalid("soliton", e.to_string()))?;
        Ok(())
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            alpha: self.alpha,
            dt_safety: self.flow.dt_safety,
            max_steps: self.flow.max_steps,
            normalize_every: self.flow.normalize_every,
            emit_every: self.flow.emit_every,
            stop: self.flow.stop.into(),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.soliton.tol,
            max_iters: self.soliton.max_iters,
            damping: self.soliton.damping,
            tikhonov: self.soliton.tikhonov,
        }
    }

    /// All perturbation modes: the listed ones, then the seeded random ones.
    pub fn modes(&self) -> Vec<Mode> {
        let mut modes: Vec<Mode> = self
            .initial
            .modes
            .iter()
            .map(|m| Mode {
                k: m.k,
                amplitude: m.amplitude,
            })
            .collect();
        if let Some(r) = self.initial.random_modes {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for k in 2..=r.max_k {
                let bound = r.max_amplitude / (k * k) as f64;
                modes.push(Mode {
                    k,
                    amplitude: rng.random_range(-1.0..=1.0) * bound,
                });
            }
        }
        modes
    }

    pub fn initial_body<B: Shape>(&self) -> Result<B, CliError> {
        let n = self.n_grid;
        let body = match self.initial.semi_axes {
            Some([a, b]) => B::ellipsoid(n, a, b),
            None => B::from_support(vec![self.initial.radius.unwrap_or(1.0); n]),
        };
        body.and_then(|b| b.perturbed(&self.modes()))
            .map_err(|e| invalid("initial", e.to_string()))
    }
}

/// Backend constructors the configuration needs beyond [`ConvexBody`].
pub trait Shape: DiagnosticBody {
    fn ellipsoid(n: usize, a: f64, b: f64) -> Result<Self, GeometryError>;
}

impl Shape for CurveBody {
    fn ellipsoid(n: usize, a: f64, b: f64) -> Result<Self, GeometryError> {
        CurveBody::ellipse(n, a, b)
    }
}

impl Shape for AxisymBody {
    fn ellipsoid(n: usize, a: f64, c: f64) -> Result<Self, GeometryError> {
        AxisymBody::spheroid(n, a, c)
    }
}
