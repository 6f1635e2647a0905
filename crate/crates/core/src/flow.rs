//! Explicit time stepping of `∂h/∂t = −K^α`.
//!
//! For a body parametrised by its support function the normal speed of the
//! boundary is `∂h/∂t`, so the flow `∂F/∂t = −K^α ν` is a scalar parabolic
//! equation for `h`. [`step`] advances it with the midpoint rule under a
//! CFL-type step; [`run`] adds periodic renormalisation (Steiner point at
//! the origin, volume of the unit ball) and streams diagnostics to a sink.

use std::io::{self, Write};

use thiserror::Error;

use crate::diagnostics::{roundness, DiagnosticBody, DiagnosticsRecord, RECORD_HEADER};
use crate::geometry::{ConvexBody, GeometryError};
use crate::soliton::soliton_residual;

/// Rejected attempts (each halving dt) before a step is declared failed.
pub const MAX_HALVINGS: usize = 20;

/// When a run may stop before `max_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Run for `max_steps`.
    None,
    MaxTime(f64),
    /// Stop once `roundness ≤ threshold` (e.g. `1 + ε`).
    Roundness(f64),
    SolitonResidual(f64),
    EllipsoidFit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub alpha: f64,
    /// Stability factor `c ∈ (0, 1]` in [`stable_dt`].
    pub dt_safety: f64,
    pub max_steps: usize,
    /// Steps between renormalisations (≥ 1).
    pub normalize_every: usize,
    /// Steps between emitted records (≥ 1).
    pub emit_every: usize,
    pub stop: StopRule,
}

impl FlowConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            dt_safety: 0.4,
            max_steps: 10_000,
            normalize_every: 1,
            emit_every: 1,
            stop: StopRule::None,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: String| Err(FlowError::InvalidConfig(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return bad(format!("dt_safety must lie in (0, 1], got {}", self.dt_safety));
        }
        if self.normalize_every == 0 {
            return bad("normalize_every must be at least 1".into());
        }
        if self.emit_every == 0 {
            return bad("emit_every must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<B> {
    pub body: B,
    pub t: f64,
    pub step: usize,
    pub last_dt: f64,
}

impl<B> FlowState<B> {
    pub fn new(body: B) -> Self {
        Self {
            body,
            t: 0.0,
            step: 0,
            last_dt: 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("step {step} at t = {t:e} failed after {MAX_HALVINGS} halvings of dt: {source}")]
    StepFailure {
        step: usize,
        t: f64,
        source: GeometryError,
    },
    #[error("renormalisation failed: {0}")]
    Normalize(#[source] GeometryError),
    #[error("record sink: {0}")]
    Sink(#[from] io::Error),
}

/// `dt = c·Δx² / max_j(α K_j^α λ_max,j)`: the largest diffusion
/// coefficient of the linearised speed in the angular coordinate.
pub fn stable_dt<B: ConvexBody>(body: &B, alpha: f64, c: f64) -> f64 {
    let fields = body.curvature_fields();
    let stiffness = fields
        .gauss
        .iter()
        .zip(&fields.lambda_max)
        .map(|(k, l)| alpha * k.powf(alpha) * l)
        .fold(0.0, f64::max);
    let dx = body.spacing();
    c * dx * dx / stiffness
}

fn speed<B: ConvexBody>(body: &B, alpha: f64) -> Vec<f64> {
    body.curvature_fields().gauss.iter().map(|k| k.powf(alpha)).collect()
}

fn midpoint<B: ConvexBody>(body: &B, alpha: f64, dt: f64) -> Result<B, GeometryError> {
    let h = body.support();
    let k1 = speed(body, alpha);
    let half = B::from_support(h.iter().zip(&k1).map(|(h, v)| h - 0.5 * dt * v).collect())?;
    let k2 = speed(&half, alpha);
    B::from_support(h.iter().zip(&k2).map(|(h, v)| h - dt * v).collect())
}

/// One midpoint step of the unnormalised flow. A step whose result is not
/// strictly convex is retried with half the step size.
pub fn step<B: ConvexBody>(state: &FlowState<B>, config: &FlowConfig) -> Result<FlowState<B>, FlowError> {
    let mut dt = stable_dt(&state.body, config.alpha, config.dt_safety);
    let mut attempt = 0;
    loop {
        match midpoint(&state.body, config.alpha, dt) {
            Ok(body) => {
                return Ok(FlowState {
                    body,
                    t: state.t + dt,
                    step: state.step + 1,
                    last_dt: dt,
                })
            }
            Err(source) if attempt == MAX_HALVINGS => {
                return Err(FlowError::StepFailure {
                    step: state.step + 1,
                    t: state.t,
                    source,
                })
            }
            Err(e) => {
                log::debug!("step {} rejected at dt = {dt:e}: {e}", state.step + 1);
                attempt += 1;
                dt *= 0.5;
            }
        }
    }
}

/// Moves the Steiner point to the origin, then scales to the volume of the
/// unit ball.
pub fn normalize<B: ConvexBody>(body: &B) -> Result<B, GeometryError> {
    let centred = body.recenter()?;
    let factor = (B::unit_ball_volume() / centred.volume()).powf(1.0 / (B::DIM as f64 + 1.0));
    centred.scale(factor)
}

/// Receives the records of a run, one per emission interval.
pub trait RecordSink<B> {
    fn emit(&mut self, state: &FlowState<B>, record: &DiagnosticsRecord) -> io::Result<()>;
}

impl<B> RecordSink<B> for Vec<DiagnosticsRecord> {
    fn emit(&mut self, _: &FlowState<B>, record: &DiagnosticsRecord) -> io::Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Discards records.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl<B> RecordSink<B> for NullSink {
    fn emit(&mut self, _: &FlowState<B>, _: &DiagnosticsRecord) -> io::Result<()> {
        Ok(())
    }
}

/// Streams records as CSV rows under [`RECORD_HEADER`].
pub struct CsvRecordSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvRecordSink<W> {
    pub fn new(writer: W) -> io::Result<Self> {
        let mut writer = csv::Writer::from_writer(writer);
        writer.write_record(RECORD_HEADER)?;
        Ok(Self { writer })
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

impl<B, W: Write> RecordSink<B> for CsvRecordSink<W> {
    fn emit(&mut self, _: &FlowState<B>, record: &DiagnosticsRecord) -> io::Result<()> {
        self.writer.write_record(record.csv_fields())?;
        self.writer.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The configured stop rule was met.
    RuleSatisfied,
    /// `max_steps` was reached first.
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct FlowOutcome<B> {
    pub state: FlowState<B>,
    pub reason: StopReason,
}

/// A failed run, with the last accepted state.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct FlowFailure<B: std::fmt::Debug> {
    #[source]
    pub error: FlowError,
    pub state: FlowState<B>,
}

fn rule_met<B: DiagnosticBody>(rule: StopRule, state: &FlowState<B>, alpha: f64) -> bool {
    match rule {
        StopRule::None => false,
        StopRule::MaxTime(t) => state.t >= t,
        StopRule::Roundness(r) => roundness(&state.body) <= r,
        StopRule::SolitonResidual(r) => soliton_residual(&state.body, alpha).max_norm <= r,
        StopRule::EllipsoidFit(r) => state.body.ellipsoid_fit().is_ok_and(|f| f.rms <= r),
    }
}

/// Runs the normalised flow from `initial` until the stop rule holds or
/// `max_steps` steps have been taken.
pub fn run<B, S>(initial: B, config: &FlowConfig, sink: &mut S) -> Result<FlowOutcome<B>, FlowFailure<B>>
where
    B: DiagnosticBody,
    S: RecordSink<B>,
{
    let mut state = FlowState::new(initial);
    let fail = |error, state| Err(FlowFailure { error, state });
    if let Err(e) = config.validate() {
        return fail(e, state);
    }

    while state.step < config.max_steps {
        let mut next = match step(&state, config) {
            Ok(s) => s,
            Err(e) => return fail(e, state),
        };
        if next.step % config.normalize_every == 0 {
            match normalize(&next.body) {
                Ok(b) => next.body = b,
                Err(e) => return fail(FlowError::Normalize(e), next),
            }
        }
        state = next;

        let done = rule_met(config.stop, &state, config.alpha);
        if state.step % config.emit_every == 0 || done {
            let rec = DiagnosticsRecord::compute(&state.body, config.alpha, state.step, state.t, state.last_dt);
            if let Err(e) = sink.emit(&state, &rec) {
                return fail(FlowError::Sink(e), state);
            }
        }
        if done {
            return Ok(FlowOutcome {
                state,
                reason: StopReason::RuleSatisfied,
            });
        }
    }
    Ok(FlowOutcome {
        state,
        reason: StopReason::MaxSteps,
    })
}
