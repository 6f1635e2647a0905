//! Self-similar solutions `K^α = ⟨F, ν⟩`.
//!
//! In support form `⟨F, ν⟩ = h`, so a soliton is a zero of the discrete map
//! `h ↦ K(h)^α − h`. [`solve`] runs damped Newton on that map with a
//! column-wise finite-difference Jacobian, re-centring each iterate at its
//! Steiner point; [`continuation`] walks a ladder of exponents with warm
//! starts.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::snapshot::fmt_f64;
use crate::geometry::{max_abs, ConvexBody, GeometryError};

/// Step-size cuts allowed per Newton iteration.
const MAX_CUTS: usize = 20;
/// Default regularisation on the affine-critical exponent `α = 1/(n+2)`.
pub const CRITICAL_TIKHONOV: f64 = 1e-8;

/// Per-sample `K^α − h` with its max-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub values: Vec<f64>,
    pub max_norm: f64,
}

pub fn soliton_residual<B: ConvexBody>(body: &B, alpha: f64) -> ResidualField {
    let fields = body.curvature_fields();
    let values: Vec<f64> = fields
        .gauss
        .iter()
        .zip(body.support())
        .map(|(k, h)| k.powf(alpha) - h)
        .collect();
    let max_norm = max_abs(&values);
    ResidualField { values, max_norm }
}

/// Whether `alpha` is the affine-critical exponent for dimension `n`.
pub fn is_affine_critical(alpha: f64, n: usize) -> bool {
    (alpha - 1.0 / (n as f64 + 2.0)).abs() <= 1e-12
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Target max-norm of the residual.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial step fraction of each Newton iteration, in (0, 1].
    pub damping: f64,
    /// Diagonal shift added to the Jacobian. `None` picks
    /// [`CRITICAL_TIKHONOV`] at `α = 1/(n+2)` and zero otherwise.
    pub tikhonov: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 60,
            damping: 1.0,
            tikhonov: None,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0) {
            return Err(SolveError::InvalidOptions(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolveError::InvalidOptions(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if let Some(t) = self.tikhonov {
            if !(t >= 0.0) {
                return Err(SolveError::InvalidOptions(format!("tikhonov must be >= 0, got {t}")));
            }
        }
        Ok(())
    }

    pub fn tikhonov_for(&self, alpha: f64, n: usize) -> f64 {
        self.tikhonov.unwrap_or(if is_affine_critical(alpha, n) {
            CRITICAL_TIKHONOV
        } else {
            0.0
        })
    }
}

/// One line of the solver report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual_maxnorm: f64,
    /// Step fraction actually taken to reach this iterate (0 for the start).
    pub damping_used: f64,
}

#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("exponent must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("no convergence after {} iterations (last residual {:e})", .history.len().saturating_sub(1), .history.last().map_or(f64::NAN, |r| r.residual_maxnorm))]
    NoConvergence { history: Vec<IterationRecord> },
    #[error("Newton iterate left the convex cone after {MAX_CUTS} step cuts: {source}")]
    Convexity {
        source: GeometryError,
        history: Vec<IterationRecord>,
    },
}

impl SolveError {
    pub fn history(&self) -> &[IterationRecord] {
        match self {
            Self::NoConvergence { history } | Self::Convexity { history, .. } => history,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution<B> {
    pub body: B,
    pub residual: f64,
    pub history: Vec<IterationRecord>,
}

fn residual_vec<B: ConvexBody>(body: &B, alpha: f64) -> Vec<f64> {
    soliton_residual(body, alpha).values
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense Jacobian of `h ↦ K(h)^α − h` by central differences.
///
/// Column j perturbs `h_j` by `1e-6·(1 + |h_j|)·Δx²`, so the principal radii
/// (second differences of h) move by about 1e-6 relative. An unscaled step
/// moves them by `δ/Δx²`, which on fine grids near small radii is far
/// outside the linear range.
fn fd_jacobian<B: ConvexBody>(body: &B, alpha: f64) -> Result<DMatrix<f64>, GeometryError> {
    let h = body.support();
    let n = h.len();
    let dx2 = body.spacing().powi(2);
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = h.to_vec();
    for j in 0..n {
        let delta = 1e-6 * (1.0 + h[j].abs()) * dx2;
        probe[j] = h[j] + delta;
        let plus = residual_vec(&B::from_support(probe.clone())?, alpha);
        probe[j] = h[j] - delta;
        let minus = residual_vec(&B::from_support(probe.clone())?, alpha);
        probe[j] = h[j];
        for (i, (p, m)) in plus.iter().zip(&minus).enumerate() {
            jac[(i, j)] = (p - m) / (2.0 * delta);
        }
    }
    Ok(jac)
}

/// Damped Newton for `K^α = h` starting from `initial`.
pub fn solve<B: ConvexBody>(initial: &B, alpha: f64, opts: &SolveOptions) -> Result<Solution<B>, SolveError> {
    opts.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SolveError::InvalidAlpha(alpha));
    }
    let tikhonov = opts.tikhonov_for(alpha, B::DIM);
    let mut history = Vec::new();

    let mut body = match initial.recenter() {
        Ok(b) => b,
        Err(source) => return Err(SolveError::Convexity { source, history }),
    };
    let mut res = residual_vec(&body, alpha);
    let mut damping_used = 0.0;

    let mut iter = 0;
    loop {
        let norm = max_abs(&res);
        history.push(IterationRecord {
            iter,
            residual_maxnorm: norm,
            damping_used,
        });
        log::debug!("newton iter {iter}: residual {norm:e}, step {damping_used}");
        if norm <= opts.tol {
            return Ok(Solution {
                body,
                residual: norm,
                history,
            });
        }
        if iter >= opts.max_iters {
            return Err(SolveError::NoConvergence { history });
        }

        let mut jac = match fd_jacobian(&body, alpha) {
            Ok(j) => j,
            Err(source) => return Err(SolveError::Convexity { source, history }),
        };
        for d in 0..jac.nrows() {
            jac[(d, d)] += tikhonov;
        }
        let rhs = -DVector::from_column_slice(&res);
        let Some(dx) = jac.lu().solve(&rhs) else {
            return Err(SolveError::NoConvergence { history });
        };

        let merit = l2(&res);
        let mut frac = opts.damping;
        let mut last_geom = None;
        let mut accepted = None;
        for _ in 0..=MAX_CUTS {
            let cand: Vec<f64> = body.support().iter().zip(dx.iter()).map(|(h, d)| h + frac * d).collect();
            match B::from_support(cand).and_then(|b| b.recenter()) {
                Ok(b) => {
                    let r = residual_vec(&b, alpha);
                    if l2(&r) < merit {
                        accepted = Some((b, r));
                        break;
                    }
                }
                Err(e) => last_geom = Some(e),
            }
            frac *= 0.5;
        }
        match accepted {
            Some((b, r)) => {
                body = b;
                res = r;
                damping_used = frac;
                iter += 1;
            }
            None => {
                return Err(match last_geom {
                    Some(source) => SolveError::Convexity { source, history },
                    None => SolveError::NoConvergence { history },
                })
            }
        }
    }
}

/// Spacing of the exponent ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Linear,
    Geometric,
}

/// Exponents `alpha_from = α_0, …, α_steps = alpha_to`.
pub fn ladder_alphas(alpha_from: f64, alpha_to: f64, steps: usize, ladder: Ladder) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps)
        .map(|k| {
            let s = k as f64 / steps as f64;
            match ladder {
                Ladder::Linear => alpha_from + (alpha_to - alpha_from) * s,
                Ladder::Geometric => alpha_from * (alpha_to / alpha_from).powf(s),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Rung<B> {
    pub alpha: f64,
    pub body: B,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Error)]
#[error("continuation failed at rung {failed_rung}: {error}")]
pub struct ContinuationFailure<B: std::fmt::Debug> {
    pub completed: Vec<Rung<B>>,
    pub failed_rung: usize,
    pub error: SolveError,
}

/// Solves at `alpha_from`, then at each exponent of the ladder towards
/// `alpha_to`, warm-starting every rung from the previous solution.
pub fn continuation<B: ConvexBody>(
    body: &B,
    alpha_from: f64,
    alpha_to: f64,
    steps: usize,
    ladder: Ladder,
    opts: &SolveOptions,
) -> Result<Vec<Rung<B>>, ContinuationFailure<B>> {
    let base = match solve(body, alpha_from, opts) {
        Ok(sol) => Rung {
            alpha: alpha_from,
            iterations: sol.history.len() - 1,
            residual: sol.residual,
            body: sol.body,
        },
        Err(error) => {
            return Err(ContinuationFailure {
                completed: Vec::new(),
                failed_rung: 0,
                error,
            })
        }
    };
    continuation_from(base, alpha_to, steps, ladder, opts)
}

/// Like [`continuation`], but starting from a rung that is already solved
/// (for instance to a looser tolerance than `opts.tol`). The base rung is
/// returned first and not re-solved.
pub fn continuation_from<B: ConvexBody>(
    base: Rung<B>,
    alpha_to: f64,
    steps: usize,
    ladder: Ladder,
    opts: &SolveOptions,
) -> Result<Vec<Rung<B>>, ContinuationFailure<B>> {
    let alphas = ladder_alphas(base.alpha, alpha_to, steps, ladder);
    let mut rungs: Vec<Rung<B>> = Vec::with_capacity(alphas.len());
    rungs.push(base);
    for (k, alpha) in alphas.into_iter().enumerate().skip(1) {
        let start = &rungs[rungs.len() - 1].body;
        match solve(start, alpha, opts) {
            Ok(sol) => rungs.push(Rung {
                alpha,
                iterations: sol.history.len() - 1,
                residual: sol.residual,
                body: sol.body,
            }),
            Err(error) => {
                return Err(ContinuationFailure {
                    completed: rungs,
                    failed_rung: k,
                    error,
                })
            }
        }
    }
    Ok(rungs)
}

/// Writes the `iter,residual_maxnorm,damping_used` solver report.
pub fn write_solver_report<W: Write>(history: &[IterationRecord], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iter", "residual_maxnorm", "damping_used"])?;
    for r in history {
        w.write_record([r.iter.to_string(), fmt_f64(r.residual_maxnorm), fmt_f64(r.damping_used)])?;
    }
    w.flush()?;
    Ok(())
}
