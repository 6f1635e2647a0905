//! The quadratic form `Q(λ, σ)` bounding the third-order gradient terms at
//! the maximum of `Z`.
//!
//! For `α ∈ [1/(n+2), 1/2]` and positive `λ` the form is nonnegative, and it
//! vanishes only at `σ = 0` or, when `α = 1/(n+2)`, along
//! `σ_1 = ⋯ = σ_{n−1} = σ_n/3`. This module evaluates `Q` directly and through
//! its sum-of-squares rewriting, and searches randomly for violations.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::snapshot::fmt_f64;

/// Slack on the admissible α interval so that `1.0 / (n + 2) as f64` passes.
const ALPHA_SLACK: f64 = 1e-12;
/// Trials drawn from one RNG stream.
const CHUNK: usize = 2048;
/// Best raw samples handed to local refinement.
const REFINE_CANDIDATES: usize = 8;
const LOG_LAMBDA_MAX: f64 = 6.907_755_278_982_137; // ln 1e3

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("expected {expected} entries in {name}, got {got}")]
    Length {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("lambda[{index}] = {value} is not positive")]
    NonPositiveLambda { index: usize, value: f64 },
    #[error("alpha = {alpha} outside [{lo}, 0.5]")]
    AlphaOutOfRange { alpha: f64, lo: f64 },
    #[error("sum of sigma is zero; use the direct form")]
    NotApplicable,
    #[error("at least one trial is required")]
    NoTrials,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QInstance {
    n: usize,
    alpha: f64,
    lambda: Vec<f64>,
    sigma: Vec<f64>,
}

pub fn alpha_range(n: usize) -> (f64, f64) {
    (1.0 / (n as f64 + 2.0), 0.5)
}

fn check_alpha(n: usize, alpha: f64) -> Result<(), QError> {
    if n < 2 {
        return Err(QError::Dimension(n));
    }
    let (lo, hi) = alpha_range(n);
    if !(alpha >= lo - ALPHA_SLACK && alpha <= hi + ALPHA_SLACK) {
        return Err(QError::AlphaOutOfRange { alpha, lo });
    }
    Ok(())
}

impl QInstance {
    pub fn new(n: usize, alpha: f64, lambda: Vec<f64>, sigma: Vec<f64>) -> Result<Self, QError> {
        check_alpha(n, alpha)?;
        for (name, v) in [("lambda", &lambda), ("sigma", &sigma)] {
            if v.len() != n {
                return Err(QError::Length {
                    name,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if let Some((index, &value)) = lambda.iter().enumerate().find(|(_, l)| !(**l > 0.0)) {
            return Err(QError::NonPositiveLambda { index, value });
        }
        Ok(Self { n, alpha, lambda, sigma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sigma_sum(&self) -> f64 {
        self.sigma.iter().sum()
    }

    /// The same λ with σ replaced by `σ/Σσ`, or `None` when `Σσ = 0`.
    pub fn normalized(&self) -> Option<Self> {
        let s = self.sigma_sum();
        (s != 0.0).then(|| Self {
            sigma: self.sigma.iter().map(|x| x / s).collect(),
            ..self.clone()
        })
    }

    /// The five summands of `Q` in display order.
    pub fn terms(&self) -> [f64; 5] {
        let n = self.n;
        let a = self.alpha;
        let ln = self.lambda[n - 1];
        let s: f64 = self.sigma_sum();
        let inv_sum: f64 = self.lambda.iter().map(|l| 1.0 / l).sum();
        let weighted: f64 = self.lambda.iter().zip(&self.sigma).map(|(l, x)| x / l).sum();

        let t1: f64 = self.sigma.iter().map(|x| x * x).sum();
        let t2: f64 = 2.0
            * (0..n - 1)
                .map(|i| ln / self.lambda[i] * self.sigma[i] * self.sigma[i])
                .sum::<f64>();
        let bracket = weighted + ((n as f64 * a - 1.0) / ln - a * inv_sum) * s;
        let t3 = -4.0 * a * ln * bracket * s;
        let t4 = -2.0 * a * a * ln * inv_sum * s * s;
        let t5 = (2.0 * n as f64 * a * a + (n as f64 - 1.0) * a - 1.0) * s * s;
        [t1, t2, t3, t4, t5]
    }

    /// Largest summand magnitude, the reference for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.terms().iter().fold(0.0, |m, t| m.max(t.abs()))
    }
}

pub fn q_direct(inst: &QInstance) -> f64 {
    inst.terms().iter().sum()
}

/// `τ` built from `σ/Σσ`; its entries sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TauVector {
    pub tau: Vec<f64>,
}

impl TauVector {
    pub fn new(inst: &QInstance) -> Result<Self, QError> {
        let unit = inst.normalized().ok_or(QError::NotApplicable)?;
        let n = inst.n;
        let a = inst.alpha;
        let tau = unit
            .sigma
            .iter()
            .enumerate()
            .map(|(i, x)| if i + 1 < n { x - a } else { x - 1.0 + (n as f64 - 1.0) * a })
            .collect();
        Ok(Self { tau })
    }

    pub fn sum(&self) -> f64 {
        self.tau.iter().sum()
    }
}

/// The four nonnegative pieces of the completed-square form at `Σσ = 1`.
pub fn decomposed_terms(inst: &QInstance) -> Result<[f64; 4], QError> {
    let tau = TauVector::new(inst)?.tau;
    let n = inst.n;
    let nf = n as f64;
    let a = inst.alpha;
    let tn = tau[n - 1];
    let ln = inst.lambda[n - 1];

    let shifted = tn + (nf - 1.0) / nf * (1.0 - (nf + 2.0) * a);
    let d1 = nf / (nf - 1.0) * shifted * shifted;
    let d2 = (0..n - 1)
        .map(|i| {
            let v = tau[i] + tn / (nf - 1.0);
            v * v
        })
        .sum();
    let d3 = 2.0 * (0..n - 1).map(|i| ln / inst.lambda[i] * tau[i] * tau[i]).sum::<f64>();
    let d4 = (nf - 1.0) / nf * (1.0 - 2.0 * a) * ((nf + 2.0) * a - 1.0);
    Ok([d1, d2, d3, d4])
}

/// `Q` through the sum-of-squares form, rescaled by `(Σσ)²`.
pub fn q_decomposed(inst: &QInstance) -> Result<f64, QError> {
    let s = inst.sigma_sum();
    Ok(decomposed_terms(inst)?.iter().sum::<f64>() * s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualityClass {
    AllSigmaZero,
    /// `α = 1/(n+2)` and `σ_i = σ_n/3` for `i < n`.
    AlphaCritical,
    /// `Q ≈ 0` outside both known families: a potential counterexample.
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EqualityCase {
    pub is_zero: bool,
    pub class: Option<EqualityClass>,
}

pub fn equality_case(inst: &QInstance, tol: f64) -> EqualityCase {
    let q = q_direct(inst);
    if q.abs() > tol * inst.scale().max(f64::MIN_POSITIVE) && q != 0.0 {
        return EqualityCase {
            is_zero: false,
            class: None,
        };
    }
    let size = inst.sigma.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let class = if size <= tol {
        EqualityClass::AllSigmaZero
    } else {
        let n = inst.n;
        let third = inst.sigma[n - 1] / 3.0;
        let critical = (inst.alpha - alpha_range(n).0).abs() <= tol;
        let pattern = inst.sigma[..n - 1].iter().all(|x| (x - third).abs() <= tol * size);
        if critical && pattern {
            EqualityClass::AlphaCritical
        } else {
            EqualityClass::Unclassified
        }
    };
    EqualityCase {
        is_zero: true,
        class: Some(class),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Minimum of `Q` over instances normalised to `Σσ = 1`.
    pub min_q: f64,
    /// [`QInstance::scale`] at the minimiser.
    pub scale: f64,
    pub argmin: QInstance,
    /// Minimum over raw samples only.
    pub sample_min: f64,
    pub trials: usize,
}

fn sample(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> QInstance {
    let lambda = (0..n)
        .map(|_| rng.random_range(-LOG_LAMBDA_MAX..=LOG_LAMBDA_MAX).exp())
        .collect();
    let sigma = (0..n).map(|_| rng.random_range(-10.0..=10.0)).collect();
    let raw = QInstance {
        n,
        alpha,
        lambda,
        sigma,
    };
    raw.normalized().unwrap_or(raw)
}

/// Sort key: Q relative to its own magnitude, so that huge-λ instances do
/// not win by cancellation noise alone.
fn key(inst: &QInstance) -> f64 {
    q_direct(inst) / (1.0 + inst.scale())
}

/// Random search for the minimum of `Q` at fixed `(n, α)`.
///
/// λ is drawn log-uniformly from `[1e−3, 1e3]`, σ uniformly from `[−10, 10]`
/// and then scaled to `Σσ = 1` (Q is 2-homogeneous in σ). Trials are split
/// into fixed chunks with one ChaCha stream each, so the result does not
/// depend on the thread count. With `refine`, the best samples are polished
/// by Nelder–Mead in `(log λ, σ_1..σ_{n−1})`.
pub fn min_search(n: usize, alpha: f64, trials: usize, seed: u64, refine: bool) -> Result<SearchResult, QError> {
    check_alpha(n, alpha)?;
    if trials == 0 {
        return Err(QError::NoTrials);
    }
    let chunks = trials.div_ceil(CHUNK);
    let mut best: Vec<(f64, usize, QInstance)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut local: Vec<(f64, usize, QInstance)> = Vec::with_capacity(REFINE_CANDIDATES + 1);
            for k in 0..count {
                let inst = sample(&mut rng, n, alpha);
                let entry = (key(&inst), c * CHUNK + k, inst);
                insert_best(&mut local, entry);
            }
            local
        })
        .reduce(Vec::new, |mut a, b| {
            for e in b {
                insert_best(&mut a, e);
            }
            a
        });
    best.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let (_, _, mut argmin) = best[0].clone();
    let sample_min = q_direct(&argmin);
    if refine {
        let mut best_key = key(&argmin);
        for (_, _, start) in &best {
            let polished = nelder_mead_refine(start);
            let k = key(&polished);
            if k < best_key {
                best_key = k;
                argmin = polished;
            }
        }
    }
    let min_q = q_direct(&argmin);
    if (alpha - 0.5).abs() <= ALPHA_SLACK && min_q.abs() <= 1e-9 * (1.0 + argmin.scale()) {
        log::info!("near-zero minimum at alpha = 1/2, n = {n}: {argmin:?}");
    }
    Ok(SearchResult {
        min_q,
        scale: argmin.scale(),
        argmin,
        sample_min,
        trials,
    })
}

/// Keeps the `REFINE_CANDIDATES` smallest entries, ordered by (key, index).
fn insert_best(list: &mut Vec<(f64, usize, QInstance)>, entry: (f64, usize, QInstance)) {
    let pos = list
        .iter()
        .position(|e| entry.0.total_cmp(&e.0).then(entry.1.cmp(&e.1)).is_lt())
        .unwrap_or(list.len());
    if pos < REFINE_CANDIDATES {
        list.insert(pos, entry);
        list.truncate(REFINE_CANDIDATES);
    }
}

fn from_coords(template: &QInstance, x: &[f64]) -> QInstance {
    let n = template.n;
    let lambda = x[..n].iter().map(|l| l.clamp(-LOG_LAMBDA_MAX, LOG_LAMBDA_MAX).exp()).collect();
    let mut sigma: Vec<f64> = x[n..].to_vec();
    sigma.push(1.0 - sigma.iter().sum::<f64>());
    QInstance {
        lambda,
        sigma,
        ..template.clone()
    }
}

fn nelder_mead_refine(start: &QInstance) -> QInstance {
    let n = start.n;
    let mut x0: Vec<f64> = start.lambda.iter().map(|l| l.ln()).collect();
    x0.extend_from_slice(&start.sigma[..n - 1]);
    let f = |x: &[f64]| key(&from_coords(start, x));
    let x = nelder_mead(f, &x0, 0.25, 400 * x0.len());
    from_coords(start, &x)
}

/// Plain Nelder–Mead with standard coefficients and an evaluation budget.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, budget: usize) -> Vec<f64> {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=d)
        .map(|i| {
            let mut p = x0.to_vec();
            if i > 0 {
                p[i - 1] += step;
            }
            let v = f(&p);
            (p, v)
        })
        .collect();
    let mut evals = d + 1;
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };

    while evals < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[d].1 - simplex[0].1).abs() <= 1e-16 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (p, _) in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / d as f64;
            }
        }
        let worst = simplex[d].0.clone();
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[d].1 {
                lerp(&centroid, &reflected, 0.5)
            } else {
                lerp(&centroid, &worst, 0.5)
            };
            let fc = f(&contracted);
            evals += 1;
            if fc < fr.min(simplex[d].1) {
                simplex[d] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    entry.0 = lerp(&best, &entry.0, 0.5);
                    entry.1 = f(&entry.0);
                }
                evals += d;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0).0
}

pub const REPORT_PREFIX: [&str; 5] = ["n", "alpha", "trials", "min_q", "scale"];

/// Writes one row per search result under the header
/// `n,alpha,trials,min_q,scale,argmin_lambda_1..n,argmin_sigma_1..n`.
pub fn write_report<W: Write>(results: &[SearchResult], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n = results.first().map_or(0, |r| r.argmin.n);
    let mut header: Vec<String> = REPORT_PREFIX.iter().map(|s| s.to_string()).collect();
    header.extend((1..=n).map(|i| format!("argmin_lambda_{i}")));
    header.extend((1..=n).map(|i| format!("argmin_sigma_{i}")));
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![
            r.argmin.n.to_string(),
            fmt_f64(r.argmin.alpha),
            r.trials.to_string(),
            fmt_f64(r.min_q),
            fmt_f64(r.scale),
        ];
        row.extend(r.argmin.lambda.iter().chain(&r.argmin.sigma).map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
