use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{AxisymBody, ConvexBody, CurveBody};

/// Singular values of the normal matrix below this fraction of the largest
/// one mark the fit as degenerate.
const RANK_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("ellipsoid fit is degenerate: normal matrix condition {condition:e}")]
    Degenerate { condition: f64 },
}

/// Symmetric matrix `S` of the quadric `⟨S x, x⟩ = 1` and the RMS of the
/// per-sample residuals `⟨S F_j, F_j⟩ − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidFit {
    pub matrix: DMatrix<f64>,
    pub rms: f64,
}

impl EllipsoidFit {
    /// `tr(S⁻¹)`, the sum of squared semi-axes when S is positive definite.
    pub fn trace_inverse(&self) -> Option<f64> {
        self.matrix.clone().try_inverse().map(|m| m.trace())
    }
}

/// Least squares `rows · x ≈ 1` through the normal equations.
fn solve_unit_target(rows: &[Vec<f64>]) -> Result<(DVector<f64>, f64), FitError> {
    let m = rows[0].len();
    let a = DMatrix::from_fn(rows.len(), m, |i, k| rows[i][k]);
    let ones = DVector::from_element(rows.len(), 1.0);
    let normal = a.transpose() * &a;
    let rhs = a.transpose() * &ones;
    let svd = normal.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(FitError::Degenerate {
            condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        });
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|_| FitError::Degenerate { condition: f64::INFINITY })?;
    let resid = &a * &x - ones;
    let rms = (resid.norm_squared() / rows.len() as f64).sqrt();
    Ok((x, rms))
}

pub(super) fn fit_curve(body: &CurveBody) -> Result<EllipsoidFit, FitError> {
    let rows: Vec<Vec<f64>> = body
        .boundary_points()
        .iter()
        .map(|[x, y]| vec![x * x, 2.0 * x * y, y * y])
        .collect();
    let (s, rms) = solve_unit_target(&rows)?;
    Ok(EllipsoidFit {
        matrix: DMatrix::from_row_slice(2, 2, &[s[0], s[1], s[1], s[2]]),
        rms,
    })
}

/// For bodies of revolution S is constrained to `diag(s, s, t)`.
pub(super) fn fit_axisym(body: &AxisymBody) -> Result<EllipsoidFit, FitError> {
    let rows: Vec<Vec<f64>> = body
        .boundary_points()
        .iter()
        .map(|[rho, z]| vec![rho * rho, z * z])
        .collect();
    let (s, rms) = solve_unit_target(&rows)?;
    Ok(EllipsoidFit {
        matrix: DMatrix::from_diagonal(&DVector::from_vec(vec![s[0], s[0], s[1]])),
        rms,
    })
}
