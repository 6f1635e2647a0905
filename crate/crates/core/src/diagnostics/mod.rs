//! Pointwise and global diagnostics of a convex body under the
//! α-Gauss-curvature flow.
//!
//! With `n` the intrinsic dimension, `K` the Gauss curvature, `tr(b)` the
//! sum of principal radii and `|F|²` the squared norm of the boundary
//! point:
//!
//! * `Z = K^α tr(b) − (nα−1)/(2α) |F|²` is constant on ellipsoidal
//!   solitons at `α = 1/(n+2)`, where it equals `tr(S⁻¹)`.
//! * `W = K^α λ_min⁻¹ − (nα−1)/(2nα) |F|²` satisfies `Z ≤ nW` pointwise,
//!   with equality exactly at umbilic samples.

mod cubic;
mod fit;
mod identities;
mod record;

use crate::geometry::{AxisymBody, ConvexBody, CurveBody};

pub use cubic::cubic_form_norm;
pub use fit::{EllipsoidFit, FitError};
pub use identities::{identity_residuals, IdentityResiduals, APPLICABILITY_THRESHOLD};
pub use record::{quantity_report, write_quantity_report, DiagnosticsRecord, QuantityRow, RECORD_HEADER};

/// Samples whose extreme curvatures agree to this relative tolerance count
/// as umbilic.
pub const UMBILIC_REL_TOL: f64 = 1e-9;

/// Backend-specific diagnostics.
pub trait DiagnosticBody: ConvexBody {
    /// Least-squares quadric `⟨S F, F⟩ = 1` through the boundary samples.
    fn ellipsoid_fit(&self) -> Result<EllipsoidFit, FitError>;

    /// `|C|²` per sample, when the backend has a non-trivial cubic form.
    fn cubic_norm_field(&self) -> Option<Vec<f64>> {
        None
    }
}

impl DiagnosticBody for CurveBody {
    fn ellipsoid_fit(&self) -> Result<EllipsoidFit, FitError> {
        fit::fit_curve(self)
    }
}

impl DiagnosticBody for AxisymBody {
    fn ellipsoid_fit(&self) -> Result<EllipsoidFit, FitError> {
        fit::fit_axisym(self)
    }

    fn cubic_norm_field(&self) -> Option<Vec<f64>> {
        Some(cubic_form_norm(self))
    }
}

fn dim_f(n: usize) -> f64 {
    n as f64
}

/// `Z_j = K_j^α tr(b)_j − ((nα−1)/(2α)) |F|²_j`.
pub fn z_field<B: ConvexBody>(body: &B, alpha: f64) -> Vec<f64> {
    let fields = body.curvature_fields();
    let f2 = body.position_norm_sq();
    let c = (dim_f(B::DIM) * alpha - 1.0) / (2.0 * alpha);
    (0..body.len())
        .map(|j| fields.gauss[j].powf(alpha) * fields.trace_b[j] - c * f2[j])
        .collect()
}

/// `W_j = K_j^α / λ_min,j − ((nα−1)/(2nα)) |F|²_j`.
pub fn w_field<B: ConvexBody>(body: &B, alpha: f64) -> Vec<f64> {
    let fields = body.curvature_fields();
    let f2 = body.position_norm_sq();
    let n = dim_f(B::DIM);
    let c = (n * alpha - 1.0) / (2.0 * n * alpha);
    (0..body.len())
        .map(|j| fields.gauss[j].powf(alpha) / fields.lambda_min[j] - c * f2[j])
        .collect()
}

/// `nW_j − Z_j` computed in the cancellation-free form
/// `K_j^α (n λ_min,j⁻¹ − tr(b)_j)`.
pub fn z_w_gap<B: ConvexBody>(body: &B, alpha: f64) -> Vec<f64> {
    let fields = body.curvature_fields();
    let n = dim_f(B::DIM);
    (0..body.len())
        .map(|j| fields.gauss[j].powf(alpha) * (n * fields.max_radius(j) - fields.trace_b[j]))
        .collect()
}

/// Indices of umbilic samples.
pub fn umbilic_samples<B: ConvexBody>(body: &B) -> Vec<usize> {
    let fields = body.curvature_fields();
    (0..body.len())
        .filter(|&j| {
            let (lo, hi) = (fields.lambda_min[j], fields.lambda_max[j]);
            hi - lo <= UMBILIC_REL_TOL * hi
        })
        .collect()
}

/// Global largest over global smallest principal curvature; 1 iff round.
pub fn roundness<B: ConvexBody>(body: &B) -> f64 {
    let fields = body.curvature_fields();
    let hi = fields.lambda_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = fields.lambda_min.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Entropy of the Steiner-centred body:
/// `(α/(α−1)) log((1/|Sⁿ|)∫ h^{(α−1)/α} dσ)` for α ≠ 1 and
/// `(1/|Sⁿ|)∫ log h dσ` for α = 1.
///
/// The body is re-centred first; if that translation would leave the
/// convex cone the body is used as given.
pub fn entropy<B: ConvexBody>(body: &B, alpha: f64) -> f64 {
    let centred = body.recenter();
    let h = centred.as_ref().map_or(body.support(), |b| b.support());
    if (alpha - 1.0).abs() < 1e-12 {
        let logs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
        body.sphere_mean(&logs)
    } else {
        let p = (alpha - 1.0) / alpha;
        let powers: Vec<f64> = h.iter().map(|v| v.powf(p)).collect();
        alpha / (alpha - 1.0) * body.sphere_mean(&powers).ln()
    }
}
