//! Convex bodies represented by sampled support functions.
//!
//! A strictly convex body is stored as its support function `h(u)` on a
//! grid of unit normals. The boundary point with outward normal `u` is
//! `F = h·u + ∇̄h`, and the principal radii of curvature are the
//! eigenvalues of `∇̄²h + h·ḡ`. Two backends exist:
//!
//! * [`CurveBody`]: plane curves, periodic grid `θ_j = 2πj/N` (n = 1).
//! * [`AxisymBody`]: bodies of revolution in R³, cell-centred polar grid
//!   `φ_j = (j + ½)π/N` with even ghosts at both poles (n = 2).
//!
//! Bodies are validated at construction (positive support, positive radii)
//! and immutable afterwards.

mod axisym;
mod curve;
pub mod snapshot;
pub mod spectral;
pub mod stencil;

use std::fmt::Debug;
use std::ops::Neg;

use thiserror::Error;

pub use axisym::AxisymBody;
pub use curve::CurveBody;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("grid has {got} samples, at least {min} required")]
    GridTooSmall { got: usize, min: usize },
    #[error("support value {value:e} at sample {index} is not positive and finite")]
    NonPositiveSupport { index: usize, value: f64 },
    #[error("convexity violated: radius of curvature {value:e} at sample {index}")]
    ConvexityViolation { index: usize, value: f64 },
    #[error("scale factor {0} must be positive and finite")]
    InvalidScale(f64),
}

/// Pointwise curvature quantities of a body.
///
/// `radii[i][j]` is the i-th principal radius at sample j (one direction for
/// curves; meridional then azimuthal for axisymmetric bodies).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFields {
    pub radii: Vec<Vec<f64>>,
    /// Gauss curvature, `1 / Π_i R_i`.
    pub gauss: Vec<f64>,
    /// Mean curvature as the sum of principal curvatures.
    pub mean: Vec<f64>,
    pub lambda_min: Vec<f64>,
    pub lambda_max: Vec<f64>,
    /// `tr(b) = Σ_i R_i`.
    pub trace_b: Vec<f64>,
}

impl CurvatureFields {
    /// Builds the fields from principal radii, rejecting any radius that is
    /// not strictly positive. The reported sample is the worst one.
    pub fn from_radii(radii: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let samples = radii.first().map_or(0, Vec::len);
        let mut worst: Option<(usize, f64)> = None;
        for dir in &radii {
            for (j, &r) in dir.iter().enumerate() {
                let bad = !(r > 0.0 && r.is_finite());
                if bad && worst.is_none_or(|(_, w)| r < w || r.is_nan()) {
                    worst = Some((j, r));
                }
            }
        }
        if let Some((index, value)) = worst {
            return Err(GeometryError::ConvexityViolation { index, value });
        }

        let mut gauss = Vec::with_capacity(samples);
        let mut mean = Vec::with_capacity(samples);
        let mut lambda_min = Vec::with_capacity(samples);
        let mut lambda_max = Vec::with_capacity(samples);
        let mut trace_b = Vec::with_capacity(samples);
        for j in 0..samples {
            let mut prod = 1.0;
            let mut sum_r = 0.0;
            let mut sum_k = 0.0;
            let mut r_min = f64::INFINITY;
            let mut r_max = 0.0_f64;
            for dir in &radii {
                let r = dir[j];
                prod *= r;
                sum_r += r;
                sum_k += 1.0 / r;
                r_min = r_min.min(r);
                r_max = r_max.max(r);
            }
            gauss.push(1.0 / prod);
            mean.push(sum_k);
            lambda_min.push(1.0 / r_max);
            lambda_max.push(1.0 / r_min);
            trace_b.push(sum_r);
        }
        Ok(Self {
            radii,
            gauss,
            mean,
            lambda_min,
            lambda_max,
            trace_b,
        })
    }

    pub fn len(&self) -> usize {
        self.gauss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gauss.is_empty()
    }

    /// Largest principal radius at sample j, i.e. `1/λ_min`.
    pub fn max_radius(&self, j: usize) -> f64 {
        1.0 / self.lambda_min[j]
    }
}

/// Common interface of the two support-function backends.
pub trait ConvexBody: Clone + Debug + Send + Sync + Sized {
    /// Translation vector type (a plane vector for curves, an axial offset
    /// for bodies of revolution).
    type Offset: Copy + Debug + PartialEq + Neg<Output = Self::Offset> + Send + Sync;

    /// Intrinsic dimension n of the boundary hypersurface.
    const DIM: usize;
    const MIN_SAMPLES: usize;
    const NAME: &'static str;

    /// Grid angles for a body with `n` samples.
    fn grid_angles(n: usize) -> Vec<f64>;

    /// Validates and wraps support samples given in grid order.
    fn from_support(h: Vec<f64>) -> Result<Self, GeometryError>;

    fn support(&self) -> &[f64];

    /// Angular grid spacing.
    fn spacing(&self) -> f64;

    fn curvature_fields(&self) -> CurvatureFields;

    /// FD2 derivative of a sample field with respect to the grid angle.
    fn grid_derivative(&self, u: &[f64]) -> Vec<f64>;

    fn grid_second_derivative(&self, u: &[f64]) -> Vec<f64>;

    fn volume(&self) -> f64;

    /// Volume of the unit ball in R^{n+1}.
    fn unit_ball_volume() -> f64;

    fn steiner_point(&self) -> Self::Offset;

    fn translate(&self, v: Self::Offset) -> Result<Self, GeometryError>;

    /// Average `(1/|Sⁿ|)∫ f dσ` of a sampled field over the sphere of normals.
    fn sphere_mean(&self, f: &[f64]) -> f64;

    /// Boundary points in the plane of the profile: `(x, y)` for curves,
    /// `(ρ, z)` meridian coordinates for bodies of revolution.
    fn boundary_points(&self) -> Vec<[f64; 2]>;

    /// `b^{ij}∇_i∇_j u` for an axisymmetric (resp. curve) scalar field u,
    /// with the surface Christoffel terms included.
    fn trace_b_hessian(&self, u: &[f64], fields: &CurvatureFields) -> Vec<f64>;

    fn len(&self) -> usize {
        self.support().len()
    }

    fn is_empty(&self) -> bool {
        self.support().is_empty()
    }

    fn angles(&self) -> Vec<f64> {
        Self::grid_angles(self.len())
    }

    /// `|F|² = h² + |∇̄h|²` per sample.
    fn position_norm_sq(&self) -> Vec<f64> {
        let h = self.support();
        let dh = self.grid_derivative(h);
        h.iter().zip(&dh).map(|(a, b)| a * a + b * b).collect()
    }

    /// Derivative along the unit tangent in the profile direction,
    /// `∇_1 u = u' / R_1`.
    fn arc_derivative(&self, u: &[f64], fields: &CurvatureFields) -> Vec<f64> {
        self.grid_derivative(u)
            .iter()
            .zip(&fields.radii[0])
            .map(|(d, r)| d / r)
            .collect()
    }

    fn scale(&self, lambda: f64) -> Result<Self, GeometryError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(GeometryError::InvalidScale(lambda));
        }
        Self::from_support(self.support().iter().map(|h| h * lambda).collect())
    }

    /// Translates the Steiner point to the origin.
    fn recenter(&self) -> Result<Self, GeometryError> {
        self.translate(-self.steiner_point())
    }

    /// Multiplies the support function by `1 + Σ_m a_m cos(k_m t)`, where
    /// `t` is the grid angle. Cosines keep axisymmetric bodies smooth at the
    /// poles.
    fn perturbed(&self, modes: &[Mode]) -> Result<Self, GeometryError> {
        let h = self
            .support()
            .iter()
            .zip(self.angles())
            .map(|(h, t)| h * (1.0 + modes.iter().map(|m| m.amplitude * (m.k as f64 * t).cos()).sum::<f64>()))
            .collect();
        Self::from_support(h)
    }
}

/// One cosine mode of a support-function perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: u32,
    pub amplitude: f64,
}

fn check_support(h: &[f64], min: usize) -> Result<(), GeometryError> {
    if h.len() < min {
        return Err(GeometryError::GridTooSmall { got: h.len(), min });
    }
    if let Some((index, &value)) = h
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(GeometryError::NonPositiveSupport { index, value });
    }
    Ok(())
}

/// Maximum absolute value of a field.
pub fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `(min, max, mean)` of a non-empty field.
pub fn min_max_mean(u: &[f64]) -> (f64, f64, f64) {
    let (lo, hi, sum) = u.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0.0),
        |(lo, hi, s), &v| (lo.min(v), hi.max(v), s + v),
    );
    (lo, hi, sum / u.len() as f64)
}
