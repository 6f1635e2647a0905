use std::f64::consts::PI;

use nalgebra::Vector2;

use super::spectral::fourier_derivatives;
use super::stencil::{first_derivative, second_derivative, Boundary};
use super::{check_support, ConvexBody, CurvatureFields, GeometryError};

/// Strictly convex plane curve sampled by its support function at
/// `θ_j = 2πj/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveBody {
    h: Vec<f64>,
}

impl CurveBody {
    /// Samples `f(θ)` on an `n`-point grid.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, GeometryError> {
        Self::from_support(Self::grid_angles(n).into_iter().map(f).collect())
    }

    pub fn circle(n: usize, radius: f64) -> Result<Self, GeometryError> {
        Self::from_fn(n, |_| radius)
    }

    /// Centred ellipse with semi-axis `a` along x and `b` along y.
    pub fn ellipse(n: usize, a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::from_fn(n, |t| (a * a * t.cos().powi(2) + b * b * t.sin().powi(2)).sqrt())
    }

    fn radius_of_curvature(h: &[f64], dx: f64) -> Vec<f64> {
        second_derivative(h, dx, Boundary::Periodic)
            .into_iter()
            .zip(h)
            .map(|(d2, h)| d2 + h)
            .collect()
    }
}

impl ConvexBody for CurveBody {
    type Offset = Vector2<f64>;

    const DIM: usize = 1;
    const MIN_SAMPLES: usize = 16;
    const NAME: &'static str = "curve";

    fn grid_angles(n: usize) -> Vec<f64> {
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }

    fn from_support(h: Vec<f64>) -> Result<Self, GeometryError> {
        check_support(&h, Self::MIN_SAMPLES)?;
        let dx = 2.0 * PI / h.len() as f64;
        CurvatureFields::from_radii(vec![Self::radius_of_curvature(&h, dx)])?;
        Ok(Self { h })
    }

    fn support(&self) -> &[f64] {
        &self.h
    }

    fn spacing(&self) -> f64 {
        2.0 * PI / self.h.len() as f64
    }

    fn curvature_fields(&self) -> CurvatureFields {
        CurvatureFields::from_radii(vec![Self::radius_of_curvature(&self.h, self.spacing())])
            .expect("radii validated at construction")
    }

    fn grid_derivative(&self, u: &[f64]) -> Vec<f64> {
        first_derivative(u, self.spacing(), Boundary::Periodic)
    }

    fn grid_second_derivative(&self, u: &[f64]) -> Vec<f64> {
        second_derivative(u, self.spacing(), Boundary::Periodic)
    }

    /// Enclosed area `½∮ h·(h'' + h) dθ` with spectral `h''`.
    fn volume(&self) -> f64 {
        let (_, d2) = fourier_derivatives(&self.h);
        let dx = self.spacing();
        0.5 * dx * self.h.iter().zip(&d2).map(|(h, d)| h * (d + h)).sum::<f64>()
    }

    fn unit_ball_volume() -> f64 {
        PI
    }

    fn steiner_point(&self) -> Vector2<f64> {
        let dx = self.spacing();
        let (sx, sy) = self
            .h
            .iter()
            .zip(Self::grid_angles(self.h.len()))
            .fold((0.0, 0.0), |(x, y), (h, t)| (x + h * t.cos(), y + h * t.sin()));
        Vector2::new(sx, sy) * (dx / PI)
    }

    fn translate(&self, v: Vector2<f64>) -> Result<Self, GeometryError> {
        let h = self
            .h
            .iter()
            .zip(Self::grid_angles(self.h.len()))
            .map(|(h, t)| h + v.x * t.cos() + v.y * t.sin())
            .collect();
        Self::from_support(h)
    }

    fn sphere_mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / f.len() as f64
    }

    fn boundary_points(&self) -> Vec<[f64; 2]> {
        let (dh, _) = fourier_derivatives(&self.h);
        Self::grid_angles(self.h.len())
            .into_iter()
            .zip(self.h.iter().zip(&dh))
            .map(|(t, (h, d))| {
                let (s, c) = t.sin_cos();
                [h * c - d * s, h * s + d * c]
            })
            .collect()
    }

    /// `R·∂²_s u` with `∂_s = R⁻¹∂_θ`.
    fn trace_b_hessian(&self, u: &[f64], fields: &CurvatureFields) -> Vec<f64> {
        let r = &fields.radii[0];
        let du = self.grid_derivative(u);
        let d2u = self.grid_second_derivative(u);
        let dr = self.grid_derivative(r);
        (0..u.len())
            .map(|j| d2u[j] / r[j] - dr[j] * du[j] / (r[j] * r[j]))
            .collect()
    }
}
