use std::f64::consts::PI;

use super::spectral::{even_extension_derivatives, fejer_weights};
use super::stencil::{first_derivative, second_derivative, Boundary};
use super::{check_support, ConvexBody, CurvatureFields, GeometryError};

/// Strictly convex body of revolution about the z axis, sampled by its
/// support function at cell-centred polar angles `φ_j = (j + ½)π/N` of the
/// normal. No sample sits on a pole, so `cot φ` is finite everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisymBody {
    h: Vec<f64>,
}

impl AxisymBody {
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, GeometryError> {
        Self::from_support(Self::grid_angles(n).into_iter().map(f).collect())
    }

    pub fn sphere(n: usize, radius: f64) -> Result<Self, GeometryError> {
        Self::from_fn(n, |_| radius)
    }

    /// Spheroid with equatorial semi-axis `a` and polar semi-axis `c`.
    pub fn spheroid(n: usize, a: f64, c: f64) -> Result<Self, GeometryError> {
        Self::from_fn(n, |p| (a * a * p.sin().powi(2) + c * c * p.cos().powi(2)).sqrt())
    }

    fn radii_of(h: &[f64]) -> Vec<Vec<f64>> {
        let dx = PI / h.len() as f64;
        let d1 = first_derivative(h, dx, Boundary::EvenReflect);
        let d2 = second_derivative(h, dx, Boundary::EvenReflect);
        let phis = Self::grid_angles(h.len());
        let meridional = d2.iter().zip(h).map(|(d, h)| d + h).collect();
        let azimuthal = phis
            .iter()
            .zip(d1.iter().zip(h))
            .map(|(p, (d, h))| d / p.tan() + h)
            .collect();
        vec![meridional, azimuthal]
    }
}

impl ConvexBody for AxisymBody {
    /// Offset along the symmetry axis.
    type Offset = f64;

    const DIM: usize = 2;
    const MIN_SAMPLES: usize = 32;
    const NAME: &'static str = "axisym";

    fn grid_angles(n: usize) -> Vec<f64> {
        (0..n).map(|j| (j as f64 + 0.5) * PI / n as f64).collect()
    }

    fn from_support(h: Vec<f64>) -> Result<Self, GeometryError> {
        check_support(&h, Self::MIN_SAMPLES)?;
        CurvatureFields::from_radii(Self::radii_of(&h))?;
        Ok(Self { h })
    }

    fn support(&self) -> &[f64] {
        &self.h
    }

    fn spacing(&self) -> f64 {
        PI / self.h.len() as f64
    }

    fn curvature_fields(&self) -> CurvatureFields {
        CurvatureFields::from_radii(Self::radii_of(&self.h)).expect("radii validated at construction")
    }

    fn grid_derivative(&self, u: &[f64]) -> Vec<f64> {
        first_derivative(u, self.spacing(), Boundary::EvenReflect)
    }

    fn grid_second_derivative(&self, u: &[f64]) -> Vec<f64> {
        second_derivative(u, self.spacing(), Boundary::EvenReflect)
    }

    /// `(1/3)∫ h·R1·R2 dσ` with spectral radii and Fejér weights.
    fn volume(&self) -> f64 {
        let (d1, d2) = even_extension_derivatives(&self.h);
        let w = fejer_weights(self.h.len());
        let sum: f64 = Self::grid_angles(self.h.len())
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let h = self.h[j];
                let r1 = d2[j] + h;
                let r2 = d1[j] / p.tan() + h;
                w[j] * h * r1 * r2
            })
            .sum();
        2.0 * PI / 3.0 * sum
    }

    fn unit_ball_volume() -> f64 {
        4.0 * PI / 3.0
    }

    /// Axial component `(3/2)∫_0^π h cos φ sin φ dφ`; the other components
    /// vanish by symmetry.
    fn steiner_point(&self) -> f64 {
        let w = fejer_weights(self.h.len());
        let sum: f64 = Self::grid_angles(self.h.len())
            .iter()
            .zip(self.h.iter().zip(w.iter()))
            .map(|(p, (h, w))| w * h * p.cos())
            .sum();
        1.5 * sum
    }

    fn translate(&self, v: f64) -> Result<Self, GeometryError> {
        let h = Self::grid_angles(self.h.len())
            .iter()
            .zip(&self.h)
            .map(|(p, h)| h + v * p.cos())
            .collect();
        Self::from_support(h)
    }

    fn sphere_mean(&self, f: &[f64]) -> f64 {
        let w = fejer_weights(f.len());
        0.5 * f.iter().zip(w.iter()).map(|(f, w)| f * w).sum::<f64>()
    }

    fn boundary_points(&self) -> Vec<[f64; 2]> {
        let (dh, _) = even_extension_derivatives(&self.h);
        Self::grid_angles(self.h.len())
            .into_iter()
            .zip(self.h.iter().zip(&dh))
            .map(|(p, (h, d))| {
                let (s, c) = p.sin_cos();
                [h * s + d * c, h * c - d * s]
            })
            .collect()
    }

    /// `R1·∂²_s u + cot φ·u_φ / R1`: the meridian is a geodesic with arc
    /// length `ds = R1 dφ`, and along the parallels `∇²u(e2, e2) = (ρ_s/ρ)u_s`
    /// with `ρ_φ = R1 cos φ`, `ρ = R2 sin φ`.
    fn trace_b_hessian(&self, u: &[f64], fields: &CurvatureFields) -> Vec<f64> {
        let r1 = &fields.radii[0];
        let du = self.grid_derivative(u);
        let d2u = self.grid_second_derivative(u);
        let dr1 = self.grid_derivative(r1);
        Self::grid_angles(u.len())
            .iter()
            .enumerate()
            .map(|(j, p)| {
                d2u[j] / r1[j] - dr1[j] * du[j] / (r1[j] * r1[j]) + du[j] / (p.tan() * r1[j])
            })
            .collect()
    }
}
