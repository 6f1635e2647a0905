//! Second-order central differences on the two angular grids.
//!
//! The divisors are `2 sin Δx` and `4 sin²(Δx/2)` rather than `2Δx` and
//! `Δx²`. Both stencils stay second order, and they differentiate `cos t`
//! and `sin t` exactly, so adding `⟨v, u⟩` to a support function (a
//! translation) leaves the discrete radii of curvature unchanged.

/// How the stencil reaches past the ends of the sample array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Samples wrap around (full circle of normals).
    Periodic,
    /// Ghost cells mirror the first/last sample (cell-centred polar grid,
    /// the field is even about both poles).
    EvenReflect,
}

#[inline]
fn neighbours(j: usize, n: usize, boundary: Boundary) -> (usize, usize) {
    match boundary {
        Boundary::Periodic => ((j + n - 1) % n, (j + 1) % n),
        Boundary::EvenReflect => (j.saturating_sub(1), (j + 1).min(n - 1)),
    }
}

/// Central first difference `(u[j+1] - u[j-1]) / (2 sin dx)`.
pub fn first_derivative(u: &[f64], dx: f64, boundary: Boundary) -> Vec<f64> {
    let n = u.len();
    let inv = 0.5 / dx.sin();
    (0..n)
        .map(|j| {
            let (l, r) = neighbours(j, n, boundary);
            (u[r] - u[l]) * inv
        })
        .collect()
}

/// Central second difference `(u[j+1] - 2u[j] + u[j-1]) / (4 sin²(dx/2))`.
pub fn second_derivative(u: &[f64], dx: f64, boundary: Boundary) -> Vec<f64> {
    let n = u.len();
    let inv = 1.0 / (4.0 * (0.5 * dx).sin().powi(2));
    (0..n)
        .map(|j| {
            let (l, r) = neighbours(j, n, boundary);
            (u[r] - 2.0 * u[j] + u[l]) * inv
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_stencils_on_a_trig_mode() {
        let n = 400;
        let dx = 2.0 * PI / n as f64;
        let u: Vec<f64> = (0..n).map(|j| (3.0 * j as f64 * dx).sin()).collect();
        let d1 = first_derivative(&u, dx, Boundary::Periodic);
        let d2 = second_derivative(&u, dx, Boundary::Periodic);
        for j in 0..n {
            let x = j as f64 * dx;
            assert!((d1[j] - 3.0 * (3.0 * x).cos()).abs() < 3e-3);
            assert!((d2[j] + 9.0 * (3.0 * x).sin()).abs() < 3e-3);
        }
    }

    #[test]
    fn first_harmonic_is_exact() {
        let n = 64;
        let dx = 2.0 * PI / n as f64;
        let u: Vec<f64> = (0..n).map(|j| (j as f64 * dx + 0.3).cos()).collect();
        let d1 = first_derivative(&u, dx, Boundary::Periodic);
        let d2 = second_derivative(&u, dx, Boundary::Periodic);
        for j in 0..n {
            let x = j as f64 * dx + 0.3;
            assert!((d1[j] + x.sin()).abs() < 1e-13);
            assert!((d2[j] + x.cos()).abs() < 1e-12);
        }
        let dphi = PI / n as f64;
        let c: Vec<f64> = (0..n).map(|j| ((j as f64 + 0.5) * dphi).cos()).collect();
        let d2 = second_derivative(&c, dphi, Boundary::EvenReflect);
        for j in 0..n {
            assert!((d2[j] + c[j]).abs() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn even_reflection_matches_even_extension() {
        let n = 200;
        let dx = PI / n as f64;
        let u: Vec<f64> = (0..n).map(|j| ((j as f64 + 0.5) * dx).cos().powi(2)).collect();
        let d1 = first_derivative(&u, dx, Boundary::EvenReflect);
        // d/dphi cos^2 = -sin(2 phi)
        for j in 0..n {
            let x = (j as f64 + 0.5) * dx;
            assert!((d1[j] + (2.0 * x).sin()).abs() < 1e-3, "j={j}");
        }
    }
}
