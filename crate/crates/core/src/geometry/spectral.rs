//! Fourier differentiation and Fejér quadrature.
//!
//! Used only where second-order differences are not accurate enough:
//! global integrals (volume) and the boundary samples handed to the
//! ellipsoid fit. Pointwise curvature fields stay on the FD2 stencil.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static WEIGHTS: RefCell<HashMap<usize, Rc<[f64]>>> = RefCell::new(HashMap::new());
}

/// First and second derivatives of equispaced samples covering one
/// full period of length 2π.
pub fn fourier_derivatives(u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let (forward, inverse) = PLANNER.with_borrow_mut(|p| (p.plan_fft_forward(n), p.plan_fft_inverse(n)));

    let mut spectrum: Vec<Complex<f64>> = u.iter().map(|&x| Complex::new(x, 0.0)).collect();
    forward.process(&mut spectrum);

    let mut first = spectrum.clone();
    let mut second = spectrum;
    for k in 0..n {
        let wave = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let nyquist = n % 2 == 0 && k == n / 2;
        first[k] = if nyquist {
            Complex::new(0.0, 0.0)
        } else {
            first[k] * Complex::new(0.0, wave)
        };
        second[k] *= -wave * wave;
    }
    inverse.process(&mut first);
    inverse.process(&mut second);
    let inv_n = 1.0 / n as f64;
    (
        first.iter().map(|c| c.re * inv_n).collect(),
        second.iter().map(|c| c.re * inv_n).collect(),
    )
}

/// Derivatives of a field sampled at cell centres `(j + 1/2)π/N` that is
/// even about both poles: differentiate its 2π-periodic even extension.
pub fn even_extension_derivatives(u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let extended: Vec<f64> = u.iter().chain(u.iter().rev()).copied().collect();
    let (mut d1, mut d2) = fourier_derivatives(&extended);
    d1.truncate(n);
    d2.truncate(n);
    (d1, d2)
}

/// Fejér's first rule on the cell-centred polar grid: weights `w_j` with
/// `Σ w_j f(φ_j) ≈ ∫_0^π f(φ) sin φ dφ`, exact for polynomials in cos φ
/// of degree below `n`.
pub fn fejer_weights(n: usize) -> Rc<[f64]> {
    WEIGHTS.with_borrow_mut(|cache| cache.entry(n).or_insert_with(|| fejer_uncached(n).into()).clone())
}

fn fejer_uncached(n: usize) -> Vec<f64> {
    let dphi = std::f64::consts::PI / n as f64;
    (0..n)
        .map(|j| {
            let phi = (j as f64 + 0.5) * dphi;
            let tail: f64 = (1..=n / 2)
                .map(|k| {
                    let k = k as f64;
                    (2.0 * k * phi).cos() / (4.0 * k * k - 1.0)
                })
                .sum();
            2.0 / n as f64 * (1.0 - 2.0 * tail)
        })
        .collect()
}
