//! Brute-force reference computations kept independent of the library's
//! FFT-based paths.
#![allow(dead_code)]

use micropolar::spectral::{Grid, ScalarField, VectorField};
use num_complex::Complex64;

/// Coefficient lookup by integer wavevector, zero when unrepresented.
fn coeff(f: &ScalarField, k: (i64, i64)) -> Complex64 {
    f.coeff(k)
}

fn wavevectors(g: &Grid) -> Vec<(i64, i64)> {
    (0..g.len()).map(|i| g.wavevector(i)).collect()
}

/// `Σ_i ∫ a_i ∂_i c · d dx` by direct double sum over Fourier triads.
fn triad_sum(u: &VectorField, c: &ScalarField, d: &ScalarField) -> f64 {
    let g = u.grid();
    let kappa = g.base_wavenumber();
    let ks = wavevectors(g);
    let mut acc = Complex64::new(0.0, 0.0);
    for &p in &ks {
        let u1 = coeff(&u.x, p);
        let u2 = coeff(&u.y, p);
        if u1.norm_sqr() + u2.norm_sqr() == 0.0 {
            continue;
        }
        for &q in &ks {
            let cq = coeff(c, q);
            if cq.norm_sqr() == 0.0 {
                continue;
            }
            let r = (p.0 + q.0, p.1 + q.1);
            // ∫ e^{i(p+q)x} conj(e^{irx}) = |Q| δ_{r,p+q}; d is real so the
            // pairing uses conj(d̂(p+q))
            let dr = coeff(d, r).conj();
            let grad = u1 * Complex64::new(0.0, kappa * q.0 as f64)
                + u2 * Complex64::new(0.0, kappa * q.1 as f64);
            acc += grad * cq * dr;
        }
    }
    g.area() * acc.re
}

pub fn b_convolution(u: &VectorField, v: &VectorField, w: &VectorField) -> f64 {
    triad_sum(u, &v.x, &w.x) + triad_sum(u, &v.y, &w.y)
}

pub fn b1_convolution(u: &VectorField, omega: &ScalarField, psi: &ScalarField) -> f64 {
    triad_sum(u, omega, psi)
}

/// `∫ f g dx` by midpoint quadrature on a refined grid using the direct
/// Fourier sum for point values.
pub fn point_value(f: &ScalarField, x: (f64, f64)) -> f64 {
    let g = f.grid();
    let kappa = g.base_wavenumber();
    let mut acc = 0.0;
    for (i, c) in f.coeffs().iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let (k1, k2) = g.wavevector(i);
        let ph = kappa * (k1 as f64 * x.0 + k2 as f64 * x.1);
        acc += (c * Complex64::from_polar(1.0, ph)).re;
    }
    acc
}

/// Trapezoid quadrature of `f g` on an `m × m` lattice; exact for
/// trigonometric products whose bandwidth is below `m`.
pub fn quadrature_inner(f: &ScalarField, h: &ScalarField, m: usize) -> f64 {
    let l = f.grid().length();
    let dx = l / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let x = (i as f64 * dx, j as f64 * dx);
            acc += point_value(f, x) * point_value(h, x);
        }
    }
    acc * dx * dx
}
