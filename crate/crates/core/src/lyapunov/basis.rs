use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::padded_integral;

use super::tangent::Tangent;

/// Modified Gram–Schmidt in the product inner product. On return `basis`
/// is orthonormal and the original family equals `basis · R`.
pub fn orthonormalize(basis: &mut [Tangent]) -> Result<DMatrix<f64>> {
    let n = basis.len();
    let mut r = DMatrix::zeros(n, n);
    for j in 0..n {
        let scale = basis[j].norm();
        for i in 0..j {
            let (done, rest) = basis.split_at_mut(j);
            let c = done[i].inner(&rest[0]);
            rest[0].axpy(-c, &done[i]);
            r[(i, j)] = c;
        }
        let norm = basis[j].norm();
        if !(norm.is_finite() && norm > 1e-12 * scale) {
            return Err(Error::DegenerateBasis { index: j, norm });
        }
        r[(j, j)] = norm;
        basis[j] = basis[j].scaled(1.0 / norm);
    }
    Ok(r)
}

/// `max |[φ_i, φ_j] − δ_ij|`.
pub fn gram_deviation(family: &[Tangent]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in family.iter().enumerate() {
        for (j, b) in family.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner(b) - target).abs());
        }
    }
    worst
}

/// Ingredients of the Lieb–Thirring ratio for one orthonormal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiebThirring {
    /// `|ρ|² = ∫ (Σ_j |v_j|² + |z_j|²)² dx`
    pub rho_sq: f64,
    /// `Σ_j [[φ_j]]²`
    pub h1_sum: f64,
    pub ratio: f64,
    pub family_size: usize,
}

/// `|ρ|² / Σ[[φ_j]]²` with `ρ(x) = Σ_j |v_j(x)|² + |z_j(x)|²`. The quartic
/// integral is evaluated on the doubled grid, where it is exact.
pub fn lieb_thirring_check(family: &[Tangent]) -> Result<LiebThirring> {
    let Some(first) = family.first() else {
        return Err(Error::InvalidParameter("empty family".into()));
    };
    let deviation = gram_deviation(family);
    if deviation > 1e-8 {
        return Err(Error::NotOrthonormal { deviation });
    }
    let grid = first.grid().clone();
    let mut rho = vec![0.0; 4 * grid.len()];
    for phi in family {
        for f in [&phi.v.x, &phi.v.y, &phi.z] {
            for (r, s) in rho.iter_mut().zip(f.padded_samples()) {
                *r += s * s;
            }
        }
    }
    let sq: Vec<f64> = rho.iter().map(|r| r * r).collect();
    let rho_sq = padded_integral(&grid, &sq);
    let h1_sum: f64 = family.iter().map(Tangent::h1_sq).sum();
    Ok(LiebThirring {
        rho_sq,
        h1_sum,
        ratio: rho_sq / h1_sum,
        family_size: family.len(),
    })
}

/// `j + (μ₁+…+μ_j)/|μ_{j+1}|` at the last `j` with a nonnegative partial
/// sum; zero when `μ₁ < 0`. `None` when every partial sum is nonnegative.
pub fn kaplan_yorke(exponents: &[f64]) -> Option<f64> {
    let mut sorted = exponents.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut sum = 0.0;
    for (j, mu) in sorted.iter().enumerate() {
        if sum + mu < 0.0 {
            return Some(j as f64 + sum / mu.abs());
        }
        sum += mu;
    }
    None
}
