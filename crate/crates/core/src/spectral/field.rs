use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Real zero-mean scalar field stored as its full complex Fourier spectrum.
///
/// `f(x) = Σ_k c_k exp(i 2π k·x / L)`. Every constructor and mutator
/// restores `c(-k) = conj(c(k))`, `c(0) = 0` and clears the Nyquist lines.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

/// Pair of scalar fields `(u₁, u₂)` on one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![ZERO; grid.len()],
        }
    }

    /// Adopt a coefficient array, projecting it onto the admissible set.
    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let mut f = Self {
            grid: Arc::clone(grid),
            coeffs,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Like [`from_coeffs`](Self::from_coeffs) but rejects input whose
    /// Hermitian residual exceeds `1e-12` of its largest coefficient.
    pub fn from_hermitian_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        let residual = hermitian_residual(grid, &coeffs);
        if residual > 1e-12 {
            return Err(Error::NotHermitian { residual });
        }
        Self::from_coeffs(grid, coeffs)
    }

    /// Adopt coefficients verbatim after checking they already satisfy the
    /// invariants, so bit patterns (including signed zeros) survive.
    pub(crate) fn from_exact_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let f = Self {
            grid: Arc::clone(grid),
            coeffs,
        };
        let mut canon = f.clone();
        canon.symmetrize();
        if canon.coeffs.iter().zip(&f.coeffs).any(|(a, b)| a != b) {
            return Err(Error::NotHermitian {
                residual: f.hermitian_residual(),
            });
        }
        Ok(f)
    }

    /// Single real Fourier mode: `c(k) = c`, `c(-k) = conj(c)`.
    pub fn single_mode(grid: &Arc<Grid>, k: (i64, i64), c: Complex64) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .filter(|&i| i != 0 && !grid.is_nyquist(i))
            .ok_or_else(|| Error::InvalidParameter(format!("wavevector {k:?} not representable")))?;
        let mut coeffs = vec![ZERO; grid.len()];
        coeffs[idx] = c;
        coeffs[grid.partner_index(idx)] = c.conj();
        Self::from_coeffs(grid, coeffs)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: (i64, i64)) -> Complex64 {
        self.grid.index_of(k).map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Apply a per-coefficient map, then restore the invariants.
    pub fn map_coeffs(&self, mut f: impl FnMut(usize, Complex64) -> Complex64) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect();
        let mut out = Self {
            grid: Arc::clone(&self.grid),
            coeffs,
        };
        out.symmetrize();
        out
    }

    /// Multiply by a real function of the wavevector (no re-symmetrization
    /// needed when the multiplier is even in `k`).
    pub(crate) fn scale_by(&self, f: impl Fn(usize) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * f(i))
            .collect();
        Self {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    /// Spectral derivative along axis 0 (`x₁`) or 1 (`x₂`).
    pub fn derivative(&self, axis: usize) -> Self {
        let kappa = self.grid.base_wavenumber();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let k = self.grid.wavevector(i);
                let kj = if axis == 0 { k.0 } else { k.1 };
                c * Complex64::new(0.0, kappa * kj as f64)
            })
            .collect();
        let mut out = Self {
            grid: Arc::clone(&self.grid),
            coeffs,
        };
        out.clear_nyquist();
        out
    }

    fn clear_nyquist(&mut self) {
        let n = self.grid.n();
        let h = n / 2;
        for j in 0..n {
            self.coeffs[h * n + j] = ZERO;
            self.coeffs[j * n + h] = ZERO;
        }
        self.coeffs[0] = ZERO;
    }

    /// Restore Hermitian symmetry, zero mean and empty Nyquist lines.
    pub fn symmetrize(&mut self) {
        let g = Arc::clone(&self.grid);
        for i in 0..self.coeffs.len() {
            let p = g.partner_index(i);
            if p > i {
                let avg = 0.5 * (self.coeffs[i] + self.coeffs[p].conj());
                self.coeffs[i] = avg;
                self.coeffs[p] = avg.conj();
            } else if p == i {
                self.coeffs[i].im = 0.0;
            }
        }
        self.clear_nyquist();
    }

    /// Zero every coefficient above the 2/3-rule cutoff.
    pub fn dealias(&mut self) {
        for i in 0..self.coeffs.len() {
            if !self.grid.is_resolved(i) {
                self.coeffs[i] = ZERO;
            }
        }
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    pub fn is_dealiased(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| self.grid.is_resolved(i) || *c == ZERO)
    }

    pub fn hermitian_residual(&self) -> f64 {
        hermitian_residual(&self.grid, &self.coeffs)
    }

    /// Real `L²(Q)` inner product via Parseval: `|Q| Σ Re(a_k conj(b_k))`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        assert!(self.same_grid(other), "grid mismatch in inner product");
        self.grid.area()
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.re * b.re + a.im * b.im)
                .fold(0.0, |acc, v| acc + v)
    }

    /// `Σ w(k) |c_k|² · |Q|`.
    pub(crate) fn weighted_energy(&self, w: impl Fn(usize) -> f64) -> f64 {
        self.grid.area()
            * self
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != ZERO)
                .map(|(i, c)| w(i) * c.norm_sqr())
                .fold(0.0, |acc, v| acc + v)
    }

    pub fn axpy(&mut self, a: f64, x: &ScalarField) {
        assert!(self.same_grid(x), "grid mismatch in axpy");
        for (s, xv) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += xv * a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.scale_by(|_| a)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Physical samples `f(i₁ dx, i₂ dx)`; rejects non-Hermitian spectra.
    pub fn to_physical(&self) -> Result<Vec<f64>> {
        let residual = self.hermitian_residual();
        if residual > 1e-12 {
            return Err(Error::NotHermitian { residual });
        }
        Ok(self.samples())
    }

    pub(crate) fn samples(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        self.grid.fft2(&mut buf, true);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Complex samples before discarding the imaginary part.
    pub fn physical_complex(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        self.grid.fft2(&mut buf, true);
        buf
    }

    /// Fourier coefficients of real samples; the mean and Nyquist content
    /// are discarded.
    pub fn from_physical(grid: &Arc<Grid>, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        Ok(Self::from_samples_unchecked(grid, samples))
    }

    pub(crate) fn from_samples_unchecked(grid: &Arc<Grid>, samples: &[f64]) -> Self {
        let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        grid.fft2(&mut buf, false);
        let norm = 1.0 / grid.len() as f64;
        for c in &mut buf {
            *c *= norm;
        }
        let mut f = Self {
            grid: Arc::clone(grid),
            coeffs: buf,
        };
        f.symmetrize();
        f
    }

    /// Samples of this field on the `2n × 2n` grid (exact zero-padded
    /// interpolation).
    pub(crate) fn padded_samples(&self) -> Vec<f64> {
        let n = self.grid.n();
        let m = 2 * n;
        let mut buf = vec![ZERO; m * m];
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let (k1, k2) = self.grid.wavevector(i);
            let j1 = k1.rem_euclid(m as i64) as usize;
            let j2 = k2.rem_euclid(m as i64) as usize;
            buf[j1 * m + j2] = c;
        }
        self.grid.fft2_padded(&mut buf, true);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Random field with `|k_i| ≤ kmax`, Gaussian-like coefficients.
    pub fn random<R: Rng + ?Sized>(grid: &Arc<Grid>, kmax: i64, rng: &mut R) -> Self {
        let mut coeffs = vec![ZERO; grid.len()];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let (k1, k2) = grid.wavevector(i);
            if k1.abs() <= kmax && k2.abs() <= kmax {
                *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let mut f = Self {
            grid: Arc::clone(grid),
            coeffs,
        };
        f.symmetrize();
        f
    }
}

/// Mean of samples on the padded grid gives the exact integral `∫ s dx / |Q|`
/// for products of up to four fields below the dealiasing cutoff.
pub(crate) fn padded_integral(grid: &Grid, samples: &[f64]) -> f64 {
    grid.area() * samples.iter().sum::<f64>() / samples.len() as f64
}

fn hermitian_residual(grid: &Grid, coeffs: &[Complex64]) -> f64 {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..coeffs.len() {
        if grid.is_nyquist(i) {
            continue;
        }
        let p = grid.partner_index(i);
        worst = worst.max((coeffs[i] - coeffs[p].conj()).norm());
    }
    worst.max(coeffs[0].norm()) / scale
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        if !x.same_grid(&y) {
            return Err(Error::GridMismatch("vector components"));
        }
        Ok(Self { x, y })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.x.grid()
    }

    pub fn components(&self) -> [&ScalarField; 2] {
        [&self.x, &self.y]
    }

    pub fn same_grid(&self, other: &VectorField) -> bool {
        self.x.same_grid(&other.x)
    }

    pub fn inner(&self, other: &VectorField) -> f64 {
        self.x.inner(&other.x) + self.y.inner(&other.y)
    }

    pub fn axpy(&mut self, a: f64, v: &VectorField) {
        self.x.axpy(a, &v.x);
        self.y.axpy(a, &v.y);
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            x: self.x.scaled(a),
            y: self.y.scaled(a),
        }
    }

    pub fn dealias(&mut self) {
        self.x.dealias();
        self.y.dealias();
    }

    pub fn is_dealiased(&self) -> bool {
        self.x.is_dealiased() && self.y.is_dealiased()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Spectral divergence `i(2π/L)(k₁ c₁ + k₂ c₂)` as a scalar field.
    pub fn divergence(&self) -> ScalarField {
        let mut d = self.x.derivative(0);
        d.axpy(1.0, &self.y.derivative(1));
        d
    }

    /// Largest `|k·c(k)| / (|k| |c(k)|)` over nonzero coefficients; zero for
    /// an exactly solenoidal field.
    pub fn divergence_residual(&self) -> f64 {
        let g = self.grid();
        let mut worst: f64 = 0.0;
        let scale = self.x.max_abs_coeff().max(self.y.max_abs_coeff());
        if scale == 0.0 {
            return 0.0;
        }
        for i in 0..g.len() {
            let (k1, k2) = g.wavevector(i);
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let kn = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let d = self.x.coeffs[i] * k1 as f64 + self.y.coeffs[i] * k2 as f64;
            worst = worst.max(d.norm() / (kn * scale));
        }
        worst
    }

    /// Random solenoidal field with `|k_i| ≤ kmax`.
    pub fn random_solenoidal<R: Rng + ?Sized>(grid: &Arc<Grid>, kmax: i64, rng: &mut R) -> Self {
        let psi = ScalarField::random(grid, kmax, rng);
        // u = (∂₂ψ, -∂₁ψ)
        Self {
            x: psi.derivative(1),
            y: psi.derivative(0).scaled(-1.0),
        }
    }

    /// Random field with no divergence constraint.
    pub fn random<R: Rng + ?Sized>(grid: &Arc<Grid>, kmax: i64, rng: &mut R) -> Self {
        Self {
            x: ScalarField::random(grid, kmax, rng),
            y: ScalarField::random(grid, kmax, rng),
        }
    }
}

macro_rules! impl_ops {
    ($t:ty) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: &$t) -> $t {
                let mut out = self.clone();
                out += rhs;
                out
            }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: &$t) -> $t {
                let mut out = self.clone();
                out -= rhs;
                out
            }
        }
        impl Neg for &$t {
            type Output = $t;
            fn neg(self) -> $t {
                self.scaled(-1.0)
            }
        }
        impl Mul<&$t> for f64 {
            type Output = $t;
            fn mul(self, rhs: &$t) -> $t {
                rhs.scaled(self)
            }
        }
        impl AddAssign<&$t> for $t {
            fn add_assign(&mut self, rhs: &$t) {
                self.axpy(1.0, rhs);
            }
        }
        impl SubAssign<&$t> for $t {
            fn sub_assign(&mut self, rhs: &$t) {
                self.axpy(-1.0, rhs);
            }
        }
    };
}

impl_ops!(ScalarField);
impl_ops!(VectorField);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = make_grid(8, 1.0).unwrap();
        let s = ScalarField::zeros(&g).to_physical().unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cosine_mode_samples() {
        let l = 3.0;
        let g = make_grid(16, l).unwrap();
        let f = ScalarField::single_mode(&g, (1, 0), Complex64::new(0.5, 0.0)).unwrap();
        let s = f.to_physical().unwrap();
        for i1 in 0..16 {
            for i2 in 0..16 {
                let x1 = g.coordinate(i1);
                let expected = (2.0 * PI * x1 / l).cos();
                assert!((s[i1 * 16 + i2] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn round_trip_matches_direct_sum() {
        let g = make_grid(8, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = ScalarField::random(&g, 3, &mut rng);
        let fast = f.physical_complex();
        // direct O(n⁴) Fourier sum
        let n = 8;
        for i1 in 0..n {
            for i2 in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (idx, c) in f.coeffs().iter().enumerate() {
                    let (k1, k2) = g.wavevector(idx);
                    let phase = 2.0 * PI * ((k1 * i1 as i64 + k2 * i2 as i64) as f64) / n as f64;
                    acc += c * Complex64::from_polar(1.0, phase);
                }
                let got = fast[i1 * n + i2];
                assert!((got - acc).norm() < 1e-12);
                assert!(got.im.abs() < 1e-12);
            }
        }
        let back = ScalarField::from_physical(&g, &f.to_physical().unwrap()).unwrap();
        let scale = f.max_abs_coeff();
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let g = make_grid(8, 1.0).unwrap();
        let mut c = vec![ZERO; g.len()];
        c[g.index_of((1, 0)).unwrap()] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            ScalarField::from_hermitian_coeffs(&g, c),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn solenoidal_random_is_divergence_free() {
        let g = make_grid(16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = VectorField::random_solenoidal(&g, 5, &mut rng);
        assert!(u.divergence_residual() < 1e-14);
    }
}
