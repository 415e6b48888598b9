use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// One entry of the Laplacian eigenvalue table.
///
/// Every nonzero wavevector `k` pairs with `-k`; together they span the two
/// real eigenfunctions `cos(k·x)` and `sin(k·x)`. The member of the pair that
/// sorts first carries the cosine (real part of the coefficient), the other
/// the sine (imaginary part), so a projector that keeps only one of them is
/// still a real orthogonal projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: (i64, i64),
    pub eigenvalue: f64,
    /// Flat index into the coefficient array.
    pub index: usize,
    /// Flat index of `-k`.
    pub partner: usize,
    pub carries_cosine: bool,
}

/// Periodic square `(0, L)²` sampled on `n × n` points.
///
/// Coefficients and samples share the row-major layout `i1 * n + i2`, with
/// `i1` running along `x₁` and `i2` along `x₂`. Wavenumbers follow the FFT
/// convention `0, 1, …, n/2 - 1, -n/2, …, -1`.
pub struct Grid {
    n: usize,
    length: f64,
    freqs: Vec<i64>,
    cutoff: i64,
    modes: Vec<Mode>,
    rank: Vec<Option<usize>>,
    plans: Plans,
    padded: Plans,
}

struct Plans {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(planner: &mut FftPlanner<f64>, size: usize) -> Self {
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.size;
        let fft = if inverse { &self.inverse } else { &self.forward };
        fft.process(data);
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        transpose(data, &mut t, n);
        fft.process(&mut t);
        transpose(&t, data, n);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

fn fft_freq(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Build the grid and its eigenvalue table.
pub fn make_grid(n: usize, length: f64) -> Result<Arc<Grid>> {
    if n < 8 || n % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "n must be an even integer >= 8, got {n}"
        )));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "period length must be positive, got {length}"
        )));
    }
    let freqs: Vec<i64> = (0..n).map(|i| fft_freq(i, n)).collect();
    let nyquist = (n / 2) as i64;
    let scale = (2.0 * std::f64::consts::PI / length).powi(2);

    let mut modes = Vec::with_capacity(n * n);
    for i1 in 0..n {
        for i2 in 0..n {
            let (k1, k2) = (freqs[i1], freqs[i2]);
            if (k1 == 0 && k2 == 0) || k1.abs() == nyquist || k2.abs() == nyquist {
                continue;
            }
            let partner = ((n - i1) % n) * n + (n - i2) % n;
            modes.push(Mode {
                k: (k1, k2),
                eigenvalue: scale * (k1 * k1 + k2 * k2) as f64,
                index: i1 * n + i2,
                partner,
                carries_cosine: false,
            });
        }
    }
    modes.sort_by(|a, b| {
        let ka = a.k.0 * a.k.0 + a.k.1 * a.k.1;
        let kb = b.k.0 * b.k.0 + b.k.1 * b.k.1;
        ka.cmp(&kb).then(a.k.cmp(&b.k))
    });
    let mut rank = vec![None; n * n];
    for (r, m) in modes.iter().enumerate() {
        rank[m.index] = Some(r);
    }
    for r in 0..modes.len() {
        let partner_rank = rank[modes[r].partner].expect("partner is enumerated");
        modes[r].carries_cosine = r < partner_rank;
    }

    let mut planner = FftPlanner::new();
    let plans = Plans::new(&mut planner, n);
    let padded = Plans::new(&mut planner, 2 * n);
    Ok(Arc::new(Grid {
        n,
        length,
        freqs,
        cutoff: (n as i64 - 1) / 3,
        modes,
        rank,
        plans,
        padded,
    }))
}

impl Grid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `|Q| = L²`.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// `2π / L`.
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Smallest nonzero eigenvalue `(2π/L)²`.
    pub fn lambda1(&self) -> f64 {
        self.base_wavenumber().powi(2)
    }

    /// Largest retained integer wavenumber after dealiasing; products of two
    /// fields below this cutoff alias only onto modes above it.
    pub fn dealias_cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer wavevector stored at a flat index.
    pub fn wavevector(&self, index: usize) -> (i64, i64) {
        (self.freqs[index / self.n], self.freqs[index % self.n])
    }

    /// Flat index of an integer wavevector, if representable.
    pub fn index_of(&self, k: (i64, i64)) -> Option<usize> {
        let h = (self.n / 2) as i64;
        if k.0 < -h || k.0 >= h || k.1 < -h || k.1 >= h {
            return None;
        }
        let wrap = |k: i64| k.rem_euclid(self.n as i64) as usize;
        Some(wrap(k.0) * self.n + wrap(k.1))
    }

    pub fn partner_index(&self, index: usize) -> usize {
        let (i1, i2) = (index / self.n, index % self.n);
        ((self.n - i1) % self.n) * self.n + (self.n - i2) % self.n
    }

    /// `(2π/L)² |k|²` at a flat index.
    pub fn eigenvalue_at(&self, index: usize) -> f64 {
        let (k1, k2) = self.wavevector(index);
        self.lambda1() * (k1 * k1 + k2 * k2) as f64
    }

    pub fn is_nyquist(&self, index: usize) -> bool {
        let h = (self.n / 2) as i64;
        let (k1, k2) = self.wavevector(index);
        k1 == -h || k2 == -h
    }

    pub fn is_resolved(&self, index: usize) -> bool {
        let (k1, k2) = self.wavevector(index);
        k1.abs() <= self.cutoff && k2.abs() <= self.cutoff
    }

    /// Eigenvalue table sorted by eigenvalue, ties broken by `(k₁, k₂)`.
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Position of a flat index in the eigenvalue table.
    pub fn mode_rank(&self, index: usize) -> Option<usize> {
        self.rank[index]
    }

    /// `λ_j` for the 1-based mode number `j`.
    pub fn lambda(&self, j: usize) -> f64 {
        self.modes[j - 1].eigenvalue
    }

    /// Number of leading table entries whose wavevectors survive dealiasing.
    pub fn resolved_prefix(&self) -> usize {
        self.modes
            .iter()
            .position(|m| !self.is_resolved(m.index))
            .unwrap_or(self.modes.len())
    }

    /// Coordinates of grid point `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// In-place unnormalized 2-D DFT. `inverse` uses `e^{+i…}`.
    pub(crate) fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.len());
        self.plans.transform(data, inverse);
    }

    /// Same on the `2n × 2n` grid used for exact quadrature of quartic
    /// quantities.
    pub(crate) fn fft2_padded(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), 4 * self.len());
        self.padded.transform(data, inverse);
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("modes", &self.modes.len())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(make_grid(7, 1.0).is_err());
        assert!(make_grid(6, 1.0).is_err());
        assert!(make_grid(8, 0.0).is_err());
        assert!(make_grid(8, -1.0).is_err());
    }

    #[test]
    fn first_eigenvalue_and_multiplicity() {
        // brute force over the 8×8 index set
        let g = make_grid(8, 2.0 * std::f64::consts::PI).unwrap();
        let mut min = i64::MAX;
        let mut count = 0;
        for a in -4..4i64 {
            for b in -4..4i64 {
                let s = a * a + b * b;
                if s == 0 {
                    continue;
                }
                if s < min {
                    min = s;
                    count = 1;
                } else if s == min {
                    count += 1;
                }
            }
        }
        assert_eq!(min, 1);
        assert_eq!(count, 4);
        assert!((g.lambda1() - 1.0).abs() < 1e-15);
        assert!((g.modes()[0].eigenvalue - 1.0).abs() < 1e-15);
        let mult = g.modes().iter().filter(|m| m.eigenvalue == g.lambda1()).count();
        assert_eq!(mult, 4);

        let g = make_grid(8, 1.0).unwrap();
        let four_pi2 = 4.0 * std::f64::consts::PI.powi(2);
        assert!((g.lambda1() - four_pi2).abs() < 1e-12);
    }

    #[test]
    fn table_is_sorted_and_deterministic() {
        let a = make_grid(16, 1.0).unwrap();
        let b = make_grid(16, 1.0).unwrap();
        assert_eq!(a.modes(), b.modes());
        for w in a.modes().windows(2) {
            assert!(w[0].eigenvalue <= w[1].eigenvalue);
            if w[0].eigenvalue == w[1].eigenvalue {
                assert!(w[0].k < w[1].k);
            }
        }
        assert!(a.modes().iter().all(|m| m.k != (0, 0)));
        // each ± pair has exactly one cosine carrier
        for m in a.modes() {
            let p = a.modes()[a.mode_rank(m.partner).unwrap()];
            assert_ne!(m.carries_cosine, p.carries_cosine);
        }
    }

    #[test]
    fn index_round_trip() {
        let g = make_grid(8, 1.0).unwrap();
        for idx in 0..g.len() {
            let k = g.wavevector(idx);
            assert_eq!(g.index_of(k), Some(idx));
        }
        assert_eq!(g.index_of((4, 0)), None);
        assert_eq!(g.dealias_cutoff(), 2);
    }
}
