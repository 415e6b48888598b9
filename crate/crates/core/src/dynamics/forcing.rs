use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{leray_project, norm_sq, Grid, NormKind, ScalarField, VectorField};

/// How a forcing component varies in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Constant,
    /// `e^{-rate t}`
    Exp { rate: f64 },
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::Exp { rate } => (-rate * t).exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForcingPart {
    pub f: VectorField,
    pub g: ScalarField,
    pub envelope: Envelope,
}

/// External force `f` and moment `g` as a sum of separable parts
/// `envelope(t) · (f, g)`.
#[derive(Debug, Clone)]
pub struct Forcing {
    grid: Arc<Grid>,
    parts: Vec<ForcingPart>,
}

impl Forcing {
    pub fn zero(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            parts: Vec::new(),
        }
    }

    /// Time-independent forcing. `f` is Leray-projected; both are dealiased.
    pub fn steady(f: VectorField, g: ScalarField) -> Result<Self> {
        let mut out = Self::zero(g.grid());
        out.push(f, g, Envelope::Constant)?;
        Ok(out)
    }

    pub fn push(&mut self, f: VectorField, g: ScalarField, envelope: Envelope) -> Result<()> {
        if !(f.x.same_grid(&g) && *g.grid().as_ref() == *self.grid) {
            return Err(Error::GridMismatch("forcing components"));
        }
        if let Envelope::Exp { rate } = envelope {
            if !rate.is_finite() {
                return Err(Error::InvalidParameter(format!("envelope rate {rate}")));
            }
        }
        let mut f = leray_project(&f);
        f.dealias();
        self.parts.push(ForcingPart {
            f,
            g: g.dealiased(),
            envelope,
        });
        Ok(())
    }

    /// Adds `envelope(t)·(f, g)` to a copy of this forcing.
    pub fn with_part(mut self, f: VectorField, g: ScalarField, envelope: Envelope) -> Result<Self> {
        self.push(f, g, envelope)?;
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn parts(&self) -> &[ForcingPart] {
        &self.parts
    }

    pub fn is_steady(&self) -> bool {
        self.parts.iter().all(|p| p.envelope == Envelope::Constant)
    }

    /// `(f(t), g(t))`.
    pub fn at(&self, t: f64) -> (VectorField, ScalarField) {
        let mut f = VectorField::zeros(&self.grid);
        let mut g = ScalarField::zeros(&self.grid);
        for p in &self.parts {
            let s = p.envelope.at(t);
            f.axpy(s, &p.f);
            g.axpy(s, &p.g);
        }
        (f, g)
    }

    /// `|f(t)|² + |g(t)|²`.
    pub fn l2_sq(&self, t: f64) -> f64 {
        let (f, g) = self.at(t);
        norm_sq(&f, NormKind::L2) + norm_sq(&g, NormKind::L2)
    }

    /// `‖f(t)‖²_{H⁻¹} + ‖g(t)‖²_{H⁻¹}`.
    pub fn hminus1_sq(&self, t: f64) -> f64 {
        let (f, g) = self.at(t);
        norm_sq(&f, NormKind::Hminus1) + norm_sq(&g, NormKind::Hminus1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// All magnitude in mode `n`.
    Steady,
    /// Half the squared magnitude in each of modes `n` and `N`.
    TwoScale,
    /// Random weights over modes `n..=N`.
    Band,
    /// Equal weights over modes `1..=N`.
    #[serde(rename = "uniform_N")]
    UniformN,
    LinearIncreasing,
    LinearDecreasing,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 6] = [
        ProfileKind::Steady,
        ProfileKind::TwoScale,
        ProfileKind::Band,
        ProfileKind::UniformN,
        ProfileKind::LinearIncreasing,
        ProfileKind::LinearDecreasing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::Steady => "steady",
            ProfileKind::TwoScale => "two_scale",
            ProfileKind::Band => "band",
            ProfileKind::UniformN => "uniform_N",
            ProfileKind::LinearIncreasing => "linear_increasing",
            ProfileKind::LinearDecreasing => "linear_decreasing",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProfileKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownKind {
                what: "forcing profile",
                value: s.to_string(),
            })
    }
}

/// Parameters of a forcing profile. Mode numbers are 1-based positions in
/// the eigenvalue table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub profile: ProfileKind,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(rename = "N", default = "one")]
    pub big_n: usize,
    /// `|f|`
    pub f_norm: f64,
    /// `|g|`
    #[serde(default)]
    pub g_norm: f64,
}

fn one() -> usize {
    1
}

impl ProfileSpec {
    /// Squared-magnitude fractions `(mode number, weight)`; weights sum to 1.
    /// `Band` draws from `rng`.
    pub fn weights<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<(usize, f64)>> {
        let (n, big) = (self.n, self.big_n);
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        if big == 0 {
            return bad("N must be at least 1".into());
        }
        let nn = big as f64;
        let w = match self.profile {
            ProfileKind::Steady => {
                if n == 0 {
                    return bad("n must be at least 1".into());
                }
                vec![(n, 1.0)]
            }
            ProfileKind::TwoScale => {
                if n == 0 || n >= big {
                    return bad(format!("two_scale needs 1 <= n < N, got n={n}, N={big}"));
                }
                vec![(n, 0.5), (big, 0.5)]
            }
            ProfileKind::Band => {
                if n == 0 || n > big {
                    return bad(format!("band needs 1 <= n <= N, got n={n}, N={big}"));
                }
                let raw: Vec<f64> = (n..=big).map(|_| rng.gen_range(0.5..1.5)).collect();
                let total: f64 = raw.iter().sum();
                (n..=big).zip(raw).map(|(k, r)| (k, r / total)).collect()
            }
            ProfileKind::UniformN => (1..=big).map(|k| (k, 1.0 / nn)).collect(),
            ProfileKind::LinearIncreasing => (1..=big)
                .map(|k| (k, 2.0 * k as f64 / (nn * (nn + 1.0))))
                .collect(),
            ProfileKind::LinearDecreasing => (1..=big)
                .map(|k| (k, 2.0 * (nn + 1.0 - k as f64) / (nn * (nn + 1.0))))
                .collect(),
        };
        Ok(w)
    }

    /// Highest mode number the profile touches.
    pub fn top_mode(&self) -> usize {
        match self.profile {
            ProfileKind::Steady => self.n,
            _ => self.big_n,
        }
    }
}

/// Unit-norm real eigenfunction number `j` (1-based) as coefficient entries
/// `(index, partner, value at index)`.
fn eigen_coefficient(grid: &Grid, j: usize) -> (usize, usize, Complex64) {
    let mode = &grid.modes()[j - 1];
    let amp = 1.0 / (2.0 * grid.area()).sqrt();
    let c = if mode.carries_cosine {
        Complex64::new(amp, 0.0)
    } else {
        Complex64::new(0.0, amp)
    };
    (mode.index, mode.partner, c)
}

/// Builds `f` and `g` whose squared magnitude in each eigenfunction follows
/// the profile law exactly. Signs are drawn from a generator seeded by `seed`.
pub fn make_forcing(spec: &ProfileSpec, grid: &Arc<Grid>, seed: u64) -> Result<Forcing> {
    for (name, v) in [("f_norm", spec.f_norm), ("g_norm", spec.g_norm)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidProfile(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if spec.f_norm == 0.0 && spec.g_norm == 0.0 {
        return Err(Error::InvalidProfile("total magnitude must be positive".into()));
    }
    let top = spec.top_mode();
    let resolved = grid.resolved_prefix();
    if top > resolved {
        return Err(Error::InvalidProfile(format!(
            "mode {top} lies above the dealiasing cutoff ({resolved} resolved modes)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = spec.weights(&mut rng)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut fx = vec![zero; grid.len()];
    let mut fy = vec![zero; grid.len()];
    let mut g = vec![zero; grid.len()];
    let kappa_dir = |k: (i64, i64)| {
        let norm = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
        (k.1 as f64 / norm, -(k.0 as f64) / norm)
    };
    for (j, w) in weights {
        let (i, p, c) = eigen_coefficient(grid, j);
        let sf = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let sg = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let a = sf * spec.f_norm * w.sqrt();
        let b = sg * spec.g_norm * w.sqrt();
        // direction of the wavevector at `i`; the partner uses the same real
        // multiplier so each component stays Hermitian
        let (dx, dy) = kappa_dir(grid.wavevector(i));
        fx[i] += c * (a * dx);
        fy[i] += c * (a * dy);
        g[i] += c * b;
        fx[p] = fx[i].conj();
        fy[p] = fy[i].conj();
        g[p] = g[i].conj();
    }
    let f = VectorField {
        x: ScalarField::from_coeffs(grid, fx)?,
        y: ScalarField::from_coeffs(grid, fy)?,
    };
    let g = ScalarField::from_coeffs(grid, g)?;
    Forcing::steady(f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{galerkin_p, galerkin_p_scalar, make_grid};

    fn mode_energy_f(f: &VectorField, j: usize) -> f64 {
        norm_sq(&galerkin_p(f, j).unwrap(), NormKind::L2)
            - norm_sq(&galerkin_p(f, j - 1).unwrap(), NormKind::L2)
    }

    fn mode_energy_g(g: &ScalarField, j: usize) -> f64 {
        norm_sq(&galerkin_p_scalar(g, j).unwrap(), NormKind::L2)
            - norm_sq(&galerkin_p_scalar(g, j - 1).unwrap(), NormKind::L2)
    }

    fn spec(profile: ProfileKind, n: usize, big_n: usize, f2: f64) -> ProfileSpec {
        ProfileSpec {
            profile,
            n,
            big_n,
            f_norm: f2.sqrt(),
            g_norm: 0.5 * f2.sqrt(),
        }
    }

    #[test]
    fn linear_increasing_three_modes() {
        let g = make_grid(16, 2.0 * std::f64::consts::PI).unwrap();
        let forcing = make_forcing(&spec(ProfileKind::LinearIncreasing, 1, 3, 12.0), &g, 3).unwrap();
        let (f, _) = forcing.at(0.0);
        for k in 1..=3 {
            assert!((mode_energy_f(&f, k) - 2.0 * k as f64).abs() < 1e-13);
        }
        assert!(mode_energy_f(&f, 4).abs() < 1e-14);
    }

    #[test]
    fn two_scale_halves() {
        let g = make_grid(32, 1.0).unwrap();
        let forcing = make_forcing(&spec(ProfileKind::TwoScale, 2, 9, 2.0), &g, 8).unwrap();
        let (f, gg) = forcing.at(0.0);
        assert!((mode_energy_f(&f, 2) - 1.0).abs() < 1e-14);
        assert!((mode_energy_f(&f, 9) - 1.0).abs() < 1e-14);
        assert!((mode_energy_g(&gg, 9) - 0.25).abs() < 1e-14);
        assert!((norm_sq(&f, NormKind::L2) - 2.0).abs() < 1e-14);
        assert!(f.divergence_residual() < 1e-15);
    }

    #[test]
    fn uniform_single_mode() {
        let g = make_grid(16, 1.0).unwrap();
        let forcing = make_forcing(&spec(ProfileKind::UniformN, 1, 1, 3.0), &g, 0).unwrap();
        let (f, _) = forcing.at(0.0);
        assert!((mode_energy_f(&f, 1) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn every_profile_matches_its_law() {
        let g = make_grid(32, 2.0 * std::f64::consts::PI).unwrap();
        for kind in ProfileKind::ALL {
            let s = spec(kind, 3, 17, 5.0);
            let forcing = make_forcing(&s, &g, 42).unwrap();
            let (f, gg) = forcing.at(0.0);
            let w = s.weights(&mut ChaCha8Rng::seed_from_u64(42)).unwrap();
            for (j, wj) in w {
                assert!((mode_energy_f(&f, j) - 5.0 * wj).abs() < 1e-14, "{kind} mode {j}");
                assert!((mode_energy_g(&gg, j) - 1.25 * wj).abs() < 1e-14, "{kind} mode {j}");
            }
        }
    }

    #[test]
    fn rejects_bad_profiles() {
        let g = make_grid(8, 1.0).unwrap();
        assert!(make_forcing(&spec(ProfileKind::TwoScale, 3, 3, 1.0), &g, 0).is_err());
        assert!(make_forcing(&spec(ProfileKind::UniformN, 1, 0, 1.0), &g, 0).is_err());
        assert!(make_forcing(&spec(ProfileKind::UniformN, 1, 1000, 1.0), &g, 0).is_err());
        assert!(make_forcing(&spec(ProfileKind::Steady, 1, 1, 0.0), &g, 0).is_err());
        assert!("sawtooth".parse::<ProfileKind>().is_err());
        assert_eq!("uniform_N".parse::<ProfileKind>().unwrap(), ProfileKind::UniformN);
    }

    #[test]
    fn envelope_parts_add() {
        let g = make_grid(8, 1.0).unwrap();
        let base = make_forcing(&spec(ProfileKind::Steady, 1, 1, 1.0), &g, 1).unwrap();
        let (f, gg) = base.at(0.0);
        let decaying = base
            .clone()
            .with_part(f.clone(), gg.clone(), Envelope::Exp { rate: 2.0 })
            .unwrap();
        assert!(!decaying.is_steady());
        let e = decaying.l2_sq(1.0);
        let expect = base.l2_sq(0.0) * (1.0 + (-2.0f64).exp()).powi(2);
        assert!((e - expect).abs() < 1e-14 * expect);
    }
}
