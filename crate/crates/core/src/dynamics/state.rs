use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::spectral::{leray_project, norm_sq, Grid, NormKind, ScalarField, VectorField};

/// Velocity, microrotation and time.
#[derive(Debug, Clone)]
pub struct State {
    pub u: VectorField,
    pub omega: ScalarField,
    pub t: f64,
}

impl State {
    /// Checks the grid, projects `u` onto solenoidal fields and dealiases.
    pub fn new(u: VectorField, omega: ScalarField, t: f64) -> Result<Self> {
        if !u.x.same_grid(&omega) {
            return Err(Error::GridMismatch("velocity and microrotation"));
        }
        let mut u = leray_project(&u);
        u.dealias();
        Ok(Self {
            u,
            omega: omega.dealiased(),
            t,
        })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            u: VectorField::zeros(grid),
            omega: ScalarField::zeros(grid),
            t: 0.0,
        }
    }

    /// Random solenoidal velocity and random microrotation supported on
    /// `|k| ≤ kmax` (clipped to the dealiasing cutoff), each scaled so that
    /// `|u|² = |ω|² = energy / 2`.
    pub fn random<R: Rng + ?Sized>(
        grid: &Arc<Grid>,
        kmax: i64,
        energy: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(energy.is_finite() && energy >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial energy must be nonnegative, got {energy}"
            )));
        }
        let kmax = kmax.min(grid.dealias_cutoff());
        if kmax < 1 {
            return Err(Error::InvalidParameter("initial band is empty".into()));
        }
        let disc = |f: ScalarField| {
            let g = Arc::clone(f.grid());
            f.map_coeffs(|i, c| {
                let (k1, k2) = g.wavevector(i);
                if k1 * k1 + k2 * k2 <= kmax * kmax {
                    c
                } else {
                    num_complex::Complex64::new(0.0, 0.0)
                }
            })
        };
        let psi = disc(ScalarField::random(grid, kmax, rng));
        let u = VectorField {
            x: psi.derivative(1),
            y: psi.derivative(0).scaled(-1.0),
        };
        let omega = disc(ScalarField::random(grid, kmax, rng));
        let target = (energy / 2.0).sqrt();
        let su = target / norm_sq(&u, NormKind::L2).sqrt();
        let so = target / norm_sq(&omega, NormKind::L2).sqrt();
        State::new(u.scaled(su), omega.scaled(so), 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.omega.grid()
    }

    /// `|u|² + |ω|²`.
    pub fn energy(&self) -> f64 {
        norm_sq(&self.u, NormKind::L2) + norm_sq(&self.omega, NormKind::L2)
    }

    /// `‖u‖² + ‖ω‖²`.
    pub fn h1_energy(&self) -> f64 {
        norm_sq(&self.u, NormKind::H1) + norm_sq(&self.omega, NormKind::H1)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.omega.is_finite()
    }
}
