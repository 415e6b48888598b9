//! Linear differential operators, Galerkin projectors and pseudo-spectral
//! products.

use num_complex::Complex64;

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};

/// Orthogonal projection onto solenoidal fields, `I - kkᵀ/|k|²` per mode.
pub fn leray_project(u: &VectorField) -> VectorField {
    let g = u.grid();
    let mut x = u.x.coeffs().to_vec();
    let mut y = u.y.coeffs().to_vec();
    for i in 0..g.len() {
        let (k1, k2) = g.wavevector(i);
        let k2sum = (k1 * k1 + k2 * k2) as f64;
        if k2sum == 0.0 {
            continue;
        }
        let (k1, k2) = (k1 as f64, k2 as f64);
        let dot = (x[i] * k1 + y[i] * k2) / k2sum;
        x[i] -= dot * k1;
        y[i] -= dot * k2;
    }
    let grid = g.clone();
    VectorField {
        x: ScalarField::from_coeffs(&grid, x).expect("length preserved"),
        y: ScalarField::from_coeffs(&grid, y).expect("length preserved"),
    }
}

/// Stokes operator; on the periodic torus it is `-Δ` acting componentwise.
pub fn apply_a(u: &VectorField) -> VectorField {
    VectorField {
        x: apply_a1(&u.x),
        y: apply_a1(&u.y),
    }
}

/// `A₁ = -Δ` on zero-mean scalars.
pub fn apply_a1(w: &ScalarField) -> ScalarField {
    let g = w.grid().clone();
    w.scale_by(|i| g.eigenvalue_at(i))
}

/// `A₁⁻¹` on zero-mean scalars.
pub fn apply_a1_inverse(w: &ScalarField) -> ScalarField {
    let g = w.grid().clone();
    w.scale_by(|i| {
        let l = g.eigenvalue_at(i);
        if l == 0.0 {
            0.0
        } else {
            1.0 / l
        }
    })
}

pub fn apply_a_inverse(u: &VectorField) -> VectorField {
    VectorField {
        x: apply_a1_inverse(&u.x),
        y: apply_a1_inverse(&u.y),
    }
}

/// `rot u = ∂u₂/∂x₁ - ∂u₁/∂x₂`.
pub fn rot_vec(u: &VectorField) -> ScalarField {
    let mut r = u.y.derivative(0);
    r.axpy(-1.0, &u.x.derivative(1));
    r
}

/// `rot ω = (∂ω/∂x₂, -∂ω/∂x₁)`.
pub fn rot_scalar(w: &ScalarField) -> VectorField {
    VectorField {
        x: w.derivative(1),
        y: w.derivative(0).scaled(-1.0),
    }
}

fn check_mode_count(grid: &Grid, m: usize) -> Result<()> {
    if m > grid.mode_count() {
        return Err(Error::ModeOutOfRange {
            m,
            max: grid.mode_count(),
        });
    }
    Ok(())
}

/// How much of a coefficient pair `P_m` keeps at one flat index.
#[derive(Clone, Copy, PartialEq)]
enum Keep {
    All,
    Real,
    Imag,
    Nothing,
}

fn keep_table(grid: &Grid, m: usize) -> Vec<Keep> {
    let mut keep = vec![Keep::Nothing; grid.len()];
    for i in 0..grid.len() {
        let Some(r) = grid.mode_rank(i) else { continue };
        let p = grid.mode_rank(grid.partner_index(i)).expect("partner ranked");
        let mode = &grid.modes()[r];
        // the cosine carrier and the sine carrier are the two members of the
        // pair; each may independently fall inside the first m entries
        let (cos_rank, sin_rank) = if mode.carries_cosine { (r, p) } else { (p, r) };
        keep[i] = match (cos_rank < m, sin_rank < m) {
            (true, true) => Keep::All,
            (true, false) => Keep::Real,
            (false, true) => Keep::Imag,
            (false, false) => Keep::Nothing,
        };
    }
    keep
}

fn project_scalar(w: &ScalarField, keep: &[Keep], complement: bool) -> ScalarField {
    let zero = Complex64::new(0.0, 0.0);
    w.map_coeffs(|i, c| {
        let kept = match keep[i] {
            Keep::All => c,
            Keep::Real => Complex64::new(c.re, 0.0),
            Keep::Imag => Complex64::new(0.0, c.im),
            Keep::Nothing => zero,
        };
        if complement {
            c - kept
        } else {
            kept
        }
    })
}

/// Projection onto the first `m` entries of the eigenvalue table.
pub fn galerkin_p_scalar(w: &ScalarField, m: usize) -> Result<ScalarField> {
    check_mode_count(w.grid(), m)?;
    Ok(project_scalar(w, &keep_table(w.grid(), m), false))
}

/// `Q_m = I - P_m`.
pub fn galerkin_q_scalar(w: &ScalarField, m: usize) -> Result<ScalarField> {
    check_mode_count(w.grid(), m)?;
    Ok(project_scalar(w, &keep_table(w.grid(), m), true))
}

pub fn galerkin_p(u: &VectorField, m: usize) -> Result<VectorField> {
    check_mode_count(u.grid(), m)?;
    let keep = keep_table(u.grid(), m);
    Ok(VectorField {
        x: project_scalar(&u.x, &keep, false),
        y: project_scalar(&u.y, &keep, false),
    })
}

pub fn galerkin_q(u: &VectorField, m: usize) -> Result<VectorField> {
    check_mode_count(u.grid(), m)?;
    let keep = keep_table(u.grid(), m);
    Ok(VectorField {
        x: project_scalar(&u.x, &keep, true),
        y: project_scalar(&u.y, &keep, true),
    })
}

/// Precomputed `P_m` for repeated application in time loops.
#[derive(Clone)]
pub struct GalerkinProjector {
    keep: Vec<Keep>,
    m: usize,
}

impl GalerkinProjector {
    pub fn new(grid: &Grid, m: usize) -> Result<Self> {
        check_mode_count(grid, m)?;
        Ok(Self {
            keep: keep_table(grid, m),
            m,
        })
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn p_scalar(&self, w: &ScalarField) -> ScalarField {
        project_scalar(w, &self.keep, false)
    }

    pub fn q_scalar(&self, w: &ScalarField) -> ScalarField {
        project_scalar(w, &self.keep, true)
    }

    pub fn p(&self, u: &VectorField) -> VectorField {
        VectorField {
            x: self.p_scalar(&u.x),
            y: self.p_scalar(&u.y),
        }
    }

    pub fn q(&self, u: &VectorField) -> VectorField {
        VectorField {
            x: self.q_scalar(&u.x),
            y: self.q_scalar(&u.y),
        }
    }
}

/// Physical-space samples of a velocity field and its gradient.
pub(crate) struct VelocitySamples {
    pub u: [Vec<f64>; 2],
}

impl VelocitySamples {
    pub fn new(u: &VectorField) -> Self {
        Self {
            u: [u.x.samples(), u.y.samples()],
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.u[0]
            .iter()
            .zip(&self.u[1])
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Dealiased `(u·∇)w` for a scalar `w`, given physical samples of `u`.
pub(crate) fn advect_scalar_with(u: &VelocitySamples, w: &ScalarField) -> ScalarField {
    let g = w.grid();
    let d1 = w.derivative(0).samples();
    let d2 = w.derivative(1).samples();
    let prod: Vec<f64> = (0..g.len())
        .map(|i| u.u[0][i] * d1[i] + u.u[1][i] * d2[i])
        .collect();
    ScalarField::from_samples_unchecked(g, &prod).dealiased()
}

/// Dealiased `(u·∇)v`.
pub(crate) fn advect_vector_with(u: &VelocitySamples, v: &VectorField) -> VectorField {
    VectorField {
        x: advect_scalar_with(u, &v.x),
        y: advect_scalar_with(u, &v.y),
    }
}

/// `(u·∇)w`, dealiased with the 2/3 rule.
pub fn advect_scalar(u: &VectorField, w: &ScalarField) -> Result<ScalarField> {
    if !u.x.same_grid(w) {
        return Err(Error::GridMismatch("advecting velocity and scalar"));
    }
    Ok(advect_scalar_with(&VelocitySamples::new(u), w))
}

/// `(u·∇)v`, dealiased with the 2/3 rule.
pub fn advect_vector(u: &VectorField, v: &VectorField) -> Result<VectorField> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch("advecting velocity and vector"));
    }
    Ok(advect_vector_with(&VelocitySamples::new(u), v))
}
