use std::sync::Arc;

use rand::Rng;

use crate::dynamics::{Params, State};
use crate::error::{Error, Result};
use crate::spectral::{
    apply_a, apply_a1, leray_project, norm_sq, rot_scalar, rot_vec, Grid, NormKind, ScalarField,
    VectorField,
};

/// Perturbation pair `(V, Z)` with divergence-free `V`.
#[derive(Debug, Clone)]
pub struct Tangent {
    pub v: VectorField,
    pub z: ScalarField,
}

impl Tangent {
    /// Projects `v` onto divergence-free fields and dealiases both parts.
    pub fn new(v: VectorField, z: ScalarField) -> Result<Self> {
        if !v.x.same_grid(&z) {
            return Err(Error::GridMismatch("tangent velocity and microrotation"));
        }
        let mut v = leray_project(&v);
        v.dealias();
        Ok(Self { v, z: z.dealiased() })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            v: VectorField::zeros(grid),
            z: ScalarField::zeros(grid),
        }
    }

    /// Random pair over the dealiased band; `z = 0` when `velocity_only`.
    pub fn random<R: Rng + ?Sized>(grid: &Arc<Grid>, velocity_only: bool, rng: &mut R) -> Self {
        let k = grid.dealias_cutoff();
        let v = VectorField::random_solenoidal(grid, k, rng);
        let z = if velocity_only {
            ScalarField::zeros(grid)
        } else {
            ScalarField::random(grid, k, rng)
        };
        Self::new(v, z).expect("fields share the grid")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.z.grid()
    }

    /// Product inner product `[φ, ψ] = (v, v') + (z, z')`.
    pub fn inner(&self, other: &Tangent) -> f64 {
        self.v.inner(&other.v) + self.z.inner(&other.z)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `[[φ]]² = ‖v‖² + ‖z‖²`.
    pub fn h1_sq(&self) -> f64 {
        norm_sq(&self.v, NormKind::H1) + norm_sq(&self.z, NormKind::H1)
    }

    pub fn axpy(&mut self, a: f64, x: &Tangent) {
        self.v.axpy(a, &x.v);
        self.z.axpy(a, &x.z);
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            v: self.v.scaled(a),
            z: self.z.scaled(a),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.z.is_finite()
    }
}

/// Physical samples of the base velocity and of the gradients of `u` and `ω`.
pub(crate) struct BaseSamples {
    u: [Vec<f64>; 2],
    /// `grad_u[c][a] = ∂_a u_c`
    grad_u: [[Vec<f64>; 2]; 2],
    grad_w: [Vec<f64>; 2],
}

impl BaseSamples {
    pub fn new(base: &State) -> Self {
        let grad = |f: &ScalarField| [f.derivative(0).samples(), f.derivative(1).samples()];
        Self {
            u: [base.u.x.samples(), base.u.y.samples()],
            grad_u: [grad(&base.u.x), grad(&base.u.y)],
            grad_w: grad(&base.omega),
        }
    }
}

/// Linearized advection and coupling terms, the part the tangent integrator
/// treats explicitly. The velocity slot is projected.
pub(crate) fn explicit_tangent(
    base: &BaseSamples,
    phi: &Tangent,
    params: &Params,
    velocity_only: bool,
) -> (VectorField, ScalarField) {
    let grid = phi.grid();
    let len = grid.len();
    let v = [phi.v.x.samples(), phi.v.y.samples()];
    let mut comps = [&phi.v.x, &phi.v.y].map(|vc| {
        let d = [vc.derivative(0).samples(), vc.derivative(1).samples()];
        (0..len)
            .map(|i| base.u[0][i] * d[0][i] + base.u[1][i] * d[1][i])
            .collect::<Vec<f64>>()
    });
    for (c, out) in comps.iter_mut().enumerate() {
        for i in 0..len {
            out[i] += v[0][i] * base.grad_u[c][0][i] + v[1][i] * base.grad_u[c][1][i];
            out[i] = -out[i];
        }
    }
    let [cx, cy] = comps;
    let mut dv = VectorField {
        x: ScalarField::from_samples_unchecked(grid, &cx).dealiased(),
        y: ScalarField::from_samples_unchecked(grid, &cy).dealiased(),
    };
    let two_nr = 2.0 * params.nu_r;
    if velocity_only {
        return (leray_project(&dv), ScalarField::zeros(grid));
    }
    let dz_s = [phi.z.derivative(0).samples(), phi.z.derivative(1).samples()];
    let adv: Vec<f64> = (0..len)
        .map(|i| {
            -(base.u[0][i] * dz_s[0][i]
                + base.u[1][i] * dz_s[1][i]
                + v[0][i] * base.grad_w[0][i]
                + v[1][i] * base.grad_w[1][i])
        })
        .collect();
    let mut dz = ScalarField::from_samples_unchecked(grid, &adv).dealiased();
    if two_nr != 0.0 {
        dv.axpy(two_nr, &rot_scalar(&phi.z));
        dz.axpy(two_nr, &rot_vec(&phi.v));
    }
    (leray_project(&dv), dz)
}

/// Linearization of the micropolar vector field about `base`, applied to
/// `phi`:
///
/// `dV/dt = Leray[−(ν+ν_r)AV − (u·∇)V − (V·∇)u + 2ν_r rot Z]`,
/// `dZ/dt = −αA₁Z − (u·∇)Z − (V·∇)ω − 4ν_r Z + 2ν_r rot V`.
pub fn tangent_rhs(base: &State, phi: &Tangent, params: &Params) -> Result<Tangent> {
    if !base.u.same_grid(&phi.v) {
        return Err(Error::GridMismatch("base state and perturbation"));
    }
    let (mut dv, mut dz) = explicit_tangent(&BaseSamples::new(base), phi, params, false);
    dv.axpy(-(params.nu + params.nu_r), &apply_a(&phi.v));
    dz.axpy(-params.alpha, &apply_a1(&phi.z));
    dz.axpy(-4.0 * params.nu_r, &phi.z);
    Ok(Tangent { v: dv, z: dz })
}
