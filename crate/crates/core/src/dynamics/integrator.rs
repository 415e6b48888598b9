use crate::error::{Error, Result};
use crate::spectral::{
    advect_scalar_with, advect_vector_with, apply_a, apply_a1, leray_project, rot_scalar, rot_vec,
    ScalarField, VectorField, VelocitySamples,
};

use super::forcing::Forcing;
use super::params::Params;
use super::state::State;

/// Time derivatives of the micropolar system at `state`, given the forcing
/// values `(f, g)` at the state's time.
pub fn rhs(
    state: &State,
    params: &Params,
    f: &VectorField,
    g: &ScalarField,
) -> Result<(VectorField, ScalarField)> {
    if !(state.u.same_grid(f) && state.omega.same_grid(g)) {
        return Err(Error::GridMismatch("state and forcing"));
    }
    let (mut du, mut dw) = explicit_terms(state, params, &VelocitySamples::new(&state.u), f, g);
    du.axpy(-(params.nu + params.nu_r), &apply_a(&state.u));
    dw.axpy(-params.alpha, &apply_a1(&state.omega));
    dw.axpy(-4.0 * params.nu_r, &state.omega);
    Ok((leray_project(&du), dw))
}

/// Nonlinear, coupling and forcing terms: the part advanced explicitly.
/// The velocity slot is not yet projected.
fn explicit_terms(
    state: &State,
    params: &Params,
    samples: &VelocitySamples,
    f: &VectorField,
    g: &ScalarField,
) -> (VectorField, ScalarField) {
    let two_nr = 2.0 * params.nu_r;
    let mut du = advect_vector_with(samples, &state.u).scaled(-1.0);
    let mut dw = advect_scalar_with(samples, &state.omega).scaled(-1.0);
    if two_nr != 0.0 {
        du.axpy(two_nr, &rot_scalar(&state.omega));
        dw.axpy(two_nr, &rot_vec(&state.u));
    }
    du += f;
    dw += g;
    (du, dw)
}

/// Crank–Nicolson / Adams–Bashforth-2 update for a pair whose implicit part
/// is the diagonal `(ν+ν_r)A` on the velocity and `αA₁ + 4ν_r` on the
/// microrotation.
#[derive(Debug, Clone, Copy)]
pub struct Imex {
    pub params: Params,
    pub dt: f64,
}

impl Imex {
    /// Returns `(u, ω)` at the next step. `prev` holds the explicit terms of
    /// the previous step; `None` falls back to forward Euler for them.
    pub fn advance(
        &self,
        u: &VectorField,
        w: &ScalarField,
        now: &(VectorField, ScalarField),
        prev: Option<&(VectorField, ScalarField)>,
    ) -> (VectorField, ScalarField) {
        let (mut nu_, mut nw) = (now.0.clone(), now.1.clone());
        if let Some((pu, pw)) = prev {
            nu_ = &nu_.scaled(1.5) - &pu.scaled(0.5);
            nw = &nw.scaled(1.5) - &pw.scaled(0.5);
        }
        let dt = self.dt;
        let p = self.params;
        let grid = w.grid().clone();
        let half = 0.5 * dt;
        let cn = |x: &ScalarField, n: &ScalarField, rate: &dyn Fn(f64) -> f64| {
            let lhs = x.scale_by(|i| {
                let r = rate(grid.eigenvalue_at(i));
                (1.0 - half * r) / (1.0 + half * r)
            });
            let rhs = n.scale_by(|i| dt / (1.0 + half * rate(grid.eigenvalue_at(i))));
            let mut out = &lhs + &rhs;
            out.dealias();
            out
        };
        let vr = |l: f64| p.velocity_rate(l);
        let wr = |l: f64| p.rotation_rate(l);
        let u_next = VectorField {
            x: cn(&u.x, &nu_.x, &vr),
            y: cn(&u.y, &nu_.y, &vr),
        };
        let mut u_next = leray_project(&u_next);
        u_next.dealias();
        let w_next = cn(w, &nw, &wr);
        (u_next, w_next)
    }
}

/// IMEX integrator carrying the Adams–Bashforth history of one trajectory.
#[derive(Debug, Clone)]
pub struct Stepper {
    imex: Imex,
    /// Advective CFL number; `dt ≤ cfl · dx / max|u|`.
    pub cfl: f64,
    history: Option<(VectorField, ScalarField)>,
}

impl Stepper {
    pub fn new(params: Params, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            imex: Imex { params, dt },
            cfl: 0.5,
            history: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.imex.dt
    }

    pub fn params(&self) -> &Params {
        &self.imex.params
    }

    /// Forget the multistep history; the next step is first order.
    pub fn reset(&mut self) {
        self.history = None;
    }

    /// Advance one step.
    pub fn step(&mut self, state: &State, forcing: &Forcing) -> Result<State> {
        self.step_with(state, forcing, None)
    }

    /// Advance one step with an additional explicit term `(eu, ew)` evaluated
    /// by the caller at `state.t`.
    pub fn step_with(
        &mut self,
        state: &State,
        forcing: &Forcing,
        extra: Option<(&VectorField, &ScalarField)>,
    ) -> Result<State> {
        if **state.grid() != **forcing.grid() {
            return Err(Error::GridMismatch("state and forcing"));
        }
        let dt = self.imex.dt;
        let samples = VelocitySamples::new(&state.u);
        let speed = samples.max_speed();
        let limit = self.cfl * state.grid().spacing() / speed;
        if dt > limit {
            return Err(Error::Cfl {
                t: state.t,
                dt,
                limit,
                speed,
            });
        }
        let (f, g) = forcing.at(state.t);
        let (mut eu, mut ew) = explicit_terms(state, &self.imex.params, &samples, &f, &g);
        if let Some((xu, xw)) = extra {
            if !(xu.same_grid(&state.u) && xw.same_grid(&state.omega)) {
                return Err(Error::GridMismatch("state and extra term"));
            }
            eu += xu;
            ew += xw;
        }
        let now = (leray_project(&eu), ew);
        let (u, omega) = self
            .imex
            .advance(&state.u, &state.omega, &now, self.history.as_ref());
        self.history = Some(now);
        let t = state.t + dt;
        let next = State { u, omega, t };
        if !next.is_finite() {
            return Err(Error::NonFinite { what: "state", t });
        }
        Ok(next)
    }
}

/// Single step from `state` without history.
pub fn step(state: &State, params: &Params, forcing: &Forcing, dt: f64) -> Result<State> {
    Stepper::new(*params, dt)?.step(state, forcing)
}
