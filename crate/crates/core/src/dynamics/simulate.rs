use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{norm_sq, NormKind};

use super::forcing::Forcing;
use super::integrator::Stepper;
use super::params::Params;
use super::state::State;

/// Squared norms recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// `|u|²`
    pub u_l2: f64,
    /// `|ω|²`
    pub omega_l2: f64,
    /// `‖u‖²`
    pub u_h1: f64,
    /// `‖ω‖²`
    pub omega_h1: f64,
    /// `|Au|²`
    pub u_da: f64,
    /// `|A₁ω|²`
    pub omega_da: f64,
    /// `|f|²`
    pub f_l2: f64,
    /// `|g|²`
    pub g_l2: f64,
    /// `‖f‖²_{H⁻¹}`
    pub f_hm1: f64,
    /// `‖g‖²_{H⁻¹}`
    pub g_hm1: f64,
}

impl Sample {
    pub fn of(state: &State, forcing: &Forcing) -> Self {
        let (f, g) = forcing.at(state.t);
        Self {
            t: state.t,
            u_l2: norm_sq(&state.u, NormKind::L2),
            omega_l2: norm_sq(&state.omega, NormKind::L2),
            u_h1: norm_sq(&state.u, NormKind::H1),
            omega_h1: norm_sq(&state.omega, NormKind::H1),
            u_da: norm_sq(&state.u, NormKind::DA),
            omega_da: norm_sq(&state.omega, NormKind::DA),
            f_l2: norm_sq(&f, NormKind::L2),
            g_l2: norm_sq(&g, NormKind::L2),
            f_hm1: norm_sq(&f, NormKind::Hminus1),
            g_hm1: norm_sq(&g, NormKind::Hminus1),
        }
    }

    /// `|u|² + |ω|²`
    pub fn energy(&self) -> f64 {
        self.u_l2 + self.omega_l2
    }

    /// `‖u‖² + ‖ω‖²`
    pub fn h1(&self) -> f64 {
        self.u_h1 + self.omega_h1
    }

    /// `|Au|² + |A₁ω|²`
    pub fn da(&self) -> f64 {
        self.u_da + self.omega_da
    }

    /// `|f|² + |g|²`
    pub fn forcing_l2(&self) -> f64 {
        self.f_l2 + self.g_l2
    }

    /// `‖f‖²_{H⁻¹} + ‖g‖²_{H⁻¹}`
    pub fn forcing_hm1(&self) -> f64 {
        self.f_hm1 + self.g_hm1
    }
}

/// Called on every sampled state.
pub trait Observer {
    fn observe(&mut self, state: &State, sample: &Sample) -> Result<()>;
}

impl<F: FnMut(&State, &Sample) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &State, sample: &Sample) -> Result<()> {
        self(state, sample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Sample every `stride` steps.
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl SimConfig {
    /// Number of fixed steps covering `[0, t_end]`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("stride must be at least 1".into()));
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: State,
}

/// Fixed-step integration from `initial`. Samples are taken at the initial
/// state and then every `stride` steps; a zero-length run records nothing.
pub fn simulate(
    initial: &State,
    params: &Params,
    forcing: &Forcing,
    config: &SimConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let steps = config.steps()?;
    let mut samples = Vec::new();
    let mut state = initial.clone();
    if steps == 0 {
        return Ok(Trajectory {
            samples,
            final_state: state,
        });
    }
    let mut stepper = Stepper::new(*params, config.dt)?;
    let mut record = |state: &State, samples: &mut Vec<Sample>| -> Result<()> {
        let s = Sample::of(state, forcing);
        for o in observers.iter_mut() {
            o.observe(state, &s)?;
        }
        samples.push(s);
        Ok(())
    };
    record(&state, &mut samples)?;
    for k in 1..=steps {
        state = stepper.step(&state, forcing)?;
        if k % config.stride == 0 {
            record(&state, &mut samples)?;
        }
    }
    Ok(Trajectory {
        samples,
        final_state: state,
    })
}
