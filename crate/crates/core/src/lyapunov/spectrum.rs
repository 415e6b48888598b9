use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Forcing, Imex, Params, State, Stepper};
use crate::error::{Error, Result};
use crate::estimates::{kappa1, kappa2, Constants};
use crate::spectral::{norm_sq, rot_scalar, trilinear_b, trilinear_b1, NormKind, ScalarField, VectorField};

use super::basis::{kaplan_yorke, lieb_thirring_check, orthonormalize};
use super::tangent::{explicit_tangent, BaseSamples, Tangent};

/// Base trajectory plus an orthonormal tangent family.
#[derive(Debug, Clone)]
pub struct TangentState {
    pub base: State,
    pub basis: Vec<Tangent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConfig {
    /// Number of exponents `N`.
    pub exponents: usize,
    pub t_end: f64,
    pub dt: f64,
    /// Time between re-orthonormalizations; a multiple of `dt`.
    pub reorth_interval: f64,
    /// Restrict perturbations to `Z = 0`. With `ν_r = 0` this is the
    /// velocity block of the triangular tangent system.
    #[serde(default)]
    pub velocity_only: bool,
    /// Seed of the initial tangent family.
    #[serde(default)]
    pub seed: u64,
}

impl LyapunovConfig {
    /// Re-orthonormalization every 10 steps.
    pub fn new(exponents: usize, t_end: f64, dt: f64) -> Self {
        Self {
            exponents,
            t_end,
            dt,
            reorth_interval: 10.0 * dt,
            velocity_only: false,
            seed: 0,
        }
    }

    /// `(steps, steps per re-orthonormalization)`.
    fn validate(&self, state: &State) -> Result<(usize, usize)> {
        if !(self.dt.is_finite() && self.dt > 0.0 && self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter("t_end and dt must be positive".into()));
        }
        let ratio = self.reorth_interval / self.dt;
        let every = ratio.round();
        if !(every >= 1.0 && (ratio - every).abs() <= 1e-9 * ratio) {
            return Err(Error::InvalidParameter(format!(
                "re-orthonormalization interval {} is not a multiple of dt {}",
                self.reorth_interval, self.dt
            )));
        }
        let budget = tangent_dimension(state, self.velocity_only);
        if self.exponents == 0 || self.exponents > budget {
            return Err(Error::ModeOutOfRange {
                m: self.exponents,
                max: budget,
            });
        }
        Ok(((self.t_end / self.dt).round() as usize, every as usize))
    }
}

/// Real dimension of the resolved tangent space.
fn tangent_dimension(state: &State, velocity_only: bool) -> usize {
    let grid = state.grid();
    let per_field = grid.resolved_prefix();
    if velocity_only {
        per_field
    } else {
        2 * per_field
    }
}

/// Term-by-term trace `Σ[F′(ū)φ_j, φ_j] = −Σa − ΣB − ΣR` for one
/// orthonormal family, with the ingredients of the pointwise trace bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceTerms {
    /// `Σ (ν+ν_r)‖v_j‖² + α‖z_j‖²`
    pub a: f64,
    /// `Σ b(v_j, u, v_j) + b₁(v_j, ω, z_j)`
    pub b: f64,
    /// `Σ −4ν_r(rot z_j, v_j) + 4ν_r|z_j|²`
    pub r: f64,
    pub trace: f64,
    /// `Σ[[φ_j]]²`
    pub h1_sum: f64,
    /// `|ρ|²`
    pub rho_sq: f64,
    /// `[[ū]]²`
    pub base_h1: f64,
}

pub fn trace_terms(base: &State, basis: &[Tangent], params: &Params) -> Result<TraceTerms> {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut r = 0.0;
    for phi in basis {
        if !phi.v.same_grid(&base.u) {
            return Err(Error::GridMismatch("base state and tangent family"));
        }
        a += (params.nu + params.nu_r) * norm_sq(&phi.v, NormKind::H1)
            + params.alpha * norm_sq(&phi.z, NormKind::H1);
        b += trilinear_b(&phi.v, &base.u, &phi.v)? + trilinear_b1(&phi.v, &base.omega, &phi.z)?;
        r += -4.0 * params.nu_r * rot_scalar(&phi.z).inner(&phi.v)
            + 4.0 * params.nu_r * norm_sq(&phi.z, NormKind::L2);
    }
    let lt = lieb_thirring_check(basis)?;
    Ok(TraceTerms {
        a,
        b,
        r,
        trace: -a - b - r,
        h1_sum: lt.h1_sum,
        rho_sq: lt.rho_sq,
        base_h1: base.h1_energy(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub terms: TraceTerms,
    /// Running time average of the trace since the first sample.
    pub q_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// Descending.
    pub exponents: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `None` when no partial sum turns negative.
    pub kaplan_yorke: Option<f64>,
    pub trace: Vec<TraceSample>,
    /// Time average of the sampled trace over the run.
    pub trace_average: f64,
    pub exponent_sum: f64,
    /// Largest change of any exponent between the half-way estimate and
    /// the final one, relative to the largest exponent magnitude.
    pub drift: f64,
    /// `drift < 1%`.
    pub settled: bool,
    /// Largest Lieb–Thirring ratio seen along the run.
    pub c0_fitted: f64,
    pub velocity_only: bool,
    pub t_span: f64,
}

/// Co-integrates the base trajectory and `N` tangent pairs, re-orthonormalizing
/// at each interval. Exponents are time averages of the log diagonal of the
/// Gram–Schmidt factors.
pub fn lyapunov_spectrum(
    initial: &State,
    params: &Params,
    forcing: &Forcing,
    config: &LyapunovConfig,
) -> Result<LyapunovReport> {
    let (steps, every) = config.validate(initial)?;
    let grid = initial.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let basis: Vec<Tangent> = (0..config.exponents)
        .map(|_| Tangent::random(&grid, config.velocity_only, &mut rng))
        .collect();
    let mut state = TangentState {
        base: initial.clone(),
        basis,
    };
    orthonormalize(&mut state.basis)?;
    let imex = Imex {
        params: *params,
        dt: config.dt,
    };
    let mut stepper = Stepper::new(*params, config.dt)?;
    let mut history: Option<Vec<(VectorField, ScalarField)>> = None;
    let n = config.exponents;
    let mut log_sums = vec![0.0; n];
    let mut half: Option<(f64, Vec<f64>)> = None;
    let t0 = initial.t;
    let mut trace = vec![TraceSample {
        t: t0,
        terms: trace_terms(&state.base, &state.basis, params)?,
        q_n: 0.0,
    }];
    trace[0].q_n = trace[0].terms.trace;
    let mut integral = 0.0;

    for step in 1..=steps {
        let samples = BaseSamples::new(&state.base);
        let now: Vec<(VectorField, ScalarField)> = state
            .basis
            .par_iter()
            .map(|phi| explicit_tangent(&samples, phi, params, config.velocity_only))
            .collect();
        let prev = history.as_ref();
        state.basis = state
            .basis
            .par_iter()
            .enumerate()
            .map(|(j, phi)| {
                let (v, z) = imex.advance(&phi.v, &phi.z, &now[j], prev.map(|p| &p[j]));
                Tangent { v, z }
            })
            .collect();
        history = Some(now);
        state.base = stepper.step(&state.base, forcing)?;
        if !state.basis.iter().all(Tangent::is_finite) {
            return Err(Error::NonFinite {
                what: "tangent family",
                t: state.base.t,
            });
        }
        if step % every != 0 && step != steps {
            continue;
        }
        let r = orthonormalize(&mut state.basis)?;
        for (j, s) in log_sums.iter_mut().enumerate() {
            *s += r[(j, j)].ln();
        }
        history = history.map(|h| transform_history(h, &r));
        let terms = trace_terms(&state.base, &state.basis, params)?;
        let last = trace.last().expect("seeded with the initial sample");
        integral += 0.5 * (last.terms.trace + terms.trace) * (state.base.t - last.t);
        trace.push(TraceSample {
            t: state.base.t,
            terms,
            q_n: integral / (state.base.t - t0),
        });
        if half.is_none() && 2 * step >= steps {
            half = Some((state.base.t - t0, log_sums.clone()));
        }
    }

    let span = state.base.t - t0;
    let mut exponents: Vec<f64> = log_sums.iter().map(|s| s / span).collect();
    let drift = match half {
        Some((th, sums)) if th < span => {
            let mut early: Vec<f64> = sums.iter().map(|s| s / th).collect();
            early.sort_by(|a, b| b.total_cmp(a));
            let mut late = exponents.clone();
            late.sort_by(|a, b| b.total_cmp(a));
            let scale = late.iter().map(|m| m.abs()).fold(0.0, f64::max);
            let worst = early.iter().zip(&late).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if scale > 0.0 {
                worst / scale
            } else {
                worst
            }
        }
        _ => f64::INFINITY,
    };
    exponents.sort_by(|a, b| b.total_cmp(a));
    let partial_sums: Vec<f64> = exponents
        .iter()
        .scan(0.0, |acc, m| {
            *acc += m;
            Some(*acc)
        })
        .collect();
    let c0_fitted = trace
        .iter()
        .map(|s| s.terms.rho_sq / s.terms.h1_sum)
        .fold(0.0, f64::max);
    Ok(LyapunovReport {
        kaplan_yorke: kaplan_yorke(&exponents),
        exponent_sum: partial_sums.last().copied().unwrap_or(0.0),
        partial_sums,
        exponents,
        trace_average: integral / span,
        trace,
        drift,
        settled: drift < 0.01,
        c0_fitted,
        velocity_only: config.velocity_only,
        t_span: span,
    })
}

/// Trace series along the same co-integration as [`lyapunov_spectrum`].
pub fn trace_pn(
    initial: &State,
    params: &Params,
    forcing: &Forcing,
    config: &LyapunovConfig,
) -> Result<(Vec<TraceSample>, f64)> {
    let report = lyapunov_spectrum(initial, params, forcing, config)?;
    Ok((report.trace, report.trace_average))
}

/// After `Φ = Q R` the explicit terms of the previous step, which are linear
/// in the family, become `E(Φ) R⁻¹`.
fn transform_history(
    history: Vec<(VectorField, ScalarField)>,
    r: &DMatrix<f64>,
) -> Vec<(VectorField, ScalarField)> {
    let n = history.len();
    let inv = r
        .clone()
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .expect("nonzero diagonal after Gram–Schmidt");
    (0..n)
        .map(|j| {
            let mut v = history[0].0.scaled(inv[(0, j)]);
            let mut z = history[0].1.scaled(inv[(0, j)]);
            for i in 1..=j {
                v.axpy(inv[(i, j)], &history[i].0);
                z.axpy(inv[(i, j)], &history[i].1);
            }
            (v, z)
        })
        .collect()
}

/// Per-sample and running-average checks of the trace bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceAudit {
    /// Smallest `bound − trace` of `trace ≤ −k₁Σ[[φ_j]]² + √2|ρ|[[ū]]`.
    pub pointwise_margin: f64,
    pub pointwise_holds: bool,
    pub c0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// `−κ₁N² + κ₂`
    pub average_bound: f64,
    /// Largest running average `q_N`.
    pub average_max: f64,
    pub average_holds: bool,
}

/// Audit a report against the trace bounds with the Lieb–Thirring constant
/// `c0` and forcing size `g_sq = |f|² + |g|²`.
pub fn audit_trace(report: &LyapunovReport, k: &Constants, c0: f64, g_sq: f64) -> TraceAudit {
    let pointwise_margin = report
        .trace
        .iter()
        .map(|s| {
            let t = &s.terms;
            let bound = -k.k1() * t.h1_sum + (2.0 * t.rho_sq * t.base_h1).sqrt();
            bound - t.trace
        })
        .fold(f64::INFINITY, f64::min);
    let mut kc = k.clone();
    kc.c0 = c0;
    let (k1, k2) = (kappa1(&kc), kappa2(&kc, g_sq));
    let n = report.exponents.len() as f64;
    let average_bound = -k1 * n * n + k2;
    let average_max = report.trace.iter().map(|s| s.q_n).fold(f64::NEG_INFINITY, f64::max);
    TraceAudit {
        pointwise_margin,
        pointwise_holds: pointwise_margin >= 0.0,
        c0,
        kappa1: k1,
        kappa2: k2,
        average_bound,
        average_max,
        average_holds: average_max <= average_bound,
    }
}
