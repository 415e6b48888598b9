use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Forcing, Params, State, Stepper};
use crate::error::{Error, Result};
use crate::spectral::{
    leray_project, norm_sq, GalerkinProjector, NodalObserver, NodeSet, NormKind, ScalarField,
    VectorField,
};

use super::fit::{fit_decay_rate, DecayFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observation {
    /// Slave the first `m` eigenfunctions of solution 2 to solution 1.
    Modes { m: usize },
    /// Nudge solution 2 toward the nodal interpolant of solution 1 on an
    /// `s × s` covering, one node near each square center, with gain `mu`.
    Nodes { per_side: usize, mu: f64 },
}

/// Twin-experiment setup.
#[derive(Debug, Clone)]
pub struct SyncConfig {
    pub observation: Observation,
    pub params: Params,
    pub reference: State,
    pub perturbed: State,
    pub forcing_reference: Forcing,
    pub forcing_perturbed: Forcing,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    /// Relative level the recorded difference must reach.
    pub threshold: f64,
    /// Fraction of the run the difference must stay below threshold.
    pub sustained_fraction: f64,
}

impl SyncConfig {
    /// Shared forcing, 1e-10 threshold, 10% sustained window.
    pub fn new(
        observation: Observation,
        params: Params,
        reference: State,
        perturbed: State,
        forcing: Forcing,
        t_end: f64,
        dt: f64,
    ) -> Self {
        Self {
            observation,
            params,
            reference,
            perturbed,
            forcing_reference: forcing.clone(),
            forcing_perturbed: forcing,
            t_end,
            dt,
            stride: 1,
            threshold: 1e-10,
            sustained_fraction: 0.1,
        }
    }

    fn validate(&self) -> Result<usize> {
        self.params.validate()?;
        if !self.reference.u.same_grid(&self.perturbed.u) {
            return Err(Error::GridMismatch("reference and perturbed states"));
        }
        for f in [&self.forcing_reference, &self.forcing_perturbed] {
            if **f.grid() != **self.reference.grid() {
                return Err(Error::GridMismatch("state and forcing"));
            }
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("stride must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && (0.0..=1.0).contains(&self.sustained_fraction)) {
            return Err(Error::InvalidParameter("invalid convergence criterion".into()));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidParameter("t_end and dt must be positive".into()));
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

/// Named difference series of a twin run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncSeries {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub observation: Observation,
    pub times: Vec<f64>,
    /// `delta_P`, `delta_Q` for modes; `eta_u`, `eta_omega`, `h1_diff` for
    /// nodes. The last series is the one convergence is judged on.
    pub series: Vec<SyncSeries>,
    pub initial_scale: f64,
    pub converged: bool,
    /// First sample time from which the difference stays below threshold.
    pub threshold_time: Option<f64>,
    pub fit: Option<DecayFit>,
}

/// JSON summary of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncSummary {
    pub config_hash: String,
    pub converged: bool,
    pub rate: Option<f64>,
    pub threshold_time: Option<f64>,
}

impl SyncReport {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    fn judged(&self) -> &[f64] {
        &self.series.last().expect("at least one series").values
    }

    pub fn summary(&self, config_hash: &str) -> SyncSummary {
        SyncSummary {
            config_hash: config_hash.to_string(),
            converged: self.converged,
            rate: self.fit.map(|f| f.rate),
            threshold_time: self.threshold_time,
        }
    }

    /// CSV with a `t` column followed by one column per series; numbers in
    /// 17 significant digits.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = format!("# config_hash={config_hash}\nt");
        for s in &self.series {
            out.push(',');
            out.push_str(&s.name);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:.16e}");
            for s in &self.series {
                let _ = write!(out, ",{:.16e}", s.values[i]);
            }
            out.push('\n');
        }
        out
    }

    fn finish(&mut self, threshold: f64, sustained_fraction: f64) {
        let values = self.judged().to_vec();
        let scale = values.first().copied().unwrap_or(0.0);
        self.initial_scale = scale;
        let t_first = self.times.first().copied().unwrap_or(0.0);
        let t_last = self.times.last().copied().unwrap_or(0.0);
        if scale == 0.0 {
            self.converged = values.iter().all(|v| *v == 0.0);
            self.threshold_time = self.converged.then_some(t_first);
            return;
        }
        let level = threshold * scale;
        // first index after the last sample above the level
        let last_above = values.iter().rposition(|v| *v >= level);
        let start = match last_above {
            None => Some(0),
            Some(i) if i + 1 < values.len() => Some(i + 1),
            Some(_) => None,
        };
        self.threshold_time = start.map(|i| self.times[i]);
        self.converged = match self.threshold_time {
            Some(t) => t_last - t >= sustained_fraction * (t_last - t_first),
            None => false,
        };
        // fit the decaying stretch above the roundoff floor
        let floor = 1e-28 * scale;
        let end = values.iter().position(|v| *v <= floor).unwrap_or(values.len());
        let skip = end / 10;
        if end - skip >= 10 {
            self.fit = fit_decay_rate(&self.times[skip..end], &values[skip..end]).ok();
        }
    }
}

fn check_states(a: &State, b: &State) -> Result<()> {
    for s in [a, b] {
        if !s.is_finite() {
            return Err(Error::NonFinite { what: "twin state", t: s.t });
        }
    }
    Ok(())
}

/// Replace the first `m` eigenfunction components of `target` by those of
/// `source`.
fn slave(p: &GalerkinProjector, target: &State, source: &State) -> State {
    State {
        u: &p.q(&target.u) + &p.p(&source.u),
        omega: &p.q_scalar(&target.omega) + &p.p_scalar(&source.omega),
        t: target.t,
    }
}

/// Determining-modes twin run: after every step (and once at `t = 0`) the
/// first `m` eigenfunction components of solution 2 are overwritten by those
/// of solution 1. Records `delta_P` and `delta_Q`.
pub fn run_mode_sync(config: &SyncConfig) -> Result<SyncReport> {
    let Observation::Modes { m } = config.observation else {
        return Err(Error::InvalidParameter("mode sync needs a modes observation".into()));
    };
    let steps = config.validate()?;
    let grid = config.reference.grid().clone();
    let p = GalerkinProjector::new(&grid, m)?;
    let mut a = config.reference.clone();
    let mut b = slave(&p, &config.perturbed, &a);
    let mut s1 = Stepper::new(config.params, config.dt)?;
    let mut s2 = Stepper::new(config.params, config.dt)?;
    let mut report = SyncReport {
        observation: config.observation,
        times: Vec::new(),
        series: vec![
            SyncSeries { name: "delta_P".into(), values: Vec::new() },
            SyncSeries { name: "delta_Q".into(), values: Vec::new() },
        ],
        initial_scale: 0.0,
        converged: false,
        threshold_time: None,
        fit: None,
    };
    let record = |a: &State, b: &State, r: &mut SyncReport| {
        let du = &a.u - &b.u;
        let dw = &a.omega - &b.omega;
        r.times.push(a.t);
        r.series[0].values.push(norm_sq(&p.p(&du), NormKind::L2) + norm_sq(&p.p_scalar(&dw), NormKind::L2));
        r.series[1].values.push(norm_sq(&p.q(&du), NormKind::L2) + norm_sq(&p.q_scalar(&dw), NormKind::L2));
    };
    record(&a, &b, &mut report);
    for k in 1..=steps {
        a = s1.step(&a, &config.forcing_reference)?;
        b = s2.step(&b, &config.forcing_perturbed)?;
        b = slave(&p, &b, &a);
        check_states(&a, &b)?;
        if k % config.stride == 0 {
            record(&a, &b, &mut report);
        }
    }
    report.finish(config.threshold, config.sustained_fraction);
    Ok(report)
}

/// Determining-nodes twin run: solution 2 carries the relaxation terms
/// `−μ(I_h u₂ − I_h u₁)` and `−μ(I_h ω₂ − I_h ω₁)`. Records `eta_u`,
/// `eta_omega` and the H¹ energy of the difference, `h1_diff`.
pub fn run_node_sync(config: &SyncConfig) -> Result<SyncReport> {
    let Observation::Nodes { per_side, mu } = config.observation else {
        return Err(Error::InvalidParameter("node sync needs a nodes observation".into()));
    };
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("nudging gain must be positive, got {mu}")));
    }
    let steps = config.validate()?;
    let grid = config.reference.grid().clone();
    let obs = NodalObserver::new(&grid, node_set(&grid, per_side)?)?;
    let mut a = config.reference.clone();
    let mut b = config.perturbed.clone();
    let mut s1 = Stepper::new(config.params, config.dt)?;
    let mut s2 = Stepper::new(config.params, config.dt)?;
    let mut report = SyncReport {
        observation: config.observation,
        times: Vec::new(),
        series: vec![
            SyncSeries { name: "eta_u".into(), values: Vec::new() },
            SyncSeries { name: "eta_omega".into(), values: Vec::new() },
            SyncSeries { name: "h1_diff".into(), values: Vec::new() },
        ],
        initial_scale: 0.0,
        converged: false,
        threshold_time: None,
        fit: None,
    };
    let record = |a: &State, b: &State, r: &mut SyncReport| {
        let du = &a.u - &b.u;
        let dw = &a.omega - &b.omega;
        r.times.push(a.t);
        r.series[0].values.push(obs.eta_vector(&du));
        r.series[1].values.push(obs.eta(&dw));
        r.series[2].values.push(norm_sq(&du, NormKind::H1) + norm_sq(&dw, NormKind::H1));
    };
    record(&a, &b, &mut report);
    for k in 1..=steps {
        let du = &b.u - &a.u;
        let dw = &b.omega - &a.omega;
        let eu: VectorField = leray_project(&obs.interpolate_vector(&du)).scaled(-mu);
        let ew: ScalarField = obs.interpolate(&dw).scaled(-mu);
        let next_b = s2.step_with(&b, &config.forcing_perturbed, Some((&eu, &ew)));
        a = s1.step(&a, &config.forcing_reference)?;
        b = next_b.map_err(|e| match e {
            Error::Cfl { .. } | Error::NonFinite { .. } => Error::Unstable {
                t: b.t,
                diagnostic: format!(
                    "nudged solution blew up with mu = {mu}, |u2|^2 = {:e}, |w2|^2 = {:e}: {e}",
                    norm_sq(&b.u, NormKind::L2),
                    norm_sq(&b.omega, NormKind::L2)
                ),
            },
            other => other,
        })?;
        check_states(&a, &b)?;
        if k % config.stride == 0 {
            record(&a, &b, &mut report);
        }
    }
    report.finish(config.threshold, config.sustained_fraction);
    Ok(report)
}

/// One node per square, on the grid point at or just below the square
/// center. Off-grid nodes make the piecewise-constant interpolant a shifted
/// copy of the field, which rotates the phase of high modes.
fn node_set(grid: &crate::spectral::Grid, per_side: usize) -> Result<NodeSet> {
    if per_side == 0 {
        return Err(Error::InvalidNodeSet("covering needs at least one square".into()));
    }
    let ratio = grid.n() as f64 / per_side as f64;
    let offset = (ratio / 2.0).floor() / ratio;
    NodeSet::with_offset(grid.length(), per_side, (offset, offset))
}

/// Dispatch on the observation kind.
pub fn run_sync(config: &SyncConfig) -> Result<SyncReport> {
    match config.observation {
        Observation::Modes { .. } => run_mode_sync(config),
        Observation::Nodes { .. } => run_node_sync(config),
    }
}

/// Default gain `μ = k₁λ₁N/(2c)`.
pub fn default_nudging_gain(k: &crate::estimates::Constants, nodes: usize) -> f64 {
    k.k1() * k.lambda1 * nodes as f64 / (2.0 * k.c)
}
