use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use micropolar::assimilation::{
    check_gronwall_conditions, default_nudging_gain, run_sync, GronwallReport, Observation,
    SyncConfig, SyncReport,
};
use micropolar::dynamics::{
    read_checkpoint_info, simulate, write_checkpoint, Forcing, Sample, SimConfig, State,
};
use micropolar::estimates::{
    attractor_bound, compute_constants, corollary_modes_bound, force_strength, kappa1, kappa2,
    modes_bound, nodes_bound, verify_absorbing_ball, verify_energy_inequality, verify_h1_bound,
    verify_time_averages, AuditConfig, CheckRecord, Constants, ForceStrength, ModesMethod,
};
use micropolar::lyapunov::{audit_trace, lyapunov_spectrum, LyapunovConfig};
use micropolar::spectral::Grid;
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{self, Experiment, Loaded, PerturbationConfig, RunConfig};
use crate::output::{ensure_dir, job_dir, num, write_bytes, write_csv, write_json};
use crate::{Cli, CliError, Command};

const SAMPLE_HEADER: [&str; 11] = [
    "t", "u_l2", "omega_l2", "u_h1", "omega_h1", "u_da", "omega_da", "f_l2", "g_l2", "f_hm1",
    "g_hm1",
];

/// Runs the subcommand; returns the violated checks (empty when all hold).
pub fn dispatch(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Command::CheckpointInfo { path } = &cli.command {
        return checkpoint_info(path, cli.out.as_deref()).map(|_| Vec::new());
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let loaded = config::load(path)?;
    let kind = cli.command.kind();
    if let Some(e) = &loaded.config.experiment {
        if e.kind() != kind {
            return Err(CliError::Config(format!(
                "configuration describes a `{}` experiment, not `{kind}`",
                e.kind()
            )));
        }
    }
    let out = match (&cli.out, &loaded.config.output) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => loaded.base_dir.join(dir),
        (None, None) => {
            return Err(CliError::Config("no output directory: pass --out or set `output`".into()))
        }
    };
    ensure_dir(&out)?;
    let ctx = Ctx {
        cfg: &loaded.config,
        loaded: &loaded,
        hash: &loaded.hash,
        out,
    };
    match &cli.command {
        Command::Simulate => ctx.simulate(),
        Command::VerifyEstimates => ctx.verify_estimates(),
        Command::Bounds => ctx.bounds(),
        Command::SyncModes => ctx.sync_modes(),
        Command::SyncNodes => ctx.sync_nodes(),
        Command::Lyapunov => ctx.lyapunov(),
        Command::CheckpointInfo { .. } => unreachable!("handled above"),
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    loaded: &'a Loaded,
    hash: &'a str,
    out: PathBuf,
}

fn sample_row(s: &Sample) -> Vec<f64> {
    vec![
        s.t, s.u_l2, s.omega_l2, s.u_h1, s.omega_h1, s.u_da, s.omega_da, s.f_l2, s.g_l2, s.f_hm1,
        s.g_hm1,
    ]
}

/// `null` for non-finite values, which JSON cannot carry.
fn jnum(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

impl Ctx<'_> {
    fn sim_config(&self, t_end: f64) -> SimConfig {
        SimConfig {
            t_end,
            dt: self.cfg.integrator.dt,
            stride: self.cfg.integrator.stride,
        }
    }

    fn constants(&self, grid: &Grid) -> Result<Constants, CliError> {
        Ok(compute_constants(&self.cfg.params, grid, &self.cfg.constants)?)
    }

    /// Force strengths over the sample times of the configured run.
    fn strength(&self, forcing: &Forcing) -> Result<ForceStrength, CliError> {
        Ok(force_strength(forcing, &self.window())?)
    }

    fn window(&self) -> Vec<f64> {
        let i = &self.cfg.integrator;
        let step = i.dt * i.stride as f64;
        let count = (i.t_end / step).floor() as usize;
        (0..=count).map(|j| j as f64 * step).collect()
    }

    /// Largest `|f|² + |g|²` over the run window.
    fn forcing_sq(&self, grid: &Arc<Grid>, forcing: &Forcing) -> (f64, f64) {
        let mut best = (0.0, 0.0);
        let times = if forcing.is_steady() { vec![0.0] } else { self.window() };
        for t in times {
            let mut probe = State::zeros(grid);
            probe.t = t;
            let s = Sample::of(&probe, forcing);
            if s.f_l2 + s.g_l2 > best.0 + best.1 {
                best = (s.f_l2, s.g_l2);
            }
        }
        best
    }

    /// Reference state after `spinup`, with the clock reset to zero.
    fn spun_up(&self, grid: &Arc<Grid>, forcing: &Forcing, spinup: f64) -> Result<State, CliError> {
        let initial = self.cfg.initial_state(grid, &self.loaded.base_dir)?;
        let mut state = if spinup > 0.0 {
            simulate(&initial, &self.cfg.params, forcing, &self.sim_config(spinup), &mut [])?.final_state
        } else {
            initial
        };
        state.t = 0.0;
        Ok(state)
    }

    fn simulate(&self) -> Result<Vec<String>, CliError> {
        let grid = self.cfg.grid()?;
        let forcing = self.cfg.forcing(&grid)?;
        let initial = self.cfg.initial_state(&grid, &self.loaded.base_dir)?;
        let traj = simulate(
            &initial,
            &self.cfg.params,
            &forcing,
            &self.sim_config(self.cfg.integrator.t_end),
            &mut [],
        )?;
        write_csv(
            &self.out.join("simulate.csv"),
            self.hash,
            &SAMPLE_HEADER,
            traj.samples.iter().map(sample_row),
        )?;
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &traj.final_state, &self.cfg.params)?;
        write_bytes(&self.out.join("final.mpf"), &bytes)?;
        let last = traj.samples.last();
        write_json(
            &self.out.join("simulate.json"),
            &json!({
                "config_hash": self.hash,
                "samples": traj.samples.len(),
                "t_final": traj.final_state.t,
                "final": last,
                "series_file": "simulate.csv",
                "checkpoint_file": "final.mpf",
            }),
        )?;
        Ok(Vec::new())
    }

    fn verify_estimates(&self) -> Result<Vec<String>, CliError> {
        let grid = self.cfg.grid()?;
        let forcing = self.cfg.forcing(&grid)?;
        let initial = self.cfg.initial_state(&grid, &self.loaded.base_dir)?;
        let traj = simulate(
            &initial,
            &self.cfg.params,
            &forcing,
            &self.sim_config(self.cfg.integrator.t_end),
            &mut [],
        )?;
        let k = self.constants(&grid)?;
        let fs = self.strength(&forcing)?;
        let mut audit = AuditConfig::new(self.cfg.integrator.dt);
        if let Some(Experiment::VerifyEstimates {
            rel_slack,
            transient_horizon,
            transient_band,
            min_average_window,
        }) = &self.cfg.experiment
        {
            audit.rel_slack = rel_slack.unwrap_or(audit.rel_slack);
            audit.transient_horizon = transient_horizon.unwrap_or(audit.transient_horizon);
            audit.transient_band = transient_band.unwrap_or(audit.transient_band);
            audit.min_average_window = min_average_window.unwrap_or(audit.min_average_window);
        }
        let s = &traj.samples;
        let mut checks = Vec::new();
        let mut skipped = Vec::new();
        let mut record = |name: &str, r: micropolar::Result<Vec<CheckRecord>>| match r {
            Ok(list) => checks.extend(list.into_iter().map(|c| c.with_hash(self.hash))),
            Err(micropolar::Error::InsufficientData(why)) => {
                skipped.push(json!({ "check_name": name, "reason": why }))
            }
            Err(e) => skipped.push(json!({ "check_name": name, "reason": e.to_string() })),
        };
        record("energy_inequality", verify_energy_inequality(s, &k, &audit).map(|c| vec![c]));
        record("absorbing_ball", verify_absorbing_ball(s, &k, &fs, &audit).map(|c| vec![c]));
        record("time_averages", verify_time_averages(s, &k, &fs, &audit));
        record("h1_bound", verify_h1_bound(s, &k, &fs, &audit).map(|c| vec![c]));

        write_csv(
            &self.out.join("trajectory.csv"),
            self.hash,
            &SAMPLE_HEADER,
            s.iter().map(sample_row),
        )?;
        let mut text = format!("# config_hash={}\ncheck_name,left,right,margin,violated,note\n", self.hash);
        for c in &checks {
            text.push_str(&format!(
                "{},{},{},{},{},\"{}\"\n",
                c.check_name,
                num(c.left),
                num(c.right),
                num(c.margin),
                u8::from(c.violated),
                c.note.as_deref().unwrap_or("").replace('"', "\"\"")
            ));
        }
        write_bytes(&self.out.join("checks.csv"), text.as_bytes())?;
        let violations: Vec<String> = checks
            .iter()
            .filter(|c| c.violated)
            .map(|c| format!("{}: {} > {}", c.check_name, c.left, c.right))
            .collect();
        write_json(
            &self.out.join("estimates.json"),
            &json!({
                "config_hash": self.hash,
                "constants": k.record(),
                "force_strength": fs,
                "audit": audit,
                "checks": checks,
                "skipped": skipped,
                "violated": violations.len(),
            }),
        )?;
        Ok(violations)
    }

    fn bounds(&self) -> Result<Vec<String>, CliError> {
        let grid = self.cfg.grid()?;
        let forcing = self.cfg.forcing(&grid)?;
        let k = self.constants(&grid)?;
        let fs = self.strength(&forcing)?;
        let (f_sq, g_sq) = self.forcing_sq(&grid, &forcing);
        let mut modes = serde_json::Map::new();
        let mut corollary = serde_json::Map::new();
        for method in [ModesMethod::ClosedForm, ModesMethod::ExactEigenvalues] {
            let key = method.to_string();
            modes.insert(
                key.clone(),
                match modes_bound(&k, fs.f_tilde_minus1, method, &grid) {
                    Ok(m) => json!({ "m": m }),
                    Err(e) => json!({ "m": null, "note": e.to_string() }),
                },
            );
            if let Some(spec) = &self.cfg.forcing {
                corollary.insert(
                    key,
                    match corollary_modes_bound(spec, &k, fs.f_tilde, method, &grid) {
                        Ok(c) => json!(c),
                        Err(e) => json!({ "note": e.to_string() }),
                    },
                );
            }
        }
        write_json(
            &self.out.join("bounds.json"),
            &json!({
                "config_hash": self.hash,
                "constants": k.record(),
                "force_strength": fs,
                "modes": modes,
                "corollary": if self.cfg.forcing.is_some() { Value::Object(corollary) } else { Value::Null },
                "nodes": nodes_bound(&k, fs.f_tilde),
                "attractor": attractor_bound(&k, f_sq.sqrt(), g_sq.sqrt()),
                "kappa1": jnum(kappa1(&k)),
                "kappa2": jnum(kappa2(&k, f_sq + g_sq)),
            }),
        )?;
        Ok(Vec::new())
    }

    /// Reference after spin-up and the perturbed twin.
    fn twins(
        &self,
        grid: &Arc<Grid>,
        forcing: &Forcing,
        spinup: f64,
        perturbation: &PerturbationConfig,
    ) -> Result<(State, State), CliError> {
        let reference = self.spun_up(grid, forcing, spinup)?;
        let perturbed = self.cfg.perturbed_state(grid, perturbation)?;
        Ok((reference, perturbed))
    }

    fn write_job(&self, dir: &Path, report: &SyncReport, extra: Value) -> Result<Value, CliError> {
        write_bytes(&dir.join("sync.csv"), report.to_csv(self.hash).as_bytes())?;
        let mut summary = json!(report.summary(self.hash));
        summary["observation"] = json!(report.observation);
        summary["initial_scale"] = jnum(report.initial_scale);
        summary["fit"] = json!(report.fit);
        if let (Value::Object(s), Value::Object(e)) = (&mut summary, extra) {
            s.extend(e);
        }
        write_json(&dir.join("summary.json"), &summary)?;
        Ok(summary)
    }

    fn sync_modes(&self) -> Result<Vec<String>, CliError> {
        let Some(Experiment::SyncModes {
            m,
            spinup,
            perturbation,
            threshold,
            sustained_fraction,
            forcing_gap,
            gronwall_window,
        }) = self.cfg.experiment.clone().or_else(|| {
            serde_json::from_value(json!({ "kind": "sync_modes" })).ok()
        })
        else {
            unreachable!("kind checked in dispatch")
        };
        let grid = self.cfg.grid()?;
        let forcing = self.cfg.forcing(&grid)?;
        let perturbed_forcing = match &forcing_gap {
            Some(gap) => self.cfg.gap_forcing(&grid, gap)?,
            None => forcing.clone(),
        };
        let k = self.constants(&grid)?;
        let fs = self.strength(&forcing)?;
        let bound = modes_bound(&k, fs.f_tilde_minus1, ModesMethod::ExactEigenvalues, &grid).ok();
        let ms = match m {
            Some(ms) if !ms.is_empty() => ms,
            Some(_) => return Err(CliError::Config("experiment.m must list at least one count".into())),
            None => vec![bound.ok_or_else(|| {
                CliError::Config("mode bound exceeds the grid; list `m` explicitly".into())
            })?],
        };
        let (reference, perturbed) = self.twins(&grid, &forcing, spinup, &perturbation)?;
        let t_end = self.cfg.integrator.t_end;
        let samples = simulate(&reference, &self.cfg.params, &forcing, &self.sim_config(t_end), &mut [])?.samples;

        let jobs: Vec<Result<(usize, Value, bool), CliError>> = ms
            .par_iter()
            .map(|&m| {
                let dir = job_dir(&self.out, &format!("m_{m}"))?;
                let mut sc = SyncConfig::new(
                    Observation::Modes { m },
                    self.cfg.params,
                    reference.clone(),
                    perturbed.clone(),
                    forcing.clone(),
                    t_end,
                    self.cfg.integrator.dt,
                );
                sc.forcing_perturbed = perturbed_forcing.clone();
                sc.stride = self.cfg.integrator.stride;
                sc.threshold = threshold;
                sc.sustained_fraction = sustained_fraction;
                let report = run_sync(&sc)?;
                let gronwall: Result<GronwallReport, _> =
                    check_gronwall_conditions(&samples, &k, m, &grid, gronwall_window);
                let l1 = gronwall.as_ref().map(|g| g.l1_holds).unwrap_or(false);
                let gjson = match gronwall {
                    Ok(g) => json!(g),
                    Err(e) => json!({ "note": e.to_string() }),
                };
                let summary = self.write_job(&dir, &report, json!({ "m": m, "gronwall": gjson }))?;
                let violated = bound.is_some_and(|b| m >= b) && (!report.converged || !l1);
                Ok((m, summary, violated))
            })
            .collect();
        self.finish_sweep("sync_modes.json", "m", jobs, json!({ "modes_bound": bound, "force_strength": fs }))
    }

    fn sync_nodes(&self) -> Result<Vec<String>, CliError> {
        let grid = self.cfg.grid()?;
        let (per_side, mu, spinup, perturbation, threshold, sustained_fraction) = match &self.cfg.experiment {
            Some(Experiment::SyncNodes {
                per_side,
                mu,
                spinup,
                perturbation,
                threshold,
                sustained_fraction,
            }) => (per_side.clone(), *mu, *spinup, *perturbation, *threshold, *sustained_fraction),
            _ => (vec![grid.n() / 2], None, 0.0, PerturbationConfig::default(), 1e-10, 0.1),
        };
        let forcing = self.cfg.forcing(&grid)?;
        let k = self.constants(&grid)?;
        let (reference, perturbed) = self.twins(&grid, &forcing, spinup, &perturbation)?;
        let jobs: Vec<Result<(usize, Value, bool), CliError>> = per_side
            .par_iter()
            .map(|&s| {
                let dir = job_dir(&self.out, &format!("s_{s}"))?;
                let gain = mu.unwrap_or_else(|| default_nudging_gain(&k, s * s));
                let mut sc = SyncConfig::new(
                    Observation::Nodes { per_side: s, mu: gain },
                    self.cfg.params,
                    reference.clone(),
                    perturbed.clone(),
                    forcing.clone(),
                    self.cfg.integrator.t_end,
                    self.cfg.integrator.dt,
                );
                sc.stride = self.cfg.integrator.stride;
                sc.threshold = threshold;
                sc.sustained_fraction = sustained_fraction;
                let report = run_sync(&sc).map_err(|e| {
                    let err = CliError::from(e);
                    let _ = write_json(
                        &dir.join("summary.json"),
                        &json!({ "config_hash": self.hash, "per_side": s, "mu": gain, "error": err.to_string() }),
                    );
                    err
                })?;
                let summary = self.write_job(
                    &dir,
                    &report,
                    json!({
                        "per_side": s,
                        "nodes": s * s,
                        "mu": gain,
                        "note": "nodal nudging stands in for direct nodal synchronization",
                    }),
                )?;
                Ok((s, summary, false))
            })
            .collect();
        self.finish_sweep("sync_nodes.json", "per_side", jobs, json!({}))
    }

    /// Writes the sweep index; the first job error, if any, is returned after
    /// every job has been recorded.
    fn finish_sweep(
        &self,
        file: &str,
        key: &str,
        jobs: Vec<Result<(usize, Value, bool), CliError>>,
        extra: Value,
    ) -> Result<Vec<String>, CliError> {
        let mut rows = Vec::new();
        let mut violations = Vec::new();
        let mut first_err = None;
        for job in jobs {
            match job {
                Ok((id, summary, violated)) => {
                    if violated {
                        violations.push(format!("{key} = {id} did not synchronize"));
                    }
                    rows.push((id, summary));
                }
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
        rows.sort_by_key(|r| r.0);
        let mut index = json!({
            "config_hash": self.hash,
            "jobs": rows.into_iter().map(|r| r.1).collect::<Vec<_>>(),
            "failed": first_err.as_ref().map(|e| e.to_string()),
        });
        if let (Value::Object(i), Value::Object(e)) = (&mut index, extra) {
            i.extend(e);
        }
        write_json(&self.out.join(file), &index)?;
        match first_err {
            Some(e) => Err(e),
            None => Ok(violations),
        }
    }

    fn lyapunov(&self) -> Result<Vec<String>, CliError> {
        let (exponents, reorth, velocity_only, spinup) = match &self.cfg.experiment {
            Some(Experiment::Lyapunov {
                exponents,
                reorth_interval,
                velocity_only,
                spinup,
            }) => (*exponents, *reorth_interval, *velocity_only, *spinup),
            _ => (8, None, false, 0.0),
        };
        let grid = self.cfg.grid()?;
        let forcing = self.cfg.forcing(&grid)?;
        let mut k = self.constants(&grid)?;
        let base = self.spun_up(&grid, &forcing, spinup)?;
        let mut lc = LyapunovConfig::new(exponents, self.cfg.integrator.t_end, self.cfg.integrator.dt);
        if let Some(r) = reorth {
            lc.reorth_interval = r;
        }
        lc.velocity_only = velocity_only;
        lc.seed = self.cfg.integrator.seed;
        let report = lyapunov_spectrum(&base, &self.cfg.params, &forcing, &lc)?;

        // a configured C0 wins over the fitted one
        let c0 = self.cfg.constants.c0.unwrap_or(report.c0_fitted);
        k.c0 = c0;
        let (f_sq, g_sq) = self.forcing_sq(&grid, &forcing);
        let audit = audit_trace(&report, &k, c0, f_sq + g_sq);
        let bound = attractor_bound(&k, f_sq.sqrt(), g_sq.sqrt());

        write_csv(
            &self.out.join("trace.csv"),
            self.hash,
            &["t", "trace", "q_n", "a", "b", "r", "h1_sum", "rho_sq", "base_h1"],
            report.trace.iter().map(|s| {
                let x = &s.terms;
                vec![s.t, x.trace, s.q_n, x.a, x.b, x.r, x.h1_sum, x.rho_sq, x.base_h1]
            }),
        )?;
        let mut violations = Vec::new();
        if let Some(d) = report.kaplan_yorke {
            if d > 2.0 * bound.n as f64 {
                violations.push(format!("Kaplan–Yorke dimension {d} exceeds 2N = {}", 2 * bound.n));
            }
        }
        if !audit.pointwise_holds {
            violations.push(format!("pointwise trace bound fails by {}", -audit.pointwise_margin));
        }
        if !audit.average_holds {
            violations.push(format!(
                "trace average {} exceeds bound {}",
                audit.average_max, audit.average_bound
            ));
        }
        let ky = match report.kaplan_yorke {
            Some(d) => json!(d),
            None => json!("undetermined"),
        };
        let note = if report.settled {
            Value::Null
        } else {
            json!(format!("exponents still drifting ({:.3e}); lengthen t_end", report.drift))
        };
        write_json(
            &self.out.join("lyapunov.json"),
            &json!({
                "config_hash": self.hash,
                "exponents": report.exponents,
                "partial_sums": report.partial_sums,
                "kaplan_yorke": ky,
                "exponent_sum": report.exponent_sum,
                "trace_average": report.trace_average,
                "qN_series_file": "trace.csv",
                "bound_N": bound.n,
                "bound_2N": bound.fractal,
                "attractor_bound": bound.value,
                "C0_used": c0,
                "C0_fitted": report.c0_fitted,
                "audit": audit,
                "drift": report.drift,
                "settled": report.settled,
                "velocity_only": report.velocity_only,
                "t_span": report.t_span,
                "note": note,
            }),
        )?;
        Ok(violations)
    }
}

fn checkpoint_info(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let info = read_checkpoint_info(bytes.as_slice())?;
    let report = json!({
        "path": path.display().to_string(),
        "sha256": hex::encode(Sha256::digest(&bytes)),
        "version": info.version,
        "n": info.n,
        "L": info.length,
        "params": info.params,
        "t": info.t,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("JSON values serialize"));
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("checkpoint_info.json"), &report)?;
    }
    Ok(())
}
