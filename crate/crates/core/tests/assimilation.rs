use std::f64::consts::PI;
use std::sync::Arc;

use micropolar::assimilation::*;
use micropolar::dynamics::*;
use micropolar::estimates::*;
use micropolar::spectral::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Scenario {
    grid: Arc<Grid>,
    params: Params,
    forcing: Forcing,
    reference: State,
    perturbed: State,
}

fn scenario(n: usize, f_norm: f64) -> Scenario {
    let grid = make_grid(n, 2.0 * PI).unwrap();
    let params = Params::new(0.2, 0.05, 0.2).unwrap();
    let spec = ProfileSpec {
        profile: ProfileKind::Steady,
        n: 1,
        big_n: 1,
        f_norm,
        g_norm: f_norm,
    };
    let forcing = make_forcing(&spec, &grid, 3).unwrap();
    let cutoff = grid.dealias_cutoff();
    let reference = State::random(&grid, 4, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let perturbed = State::random(&grid, cutoff, 1.0, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    Scenario { grid, params, forcing, reference, perturbed }
}

impl Scenario {
    fn config(&self, observation: Observation, t_end: f64) -> SyncConfig {
        SyncConfig::new(
            observation,
            self.params,
            self.reference.clone(),
            self.perturbed.clone(),
            self.forcing.clone(),
            t_end,
            5e-3,
        )
    }
}

#[test]
fn identical_states_never_separate() {
    let s = scenario(16, 0.5);
    let mut cfg = s.config(Observation::Modes { m: 3 }, 0.5);
    cfg.perturbed = cfg.reference.clone();
    let r = run_mode_sync(&cfg).unwrap();
    assert!(r.series("delta_Q").unwrap().iter().all(|v| *v == 0.0));
    assert!(r.converged);

    cfg.observation = Observation::Nodes { per_side: 4, mu: 5.0 };
    let r = run_node_sync(&cfg).unwrap();
    for name in ["eta_u", "eta_omega", "h1_diff"] {
        assert!(r.series(name).unwrap().iter().all(|v| *v == 0.0), "{name}");
    }
}

#[test]
fn complete_observation_closes_the_gap() {
    let s = scenario(16, 0.5);
    let m = s.grid.resolved_prefix();
    let r = run_mode_sync(&s.config(Observation::Modes { m }, 0.1)).unwrap();
    assert!(r.series("delta_Q").unwrap().iter().all(|v| *v == 0.0));
    assert!(r.series("delta_P").unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn low_modes_stay_slaved_and_series_align() {
    let s = scenario(32, 0.5);
    for m in [0, 5, 40] {
        let r = run_mode_sync(&s.config(Observation::Modes { m }, 1.0)).unwrap();
        assert_eq!(r.series("delta_P").unwrap().len(), r.times.len());
        assert_eq!(r.series("delta_Q").unwrap().len(), r.times.len());
        assert!(r.series("delta_P").unwrap().iter().all(|v| *v == 0.0), "m = {m}");
        assert!(r.series("delta_Q").unwrap().iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn more_modes_never_synchronize_slower() {
    let s = scenario(32, 0.5);
    let mut rates = Vec::new();
    for m in [60, 120, 200] {
        let r = run_mode_sync(&s.config(Observation::Modes { m }, 4.0)).unwrap();
        assert!(r.converged, "m = {m} did not converge");
        rates.push(r.fit.expect("fit").rate);
    }
    for w in rates.windows(2) {
        assert!(w[1] <= w[0] * 0.98, "rates {rates:?}");
    }
}

#[test]
fn decaying_forcing_gap_still_synchronizes() {
    let s = scenario(32, 0.5);
    let mut cfg = s.config(Observation::Modes { m: 60 }, 4.0);
    let gap = make_forcing(
        &ProfileSpec {
            profile: ProfileKind::UniformN,
            n: 1,
            big_n: 6,
            f_norm: 0.3,
            g_norm: 0.3,
        },
        &s.grid,
        9,
    )
    .unwrap();
    let part = &gap.parts()[0];
    cfg.forcing_perturbed = s
        .forcing
        .clone()
        .with_part(part.f.clone(), part.g.clone(), Envelope::Exp { rate: -2.0 })
        .unwrap();
    let r = run_mode_sync(&cfg).unwrap();
    assert!(r.converged);
    assert!(r.series("delta_P").unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn nudging_on_every_cell_converges() {
    let s = scenario(16, 0.5);
    let k = compute_constants(&s.params, &s.grid, &ConstantOverrides::default()).unwrap();
    let mu = default_nudging_gain(&k, 16 * 16);
    let mut cfg = s.config(Observation::Nodes { per_side: 16, mu }, 3.0);
    cfg.stride = 10;
    let r = run_node_sync(&cfg).unwrap();
    assert!(r.converged, "{:?}", r.series("h1_diff").unwrap().last());
    let h1 = r.series("h1_diff").unwrap();
    assert_eq!(h1.len(), r.times.len());
    assert!(h1.iter().all(|v| *v >= 0.0));
}

#[test]
fn nudging_rejects_bad_gain() {
    let s = scenario(16, 0.5);
    let cfg = s.config(Observation::Nodes { per_side: 4, mu: 0.0 }, 0.1);
    assert!(run_node_sync(&cfg).is_err());
    let cfg = s.config(Observation::Nodes { per_side: 0, mu: 1.0 }, 0.1);
    assert!(run_node_sync(&cfg).is_err());
    let cfg = s.config(Observation::Modes { m: 1 }, 0.1);
    assert!(run_node_sync(&cfg).is_err());
}

#[test]
fn mode_sync_rejects_out_of_range_m() {
    let s = scenario(16, 0.5);
    let m = s.grid.mode_count() + 1;
    assert!(run_mode_sync(&s.config(Observation::Modes { m }, 0.1)).is_err());
}

#[test]
fn csv_and_summary_carry_the_hash() {
    let s = scenario(16, 0.5);
    let mut cfg = s.config(Observation::Modes { m: 10 }, 0.05);
    cfg.stride = 5;
    let r = run_sync(&cfg).unwrap();
    let csv = r.to_csv("abc123");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# config_hash=abc123"));
    assert_eq!(lines.next(), Some("t,delta_P,delta_Q"));
    assert_eq!(lines.count(), r.times.len());
    let summary = r.summary("abc123");
    assert_eq!(summary.config_hash, "abc123");
    assert_eq!(summary.converged, r.converged);
}

#[test]
fn gronwall_average_on_a_decayed_trajectory() {
    let s = scenario(16, 0.5);
    let k = compute_constants(&s.params, &s.grid, &ConstantOverrides::default()).unwrap();
    let cfg = SimConfig { t_end: 40.0, dt: 1e-2, stride: 10 };
    let traj = simulate(&s.reference, &s.params, &Forcing::zero(&s.grid), &cfg, &mut []).unwrap();
    let tail: Vec<Sample> = traj.samples.iter().filter(|x| x.t >= 30.0).cloned().collect();
    let m = 7;
    let r = check_gronwall_conditions(&tail, &k, m, &s.grid, 2.0).unwrap();
    let expected = k.k1() * s.grid.lambda(m + 1) - 16.0 * 0.05f64.powi(2) / 0.2;
    for w in &r.windows {
        assert!((w.gamma_mean - expected).abs() < 1e-4 * expected, "{w:?}");
    }
    assert!(r.l1_holds && r.l2_holds);
}

#[test]
fn gronwall_fails_without_modes_under_strong_forcing() {
    let s = scenario(32, 20.0);
    let k = compute_constants(&s.params, &s.grid, &ConstantOverrides::default()).unwrap();
    let cfg = SimConfig { t_end: 10.0, dt: 2e-3, stride: 10 };
    let traj = simulate(&s.reference, &s.params, &s.forcing, &cfg, &mut []).unwrap();
    let r = check_gronwall_conditions(&traj.samples, &k, 0, &s.grid, 1.0).unwrap();
    assert!(!r.l1_holds);
    assert!(r.liminf_proxy < 0.0);
    assert!(r.l2_holds);
}

#[test]
fn gronwall_rejects_oversized_window() {
    let s = scenario(16, 0.5);
    let k = compute_constants(&s.params, &s.grid, &ConstantOverrides::default()).unwrap();
    let cfg = SimConfig { t_end: 1.0, dt: 1e-2, stride: 10 };
    let traj = simulate(&s.reference, &s.params, &s.forcing, &cfg, &mut []).unwrap();
    assert!(check_gronwall_conditions(&traj.samples, &k, 0, &s.grid, 5.0).is_err());
}

#[test]
fn oversized_gain_is_reported_as_unstable() {
    let s = scenario(16, 0.5);
    // μ·dt = 5, far outside the explicit relaxation's stable range
    let cfg = s.config(Observation::Nodes { per_side: 8, mu: 1000.0 }, 2.0);
    match run_node_sync(&cfg) {
        Err(micropolar::Error::Unstable { diagnostic, .. }) => assert!(diagnostic.contains("mu")),
        other => panic!("expected an unstable run, got {:?}", other.map(|r| r.converged)),
    }
}
