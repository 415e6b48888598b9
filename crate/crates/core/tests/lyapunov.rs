use std::f64::consts::PI;
use std::sync::Arc;

use micropolar::dynamics::*;
use micropolar::estimates::*;
use micropolar::lyapunov::*;
use micropolar::spectral::*;
use micropolar::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(g: &Arc<Grid>, seed: u64) -> State {
    State::random(g, g.dealias_cutoff(), 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn random_tangent(g: &Arc<Grid>, seed: u64) -> Tangent {
    Tangent::random(g, false, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn family(g: &Arc<Grid>, n: usize, seed: u64) -> Vec<Tangent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<Tangent> = (0..n).map(|_| Tangent::random(g, false, &mut rng)).collect();
    orthonormalize(&mut f).unwrap();
    f
}

fn dist(a: &Tangent, b: &Tangent) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.norm()
}

fn zero_forcing_rhs(s: &State, p: &Params) -> (VectorField, ScalarField) {
    let g = s.grid();
    rhs(s, p, &VectorField::zeros(g), &ScalarField::zeros(g)).unwrap()
}

fn shifted(s: &State, phi: &Tangent, eps: f64) -> State {
    let mut u = s.u.clone();
    u.axpy(eps, &phi.v);
    let mut w = s.omega.clone();
    w.axpy(eps, &phi.z);
    State { u, omega: w, t: s.t }
}

#[test]
fn zero_base_gives_pure_linear_decay() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.3, 0.2, 0.5).unwrap();
    let phi = random_tangent(&g, 1);
    let d = tangent_rhs(&State::zeros(&g), &phi, &p).unwrap();
    let mut dv = apply_a(&phi.v).scaled(-(0.3 + 0.2));
    dv.axpy(0.4, &rot_scalar(&phi.z));
    let mut dz = apply_a1(&phi.z).scaled(-0.5);
    dz.axpy(-0.8, &phi.z);
    dz.axpy(0.4, &rot_vec(&phi.v));
    let expect = Tangent { v: leray_project(&dv), z: dz };
    assert!(dist(&d, &expect) <= 1e-13 * expect.norm());
}

#[test]
fn finite_differences_converge_linearly() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.1, 0.05, 0.2).unwrap();
    let base = random_state(&g, 2);
    let phi = random_tangent(&g, 3);
    let exact = tangent_rhs(&base, &phi, &p).unwrap();
    let (u0, w0) = zero_forcing_rhs(&base, &p);
    let errs: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&eps| {
            let (u1, w1) = zero_forcing_rhs(&shifted(&base, &phi, eps), &p);
            let fd = Tangent {
                v: (&u1 - &u0).scaled(1.0 / eps),
                z: (&w1 - &w0).scaled(1.0 / eps),
            };
            dist(&fd, &exact) / exact.norm()
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 10.0).abs() < 0.5, "errors {errs:?}");
    }
}

#[test]
fn decoupled_velocity_tangent_is_navier_stokes() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.15, 0.0, 0.3).unwrap();
    let base = random_state(&g, 4);
    let mut phi = random_tangent(&g, 5);
    phi.z = ScalarField::zeros(&g);
    let d = tangent_rhs(&base, &phi, &p).unwrap();
    let mut ns = apply_a(&phi.v).scaled(-0.15);
    ns.axpy(-1.0, &advect_vector(&base.u, &phi.v).unwrap());
    ns.axpy(-1.0, &advect_vector(&phi.v, &base.u).unwrap());
    let ns = leray_project(&ns);
    let err = norm(&(&d.v - &ns), NormKind::L2);
    assert!(err <= 1e-13 * norm(&ns, NormKind::L2), "{err}");

    let other = State { omega: ScalarField::random(&g, 3, &mut ChaCha8Rng::seed_from_u64(9)), ..base.clone() };
    let d2 = tangent_rhs(&other, &phi, &p).unwrap();
    assert_eq!(d.v.x.coeffs(), d2.v.x.coeffs());
}

#[test]
fn trace_terms_match_the_linearization() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.1, 0.07, 0.2).unwrap();
    let base = random_state(&g, 6);
    let fam = family(&g, 5, 7);
    let terms = trace_terms(&base, &fam, &p).unwrap();
    let direct: f64 = fam.iter().map(|phi| tangent_rhs(&base, phi, &p).unwrap().inner(phi)).sum();
    assert!((terms.trace - direct).abs() <= 1e-10 * terms.a, "{} vs {direct}", terms.trace);
}

#[test]
fn trace_at_rest_without_coupling() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.1, 0.0, 0.3).unwrap();
    let fam = family(&g, 4, 8);
    let terms = trace_terms(&State::zeros(&g), &fam, &p).unwrap();
    let expect: f64 = fam
        .iter()
        .map(|phi| -0.1 * norm_sq(&phi.v, NormKind::H1) - 0.3 * norm_sq(&phi.z, NormKind::H1))
        .sum();
    assert!((terms.trace - expect).abs() <= 1e-12 * expect.abs());
    assert_eq!(terms.b, 0.0);
    assert_eq!(terms.r, 0.0);
}

#[test]
fn pointwise_trace_bound_on_random_families() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.1, 0.05, 0.2).unwrap();
    let k = compute_constants(&p, &g, &ConstantOverrides::default()).unwrap();
    for seed in 0..5 {
        let base = random_state(&g, 100 + seed);
        let fam = family(&g, 6, 200 + seed);
        let t = trace_terms(&base, &fam, &p).unwrap();
        let bound = -k.k1() * t.h1_sum + (2.0 * t.rho_sq * t.base_h1).sqrt();
        assert!(t.trace <= bound, "seed {seed}: {} > {bound}", t.trace);
    }
}

#[test]
fn lieb_thirring_single_mode_closed_form() {
    let l = 3.0;
    let g = make_grid(16, l).unwrap();
    let area = l * l;
    let k = (2, 1);
    let lambda = (2.0 * PI / l).powi(2) * 5.0;
    let amp = (2.0 / area).sqrt();
    let z = ScalarField::single_mode(&g, k, Complex64::new(0.5 * amp, 0.0)).unwrap();
    let phi = Tangent::new(VectorField::zeros(&g), z).unwrap();
    let lt = lieb_thirring_check(&[phi]).unwrap();
    let expect = 3.0 / (2.0 * l * l * lambda);
    assert!((lt.ratio - expect).abs() <= 1e-12 * expect, "{} vs {expect}", lt.ratio);
    assert!((lt.rho_sq - 1.5 / area).abs() <= 1e-12 / area);
}

#[test]
fn lieb_thirring_rejects_non_orthonormal() {
    let g = make_grid(16, 1.0).unwrap();
    let fam = vec![random_tangent(&g, 1)];
    assert!(matches!(lieb_thirring_check(&fam), Err(Error::NotOrthonormal { .. })));
    assert!(lieb_thirring_check(&[]).is_err());
}

#[test]
fn gram_schmidt_reports_rank_loss() {
    let g = make_grid(16, 1.0).unwrap();
    let a = random_tangent(&g, 1);
    let mut fam = vec![a.clone(), a.scaled(2.0)];
    assert!(matches!(orthonormalize(&mut fam), Err(Error::DegenerateBasis { index: 1, .. })));
}

#[test]
fn gram_schmidt_factors_the_family() {
    let g = make_grid(16, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let orig: Vec<Tangent> = (0..6).map(|_| Tangent::random(&g, false, &mut rng)).collect();
    let mut q = orig.clone();
    let r = orthonormalize(&mut q).unwrap();
    assert!(gram_deviation(&q) < 1e-12);
    for (j, o) in orig.iter().enumerate() {
        let mut rebuilt = Tangent::zeros(&g);
        for (i, qi) in q.iter().enumerate().take(j + 1) {
            rebuilt.axpy(r[(i, j)], qi);
        }
        assert!(dist(&rebuilt, o) <= 1e-12 * o.norm());
    }
}

#[test]
fn kaplan_yorke_cases() {
    assert_eq!(kaplan_yorke(&[-1.0, -2.0]), Some(0.0));
    assert_eq!(kaplan_yorke(&[0.5, 0.1]), None);
    let d = kaplan_yorke(&[-1.0, 1.0, -0.5]).unwrap();
    // sorted 1, -0.5, -1: S₂ = 0.5, next |μ₃| = 1
    assert!((d - 2.5).abs() < 1e-15);
}

fn rotate(fam: &mut [Tangent], rng: &mut ChaCha8Rng) {
    for _ in 0..10 {
        let i = rng.gen_range(0..fam.len());
        let j = rng.gen_range(0..fam.len());
        if i == j {
            continue;
        }
        let th: f64 = rng.gen_range(0.0..2.0 * PI);
        let (a, b) = (fam[i].clone(), fam[j].clone());
        let mut ni = a.scaled(th.cos());
        ni.axpy(-th.sin(), &b);
        let mut nj = a.scaled(th.sin());
        nj.axpy(th.cos(), &b);
        fam[i] = ni;
        fam[j] = nj;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tangent_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let p = Params::new(0.1, 0.05, 0.2).unwrap();
        let base = random_state(&g, seed);
        let x = random_tangent(&g, seed + 1);
        let y = random_tangent(&g, seed + 2);
        let mut comb = x.scaled(a);
        comb.axpy(b, &y);
        let lhs = tangent_rhs(&base, &comb, &p).unwrap();
        let mut rhs_ = tangent_rhs(&base, &x, &p).unwrap().scaled(a);
        rhs_.axpy(b, &tangent_rhs(&base, &y, &p).unwrap());
        prop_assert!(dist(&lhs, &rhs_) <= 1e-12 * (rhs_.norm() + lhs.norm() + 1e-300));
    }

    #[test]
    fn schwarz_step_and_rotation_invariance(seed in 0u64..1000, n in 1usize..6) {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let mut fam = family(&g, n, seed);
        let lt = lieb_thirring_check(&fam).unwrap();
        prop_assert!((n * n) as f64 <= g.area() * lt.rho_sq * (1.0 + 1e-12));
        rotate(&mut fam, &mut ChaCha8Rng::seed_from_u64(seed));
        let lt2 = lieb_thirring_check(&fam).unwrap();
        prop_assert!((lt.ratio - lt2.ratio).abs() <= 1e-10 * lt.ratio);
    }
}

fn steady(g: &Arc<Grid>, f_norm: f64) -> Forcing {
    let spec = ProfileSpec {
        profile: ProfileKind::Steady,
        n: 1,
        big_n: 1,
        f_norm,
        g_norm: f_norm,
    };
    make_forcing(&spec, g, 5).unwrap()
}

#[test]
fn unforced_exponents_sit_below_the_energy_rate() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.1, 0.05, 0.2).unwrap();
    let k = compute_constants(&p, &g, &ConstantOverrides::default()).unwrap();
    let base = State::random(&g, 3, 0.1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let cfg = LyapunovConfig::new(4, 20.0, 1e-2);
    let r = lyapunov_spectrum(&base, &p, &Forcing::zero(&g), &cfg).unwrap();
    for mu in &r.exponents {
        assert!(*mu <= -k.k2() * 0.95, "{:?} vs -k2 = {}", r.exponents, -k.k2());
    }
    assert!(r.exponents.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(r.kaplan_yorke, Some(0.0));
}

#[test]
fn exponent_sum_tracks_the_trace_average() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.05, 0.02, 0.05).unwrap();
    let forcing = steady(&g, 0.5);
    let spin = simulate(&random_state(&g, 3), &p, &forcing, &SimConfig { t_end: 10.0, dt: 1e-2, stride: 100 }, &mut []).unwrap();
    let cfg = LyapunovConfig::new(4, 10.0, 5e-3);
    let r = lyapunov_spectrum(&spin.final_state, &p, &forcing, &cfg).unwrap();
    let rel = (r.exponent_sum - r.trace_average).abs() / r.trace_average.abs();
    assert!(rel < 0.02, "sum {} vs trace {}", r.exponent_sum, r.trace_average);
    assert_eq!(r.partial_sums.len(), 4);
    assert!(r.trace.iter().all(|s| s.terms.h1_sum > 0.0));
}

#[test]
fn velocity_block_ignores_microrotation_without_coupling() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.05, 0.0, 0.1).unwrap();
    let spec = ProfileSpec {
        profile: ProfileKind::Steady,
        n: 1,
        big_n: 1,
        f_norm: 0.5,
        g_norm: 0.0,
    };
    let forcing = make_forcing(&spec, &g, 5).unwrap();
    let a = random_state(&g, 1);
    let mut b = a.clone();
    b.omega = ScalarField::zeros(&g);
    let mut cfg = LyapunovConfig::new(3, 5.0, 1e-2);
    cfg.velocity_only = true;
    let ra = lyapunov_spectrum(&a, &p, &forcing, &cfg).unwrap();
    let rb = lyapunov_spectrum(&b, &p, &forcing, &cfg).unwrap();
    for (x, y) in ra.exponents.iter().zip(&rb.exponents) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn spectrum_rejects_bad_configs() {
    let g = make_grid(8, 1.0).unwrap();
    let p = Params::new(0.1, 0.05, 0.2).unwrap();
    let s = random_state(&g, 1);
    let f = Forcing::zero(&g);
    let mut cfg = LyapunovConfig::new(2, 1.0, 1e-2);
    cfg.reorth_interval = 0.015;
    assert!(lyapunov_spectrum(&s, &p, &f, &cfg).is_err());
    let cfg = LyapunovConfig::new(2 * g.resolved_prefix() + 1, 1.0, 1e-2);
    assert!(matches!(lyapunov_spectrum(&s, &p, &f, &cfg), Err(Error::ModeOutOfRange { .. })));
    let cfg = LyapunovConfig::new(0, 1.0, 1e-2);
    assert!(lyapunov_spectrum(&s, &p, &f, &cfg).is_err());
}

#[test]
fn trace_audit_with_fitted_constant() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let p = Params::new(0.1, 0.05, 0.1).unwrap();
    let forcing = steady(&g, 0.3);
    let k = compute_constants(&p, &g, &ConstantOverrides::default()).unwrap();
    let spin = simulate(&random_state(&g, 2), &p, &forcing, &SimConfig { t_end: 20.0, dt: 1e-2, stride: 100 }, &mut []).unwrap();
    let cfg = LyapunovConfig::new(4, 5.0, 1e-2);
    let r = lyapunov_spectrum(&spin.final_state, &p, &forcing, &cfg).unwrap();
    let audit = audit_trace(&r, &k, r.c0_fitted, forcing.l2_sq(0.0));
    assert!(audit.pointwise_holds, "{audit:?}");
    assert!(audit.average_holds, "{audit:?}");
    let (series, avg) = trace_pn(&spin.final_state, &p, &forcing, &cfg).unwrap();
    assert_eq!(series.len(), r.trace.len());
    assert_eq!(avg, r.trace_average);
}
