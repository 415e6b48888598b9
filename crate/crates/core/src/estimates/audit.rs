use serde::{Deserialize, Serialize};

use crate::dynamics::Sample;
use crate::error::{Error, Result};

use super::bounds::{
    absorbing_ball_radius_sq, da_average_bound, h1_average_bound, h1_average_bound_dual,
    h1_pointwise_bound,
};
use super::constants::{Constants, ForceStrength};

/// One audited inequality `left ≤ right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub left: f64,
    pub right: f64,
    /// `right − left`
    pub margin: f64,
    pub violated: bool,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    fn new(name: &str, left: f64, right: f64, allowed: f64) -> Self {
        Self {
            check_name: name.to_string(),
            left,
            right,
            margin: right - left,
            violated: left > allowed,
            config_hash: String::new(),
            note: None,
        }
    }

    pub fn with_hash(mut self, hash: &str) -> Self {
        self.config_hash = hash.to_string();
        self
    }
}

/// Tolerances for checking continuous-time inequalities on sampled
/// trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Multiplicative slack on the right side.
    pub rel_slack: f64,
    /// Integrator time step; the additive slack is `dt · max E`.
    pub dt: f64,
    /// Length of the window the energy must stay flat over to end the
    /// transient.
    pub transient_horizon: f64,
    /// Relative band around the window mean counted as flat.
    pub transient_band: f64,
    /// Shortest post-transient window accepted for time averages.
    pub min_average_window: f64,
}

impl AuditConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            rel_slack: 0.05,
            dt,
            transient_horizon: 5.0,
            transient_band: 0.02,
            min_average_window: 1.0,
        }
    }

    fn additive(&self, samples: &[Sample]) -> f64 {
        self.additive_for(samples, Sample::energy)
    }

    fn additive_for(&self, samples: &[Sample], q: impl Fn(&Sample) -> f64) -> f64 {
        self.dt * samples.iter().map(q).fold(0.0, f64::max)
    }

    fn allowed(&self, right: f64, additive: f64) -> f64 {
        right * (1.0 + self.rel_slack) + additive
    }
}

fn require(samples: &[Sample], min: usize) -> Result<()> {
    if samples.len() < min {
        return Err(Error::InsufficientData(format!(
            "need at least {min} samples, got {}",
            samples.len()
        )));
    }
    for s in samples {
        let all = [s.t, s.u_l2, s.omega_l2, s.u_h1, s.omega_h1, s.u_da, s.omega_da, s.f_l2, s.g_l2, s.f_hm1, s.g_hm1];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InsufficientData(format!("non-finite sample at t = {}", s.t)));
        }
    }
    Ok(())
}

/// Index of the first sample of the first window of length `horizon` in
/// which every energy lies within `band` of the window mean, or below the
/// additive slack. `None` if the run never settles.
pub fn detect_transient(samples: &[Sample], audit: &AuditConfig) -> Option<usize> {
    let floor = audit.additive(samples);
    let mut end = 0;
    for start in 0..samples.len() {
        let t0 = samples[start].t;
        while end < samples.len() && samples[end].t < t0 + audit.transient_horizon {
            end += 1;
        }
        if end == samples.len() && samples[end - 1].t < t0 + audit.transient_horizon - 1e-9 {
            return None;
        }
        let w = &samples[start..end.max(start + 1)];
        if w.iter().all(|s| s.energy() <= floor) {
            return Some(start);
        }
        let mean = w.iter().map(Sample::energy).sum::<f64>() / w.len() as f64;
        if w.iter().all(|s| (s.energy() - mean).abs() <= audit.transient_band * mean) {
            return Some(start);
        }
    }
    None
}

/// Integrated energy inequality
/// `E(t) ≤ e^{−k₂(t−t₀)}E(t₀) + k₂⁻²(1 − e^{−k₂(t−t₀)}) sup(|f|²+|g|²)`
/// over every ordered sample pair. `left`/`right` belong to the worst pair.
pub fn verify_energy_inequality(
    samples: &[Sample],
    k: &Constants,
    audit: &AuditConfig,
) -> Result<CheckRecord> {
    require(samples, 2)?;
    let k2 = k.k2();
    let add = audit.additive(samples);
    let mut worst = CheckRecord::new("energy_inequality", 0.0, 0.0, 0.0);
    let mut worst_score = f64::NEG_INFINITY;
    for i in 0..samples.len() {
        let e0 = samples[i].energy();
        let mut sup_f = samples[i].forcing_l2();
        for s in &samples[i + 1..] {
            sup_f = sup_f.max(s.forcing_l2());
            let decay = (-k2 * (s.t - samples[i].t)).exp();
            let right = decay * e0 + (1.0 - decay) * sup_f / (k2 * k2);
            let allowed = audit.allowed(right, add);
            let score = match (s.energy(), allowed) {
                (e, a) if a > 0.0 => e / a,
                (e, _) if e > 0.0 => f64::INFINITY,
                _ => 0.0,
            };
            if score > worst_score {
                worst_score = score;
                worst = CheckRecord::new("energy_inequality", s.energy(), right, allowed);
            }
        }
    }
    worst.note = Some(format!("worst left/allowed {worst_score:.6}"));
    Ok(worst)
}

/// Absorbing-ball bound `E ≤ 2F̃²/k₂²` after the detected transient.
pub fn verify_absorbing_ball(
    samples: &[Sample],
    k: &Constants,
    fs: &ForceStrength,
    audit: &AuditConfig,
) -> Result<CheckRecord> {
    require(samples, 1)?;
    let right = absorbing_ball_radius_sq(k, fs.f_tilde);
    let add = audit.additive(samples);
    match detect_transient(samples, audit) {
        None => {
            let mut r = CheckRecord::new("absorbing_ball", f64::NAN, right, f64::INFINITY);
            r.note = Some("trajectory too short to leave the transient".into());
            Ok(r)
        }
        Some(i) => {
            let left = samples[i..].iter().map(Sample::energy).fold(0.0, f64::max);
            let mut r = CheckRecord::new("absorbing_ball", left, right, audit.allowed(right, add));
            r.note = Some(format!("transient ends at t = {}", samples[i].t));
            Ok(r)
        }
    }
}

/// Trapezoid average of `f` over the samples.
fn time_average(samples: &[Sample], f: impl Fn(&Sample) -> f64) -> f64 {
    let span = samples[samples.len() - 1].t - samples[0].t;
    if span <= 0.0 {
        return f(&samples[0]);
    }
    samples
        .windows(2)
        .map(|w| 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t))
        .sum::<f64>()
        / span
}

/// Time averages over the post-transient segment: H¹ energy against
/// `2F̃²/(k₁k₂)` and `2F̃₋₁²/k₁²`, and the `D(A)` energy against its bound.
pub fn verify_time_averages(
    samples: &[Sample],
    k: &Constants,
    fs: &ForceStrength,
    audit: &AuditConfig,
) -> Result<Vec<CheckRecord>> {
    require(samples, 2)?;
    let start = detect_transient(samples, audit).ok_or_else(|| {
        Error::InsufficientData("trajectory never leaves the transient".into())
    })?;
    let seg = &samples[start..];
    let window = seg[seg.len() - 1].t - seg[0].t;
    if window < audit.min_average_window || seg.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "post-transient window {window} shorter than {}",
            audit.min_average_window
        )));
    }
    let h1 = time_average(seg, Sample::h1);
    let da = time_average(seg, Sample::da);
    let add_h1 = audit.additive_for(samples, Sample::h1);
    let add_da = audit.additive_for(samples, Sample::da);
    let checks = [
        ("h1_average", h1, h1_average_bound(k, fs.f_tilde), add_h1),
        ("h1_average_dual", h1, h1_average_bound_dual(k, fs.f_tilde_minus1), add_h1),
        ("da_average", da, da_average_bound(k, fs.f_tilde), add_da),
    ];
    Ok(checks
        .into_iter()
        .map(|(name, left, right, add)| {
            let mut r = CheckRecord::new(name, left, right, audit.allowed(right, add));
            r.note = Some(format!("window [{}, {}]", seg[0].t, seg[seg.len() - 1].t));
            r
        })
        .collect())
}

/// Pointwise `‖u‖² + ‖ω‖² ≤ ĉ₁F̃²exp(ĉ₂+ĉ₃F̃⁴)` after the transient.
pub fn verify_h1_bound(
    samples: &[Sample],
    k: &Constants,
    fs: &ForceStrength,
    audit: &AuditConfig,
) -> Result<CheckRecord> {
    require(samples, 1)?;
    let right = h1_pointwise_bound(k, fs.f_tilde);
    let start = detect_transient(samples, audit);
    let seg = &samples[start.unwrap_or(samples.len() - 1)..];
    let left = seg.iter().map(Sample::h1).fold(0.0, f64::max);
    let add = audit.additive_for(samples, Sample::h1);
    let mut r = CheckRecord::new("h1_pointwise", left, right, audit.allowed(right, add));
    if start.is_none() {
        r.note = Some("no settled window; checked the final sample only".into());
    }
    Ok(r)
}
