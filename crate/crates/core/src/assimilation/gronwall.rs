use serde::{Deserialize, Serialize};

use crate::dynamics::Sample;
use crate::error::{Error, Result};
use crate::estimates::Constants;
use crate::spectral::Grid;

/// Averages of `γ` and of its negative part over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GronwallWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub gamma_mean: f64,
    pub gamma_minus_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub m: usize,
    pub lambda_next: f64,
    pub windows: Vec<GronwallWindow>,
    /// Smallest window mean of `γ`: the proxy for the liminf condition.
    pub liminf_proxy: f64,
    /// Largest window mean of `γ⁻`: the proxy for the limsup condition.
    pub limsup_minus_proxy: f64,
    pub l1_holds: bool,
    pub l2_holds: bool,
}

/// `γ(t) = k₁λ_{m+1} − (4c₁²/k₃)(‖u‖² + ‖ω‖²) − 16ν_r²/α`.
pub fn gamma(k: &Constants, lambda_next: f64, h1: f64) -> f64 {
    k.k1() * lambda_next - 4.0 * k.c1.powi(2) / k.k3_modes() * h1
        - 16.0 * k.params.nu_r.powi(2) / k.params.alpha
}

/// Windowed averages of `γ` along a reference trajectory, on consecutive
/// windows of length `window`.
pub fn check_gronwall_conditions(
    samples: &[Sample],
    k: &Constants,
    m: usize,
    grid: &Grid,
    window: f64,
) -> Result<GronwallReport> {
    if m >= grid.mode_count() {
        return Err(Error::ModeOutOfRange {
            m,
            max: grid.mode_count() - 1,
        });
    }
    if samples.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let span = samples[samples.len() - 1].t - samples[0].t;
    if !(window > 0.0) || window > span {
        return Err(Error::InsufficientData(format!(
            "window {window} does not fit in trajectory span {span}"
        )));
    }
    let lambda_next = grid.lambda(m + 1);
    let g = |s: &Sample| gamma(k, lambda_next, s.h1());
    let mut windows = Vec::new();
    let mut start = 0;
    while start + 1 < samples.len() {
        let t0 = samples[start].t;
        let mut end = start;
        while end + 1 < samples.len() && samples[end + 1].t <= t0 + window + 1e-9 * window {
            end += 1;
        }
        if samples[end].t - t0 < window * (1.0 - 1e-9) {
            break;
        }
        let (mut a, mut b) = (0.0, 0.0);
        for w in samples[start..=end].windows(2) {
            let dt = w[1].t - w[0].t;
            a += 0.5 * (g(&w[0]) + g(&w[1])) * dt;
            b += 0.5 * (g(&w[0]).min(0.0) + g(&w[1]).min(0.0)).abs() * dt;
        }
        let len = samples[end].t - t0;
        windows.push(GronwallWindow {
            t_start: t0,
            t_end: samples[end].t,
            gamma_mean: a / len,
            gamma_minus_mean: b / len,
        });
        start = end;
    }
    let liminf_proxy = windows.iter().map(|w| w.gamma_mean).fold(f64::INFINITY, f64::min);
    let limsup_minus_proxy = windows.iter().map(|w| w.gamma_minus_mean).fold(0.0, f64::max);
    Ok(GronwallReport {
        m,
        lambda_next,
        l1_holds: liminf_proxy > 0.0,
        l2_holds: limsup_minus_proxy.is_finite(),
        windows,
        liminf_proxy,
        limsup_minus_proxy,
    })
}
