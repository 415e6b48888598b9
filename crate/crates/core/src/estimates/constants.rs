use serde::{Deserialize, Serialize};

use crate::dynamics::{Forcing, Params};
use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Optional values for the constants the theory leaves unquantified.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    pub c1: Option<f64>,
    #[serde(rename = "C")]
    pub big_c: Option<f64>,
    #[serde(rename = "C0")]
    pub c0: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub r: Option<f64>,
}

/// Ladyzhenskaya constant `(6/π)^{1/4}`.
pub fn ladyzhenskaya_c1() -> f64 {
    (6.0 / std::f64::consts::PI).powf(0.25)
}

/// `min_j λ_j / (λ₁ j)` over the resolved part of the eigenvalue table.
pub fn empirical_growth_constant(grid: &Grid) -> f64 {
    let l1 = grid.lambda1();
    (1..=grid.resolved_prefix().max(1))
        .map(|j| grid.lambda(j) / (l1 * j as f64))
        .fold(f64::INFINITY, f64::min)
}

/// Physical parameters, domain data and the free constants. Everything
/// derived (`k₁`, `k₂`, `ĉᵢ`, …) is computed on access.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub params: Params,
    pub lambda1: f64,
    /// `|Q|`
    pub area: f64,
    pub c1: f64,
    pub big_c: f64,
    pub c0: f64,
    pub c: f64,
    pub d: f64,
    pub r: f64,
}

/// Flattened view of [`Constants`] for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRecord {
    pub nu: f64,
    pub nu_r: f64,
    pub alpha: f64,
    pub lambda1: f64,
    pub area: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3_modes: f64,
    pub k3_nodes: f64,
    pub c1: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub c: f64,
    pub d: f64,
    pub r: f64,
    pub chat1: f64,
    pub chat2: f64,
    pub chat3: f64,
}

pub fn compute_constants(
    params: &Params,
    grid: &Grid,
    overrides: &ConstantOverrides,
) -> Result<Constants> {
    params.validate()?;
    let pick = |name: &str, v: Option<f64>, default: f64| -> Result<f64> {
        match v {
            None => Ok(default),
            Some(x) if x.is_finite() && x > 0.0 => Ok(x),
            Some(x) => Err(Error::InvalidParameter(format!("constant {name} must be positive, got {x}"))),
        }
    };
    Ok(Constants {
        params: *params,
        lambda1: grid.lambda1(),
        area: grid.area(),
        c1: pick("c1", overrides.c1, ladyzhenskaya_c1())?,
        big_c: pick("C", overrides.big_c, 1.0)?,
        c0: pick("C0", overrides.c0, 1.0)?,
        c: pick("c", overrides.c, 1.0)?,
        d: pick("d", overrides.d, empirical_growth_constant(grid))?,
        r: pick("r", overrides.r, 1.0)?,
    })
}

impl Constants {
    pub fn k1(&self) -> f64 {
        self.params.nu.min(self.params.alpha)
    }

    pub fn k2(&self) -> f64 {
        self.k1() * self.lambda1
    }

    /// `min(ν+ν_r, α)`, used by the determining-modes bound.
    pub fn k3_modes(&self) -> f64 {
        (self.params.nu + self.params.nu_r).min(self.params.alpha)
    }

    /// `min(ν_r, α)`, defined alongside the determining-nodes bound.
    pub fn k3_nodes(&self) -> f64 {
        self.params.nu_r.min(self.params.alpha)
    }

    /// `ĉ₁ = (2 + 3k₂r)/(k₁k₂)`
    pub fn chat1(&self) -> f64 {
        (2.0 + 3.0 * self.k2() * self.r) / (self.k1() * self.k2())
    }

    /// `ĉ₂ = 8ν_r²r/α`
    pub fn chat2(&self) -> f64 {
        8.0 * self.params.nu_r.powi(2) * self.r / self.params.alpha
    }

    /// `ĉ₃ = 8Cr/(α²νk₁k₂³)`
    pub fn chat3(&self) -> f64 {
        let p = &self.params;
        8.0 * self.big_c * self.r / (p.alpha.powi(2) * p.nu * self.k1() * self.k2().powi(3))
    }

    /// `exp(ĉ₂ + ĉ₃F̃⁴)`
    pub fn growth_factor(&self, f_tilde: f64) -> f64 {
        (self.chat2() + self.chat3() * f_tilde.powi(4)).exp()
    }

    pub fn record(&self) -> ConstantsRecord {
        ConstantsRecord {
            nu: self.params.nu,
            nu_r: self.params.nu_r,
            alpha: self.params.alpha,
            lambda1: self.lambda1,
            area: self.area,
            k1: self.k1(),
            k2: self.k2(),
            k3_modes: self.k3_modes(),
            k3_nodes: self.k3_nodes(),
            c1: self.c1,
            big_c: self.big_c,
            c0: self.c0,
            c: self.c,
            d: self.d,
            r: self.r,
            chat1: self.chat1(),
            chat2: self.chat2(),
            chat3: self.chat3(),
        }
    }
}

/// Asymptotic force strengths `F̃` and `F̃₋₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceStrength {
    pub f_tilde: f64,
    pub f_tilde_minus1: f64,
}

/// Exact for steady forcing; otherwise the maximum over the sample times.
pub fn force_strength(forcing: &Forcing, window: &[f64]) -> Result<ForceStrength> {
    if window.is_empty() {
        return Err(Error::InsufficientData("empty sampling window".into()));
    }
    let times: &[f64] = if forcing.is_steady() { &window[..1] } else { window };
    let mut fs = ForceStrength {
        f_tilde: 0.0,
        f_tilde_minus1: 0.0,
    };
    for &t in times {
        fs.f_tilde = fs.f_tilde.max(forcing.l2_sq(t).sqrt());
        fs.f_tilde_minus1 = fs.f_tilde_minus1.max(forcing.hminus1_sq(t).sqrt());
    }
    Ok(fs)
}
