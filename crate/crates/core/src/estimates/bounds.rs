use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ProfileKind, ProfileSpec};
use crate::error::{Error, Result};
use crate::spectral::Grid;

use super::constants::Constants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModesMethod {
    /// Ceiling of the closed-form right side, which uses the growth constant `d`.
    ClosedForm,
    /// Least `m` whose next eigenvalue clears the threshold in the table.
    ExactEigenvalues,
}

impl FromStr for ModesMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(ModesMethod::ClosedForm),
            "exact_eigenvalues" => Ok(ModesMethod::ExactEigenvalues),
            _ => Err(Error::UnknownKind {
                what: "modes method",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for ModesMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModesMethod::ClosedForm => "closed_form",
            ModesMethod::ExactEigenvalues => "exact_eigenvalues",
        })
    }
}

/// `ceil` that ignores relative rounding noise below `1e-12`.
fn ceil_clean(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn to_count(x: f64) -> Result<usize> {
    if !x.is_finite() || x > usize::MAX as f64 {
        return Err(Error::InvalidParameter(format!("bound {x} is not representable")));
    }
    Ok(x.max(0.0) as usize)
}

/// Threshold `X` such that modes are determining once `λ_{m+1} > X`:
/// `X = 16ν_r²/(αk₁) + 8c₁²F̃₋₁²/(k₃k₁³)`.
pub fn modes_threshold(k: &Constants, f_tilde_minus1: f64) -> f64 {
    let p = &k.params;
    let k1 = k.k1();
    16.0 * p.nu_r.powi(2) / (p.alpha * k1)
        + 8.0 * k.c1.powi(2) * f_tilde_minus1.powi(2) / (k.k3_modes() * k1.powi(3))
}

/// Number of determining modes.
pub fn modes_bound(
    k: &Constants,
    f_tilde_minus1: f64,
    method: ModesMethod,
    grid: &Grid,
) -> Result<usize> {
    let x = modes_threshold(k, f_tilde_minus1);
    match method {
        ModesMethod::ClosedForm => to_count(ceil_clean(x / (k.d * k.lambda1))),
        ModesMethod::ExactEigenvalues => {
            // k₁λ_{m+1} > 16ν_r²/α + 8c₁²F̃₋₁²/(k₁²k₃) is λ_{m+1} > X
            grid.modes()
                .iter()
                .position(|m| m.eigenvalue > x)
                .ok_or(Error::ModeOutOfRange {
                    m: grid.mode_count() + 1,
                    max: grid.mode_count(),
                })
        }
    }
}

/// `F̃₋₁²` implied by a forcing profile, exact or as a bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileDual {
    Exact { f_tilde_minus1_sq: f64 },
    Bracket { lo: f64, hi: f64 },
}

/// Determining-mode count for a profile: one value, or an interval when the
/// profile only brackets `F̃₋₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryBound {
    pub dual: ProfileDual,
    pub m_lo: usize,
    pub m_hi: usize,
}

/// `F̃₋₁²` for a profile whose total strength is `F̃`.
pub fn profile_dual_norm_sq(spec: &ProfileSpec, f_tilde: f64, grid: &Grid) -> Result<ProfileDual> {
    let top = spec.top_mode();
    if top == 0 || top > grid.mode_count() {
        return Err(Error::InvalidProfile(format!(
            "mode {top} outside the table of {} modes",
            grid.mode_count()
        )));
    }
    let f2 = f_tilde * f_tilde;
    let inv = |j: usize| 1.0 / grid.lambda(j);
    if spec.profile == ProfileKind::Band {
        if spec.n == 0 || spec.n > spec.big_n {
            return Err(Error::InvalidProfile(format!(
                "band needs 1 <= n <= N, got n={}, N={}",
                spec.n, spec.big_n
            )));
        }
        return Ok(ProfileDual::Bracket {
            lo: f2 * inv(spec.big_n),
            hi: f2 * inv(spec.n),
        });
    }
    // the remaining laws are deterministic, so no generator is consumed
    let mut unused = rand::rngs::mock::StepRng::new(0, 0);
    let w = spec.weights(&mut unused)?;
    let sum: f64 = w.iter().map(|&(j, wj)| wj * inv(j)).sum();
    Ok(ProfileDual::Exact {
        f_tilde_minus1_sq: f2 * sum,
    })
}

pub fn corollary_modes_bound(
    spec: &ProfileSpec,
    k: &Constants,
    f_tilde: f64,
    method: ModesMethod,
    grid: &Grid,
) -> Result<CorollaryBound> {
    let dual = profile_dual_norm_sq(spec, f_tilde, grid)?;
    let (lo, hi) = match dual {
        ProfileDual::Exact { f_tilde_minus1_sq } => (f_tilde_minus1_sq, f_tilde_minus1_sq),
        ProfileDual::Bracket { lo, hi } => (lo, hi),
    };
    Ok(CorollaryBound {
        dual,
        m_lo: modes_bound(k, lo.sqrt(), method, grid)?,
        m_hi: modes_bound(k, hi.sqrt(), method, grid)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodesBound {
    /// Right side of the node-count condition before rounding.
    pub rhs: f64,
    /// `max(1, ceil(rhs))`
    pub minimum: u64,
    /// Smallest perfect square `s² ≥ minimum`.
    pub nodes: u64,
    pub per_side: u64,
    pub saturated: bool,
}

/// Right side of the determining-nodes condition
/// `N ≥ c/(λ₁k₁)·{8ν_r²/α − 2ν_r + (c₁²c^½/(λ₁ν) + c₁/α)·(…F̃² + …F̃⁶E) + 16c₁⁴ĉ₁/(λ₁ανk₁k₂)F̃⁴E}`
/// with `E = exp(ĉ₂ + ĉ₃F̃⁴)`.
pub fn nodes_rhs(k: &Constants, f_tilde: f64) -> f64 {
    let p = &k.params;
    let (l1, k1, k2) = (k.lambda1, k.k1(), k.k2());
    let (nu, nr, a) = (p.nu, p.nu_r, p.alpha);
    let e = k.growth_factor(f_tilde);
    let f2 = f_tilde * f_tilde;
    let lead = k.c1.powi(2) * k.c.sqrt() / (l1 * nu) + k.c1 / a;
    let avg = (5.0 * a * k2 + 32.0 * nr * nr) / (a * k1 * k1 * k2) * f2
        + 16.0 * k.big_c * k.chat1() / (a * nu * k1 * k1 * k2.powi(3)) * f2.powi(3) * e;
    let h1 = 16.0 * k.c1.powi(4) * k.chat1() / (l1 * a * nu * k1 * k2) * f2 * f2 * e;
    k.c / (l1 * k1) * (8.0 * nr * nr / a - 2.0 * nr + lead * avg + h1)
}

/// Never fails: counts beyond `u64` range saturate and set `saturated`.
pub fn nodes_bound(k: &Constants, f_tilde: f64) -> NodesBound {
    let rhs = nodes_rhs(k, f_tilde);
    const MAX_SIDE: u64 = u32::MAX as u64;
    let raw = ceil_clean(rhs).max(1.0);
    // `as` saturates, and NaN cannot reach here past `max`
    let minimum = raw as u64;
    let saturated = raw >= (MAX_SIDE * MAX_SIDE) as f64;
    let mut s = ((minimum as f64).sqrt().floor() as u64).clamp(1, MAX_SIDE);
    while s < MAX_SIDE && s * s < minimum {
        s += 1;
    }
    while s > 1 && (s - 1) * (s - 1) >= minimum {
        s -= 1;
    }
    NodesBound {
        rhs,
        minimum,
        nodes: s * s,
        per_side: s,
        saturated,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorBound {
    /// `2C₀(k₁³k₂)^{-½}(|f|²+|g|²)^½`
    pub value: f64,
    /// The integer with `N − 1 < value ≤ N`.
    pub n: u64,
    pub hausdorff: u64,
    pub fractal: u64,
}

pub fn attractor_bound(k: &Constants, f_norm: f64, g_norm: f64) -> AttractorBound {
    let value = 2.0 * k.c0 * (k.k1().powi(3) * k.k2()).powf(-0.5) * (f_norm * f_norm + g_norm * g_norm).sqrt();
    let n = ceil_clean(value).max(0.0) as u64;
    AttractorBound {
        value,
        n,
        hausdorff: n,
        fractal: 2 * n,
    }
}

/// `κ₁ = k₁/(2C₀|Q|)`
pub fn kappa1(k: &Constants) -> f64 {
    k.k1() / (2.0 * k.c0 * k.area)
}

/// `κ₂ = C₀[G]²/(k₁²k₂)` with `[G]² = |f|² + |g|²`.
pub fn kappa2(k: &Constants, g_sq: f64) -> f64 {
    k.c0 * g_sq / (k.k1().powi(2) * k.k2())
}

/// Time-average bounds: `2F̃²/(k₁k₂)` for the H¹ energy.
pub fn h1_average_bound(k: &Constants, f_tilde: f64) -> f64 {
    2.0 * f_tilde.powi(2) / (k.k1() * k.k2())
}

/// `2F̃₋₁²/k₁²`
pub fn h1_average_bound_dual(k: &Constants, f_tilde_minus1: f64) -> f64 {
    2.0 * f_tilde_minus1.powi(2) / k.k1().powi(2)
}

/// `(5/k₁² + 32ν_r²/(αk₁²k₂))F̃² + 16Cĉ₁/(α²νk₁²k₂³)F̃⁶exp(ĉ₂+ĉ₃F̃⁴)`
pub fn da_average_bound(k: &Constants, f_tilde: f64) -> f64 {
    let p = &k.params;
    let (k1, k2) = (k.k1(), k.k2());
    let f2 = f_tilde * f_tilde;
    (5.0 / (k1 * k1) + 32.0 * p.nu_r.powi(2) / (p.alpha * k1 * k1 * k2)) * f2
        + 16.0 * k.big_c * k.chat1() / (p.alpha.powi(2) * p.nu * k1 * k1 * k2.powi(3))
            * f2.powi(3)
            * k.growth_factor(f_tilde)
}

/// `ĉ₁F̃²exp(ĉ₂+ĉ₃F̃⁴)`
pub fn h1_pointwise_bound(k: &Constants, f_tilde: f64) -> f64 {
    k.chat1() * f_tilde.powi(2) * k.growth_factor(f_tilde)
}

/// `2F̃²/k₂²`
pub fn absorbing_ball_radius_sq(k: &Constants, f_tilde: f64) -> f64 {
    2.0 * f_tilde.powi(2) / k.k2().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Params;
    use crate::estimates::{compute_constants, ConstantOverrides};
    use crate::spectral::make_grid;
    use std::f64::consts::PI;

    fn unit(nu_r: f64) -> (Constants, std::sync::Arc<Grid>) {
        let g = make_grid(32, 2.0 * PI).unwrap();
        let o = ConstantOverrides {
            c1: Some(1.0),
            big_c: Some(1.0),
            c0: Some(1.0),
            c: Some(1.0),
            d: Some(1.0),
            r: Some(1.0),
        };
        (compute_constants(&Params::new(1.0, nu_r, 1.0).unwrap(), &g, &o).unwrap(), g)
    }

    #[test]
    fn trivial_cases() {
        let (k, g) = unit(0.0);
        assert_eq!(modes_bound(&k, 0.0, ModesMethod::ClosedForm, &g).unwrap(), 0);
        assert_eq!(modes_bound(&k, 0.0, ModesMethod::ExactEigenvalues, &g).unwrap(), 0);
        assert_eq!(nodes_bound(&k, 0.0).nodes, 1);
        assert_eq!(attractor_bound(&k, 0.0, 0.0).n, 0);
    }

    #[test]
    fn perfect_square_rounding() {
        let (k, _) = unit(0.0);
        let b = nodes_bound(&k, 1.0);
        assert_eq!(b.per_side * b.per_side, b.nodes);
        assert!(b.nodes >= b.minimum && (b.per_side - 1).pow(2) < b.minimum);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("closed_form".parse::<ModesMethod>().unwrap(), ModesMethod::ClosedForm);
        assert!("guess".parse::<ModesMethod>().is_err());
    }
}
