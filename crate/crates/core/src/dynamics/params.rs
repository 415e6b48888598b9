use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Viscosity coefficients of the micropolar system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Newtonian viscosity.
    pub nu: f64,
    /// Microrotation viscosity; zero gives Navier–Stokes for `u`.
    pub nu_r: f64,
    /// Angular viscosity.
    pub alpha: f64,
}

impl Params {
    pub fn new(nu: f64, nu_r: f64, alpha: f64) -> Result<Self> {
        let p = Self { nu, nu_r, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.nu_r.is_finite() && self.nu_r >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nu_r must be nonnegative, got {}",
                self.nu_r
            )));
        }
        Ok(())
    }

    /// Diagonal implicit rate for the velocity at eigenvalue `lambda`.
    pub(crate) fn velocity_rate(&self, lambda: f64) -> f64 {
        (self.nu + self.nu_r) * lambda
    }

    /// Diagonal implicit rate for the microrotation at eigenvalue `lambda`.
    pub(crate) fn rotation_rate(&self, lambda: f64) -> f64 {
        self.alpha * lambda + 4.0 * self.nu_r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Params::new(1.0, 0.0, 1.0).is_ok());
        assert!(Params::new(0.0, 0.0, 1.0).is_err());
        assert!(Params::new(1.0, -0.1, 1.0).is_err());
        assert!(Params::new(1.0, 0.1, f64::NAN).is_err());
    }
}
