use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit `log y ≈ intercept + rate · t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-linear fit; 1 for a
    /// constant series.
    pub r_squared: f64,
}

pub fn fit_decay_rate(t: &[f64], y: &[f64]) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "time and value series differ in length ({} vs {})",
            t.len(),
            y.len()
        )));
    }
    if y.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 10 points, got {}",
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidParameter(format!("nonpositive value {bad} in fitted segment")));
    }
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|x| (x - mt).powi(2)).sum();
    let sxy: f64 = t.iter().zip(&ly).map(|(x, v)| (x - mt) * (v - my)).sum();
    let syy: f64 = ly.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all sample times coincide".into()));
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mt;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit {
        rate,
        intercept,
        r_squared,
    })
}
