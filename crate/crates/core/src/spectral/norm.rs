use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    /// `|f|`
    L2,
    /// `‖f‖ = |∇f|`
    H1,
    /// dual norm `‖f‖_{H⁻¹}`
    Hminus1,
    /// `|Af|`
    DA,
}

impl NormKind {
    fn weight(self, lambda: f64) -> f64 {
        match self {
            NormKind::L2 => 1.0,
            NormKind::H1 => lambda,
            NormKind::Hminus1 => {
                if lambda == 0.0 {
                    0.0
                } else {
                    1.0 / lambda
                }
            }
            NormKind::DA => lambda * lambda,
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(NormKind::L2),
            "h1" => Ok(NormKind::H1),
            "hminus1" | "h-1" => Ok(NormKind::Hminus1),
            "da" => Ok(NormKind::DA),
            _ => Err(Error::UnknownKind {
                what: "norm kind",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormKind::L2 => "L2",
            NormKind::H1 => "H1",
            NormKind::Hminus1 => "Hminus1",
            NormKind::DA => "DA",
        };
        f.write_str(s)
    }
}

/// Fields that expose their spectrum for diagonal quadratic forms.
pub trait SpectralEnergy {
    fn grid(&self) -> &Grid;
    /// `|Q| Σ_k w(λ(k)) |c_k|²`, summed over components.
    fn diagonal_form(&self, w: &dyn Fn(f64) -> f64) -> f64;
}

impl SpectralEnergy for ScalarField {
    fn grid(&self) -> &Grid {
        ScalarField::grid(self)
    }
    fn diagonal_form(&self, w: &dyn Fn(f64) -> f64) -> f64 {
        let g = ScalarField::grid(self).clone();
        self.weighted_energy(|i| w(g.eigenvalue_at(i)))
    }
}

impl SpectralEnergy for VectorField {
    fn grid(&self) -> &Grid {
        VectorField::grid(self)
    }
    fn diagonal_form(&self, w: &dyn Fn(f64) -> f64) -> f64 {
        self.x.diagonal_form(w) + self.y.diagonal_form(w)
    }
}

/// Squared norm of the requested kind.
pub fn norm_sq<F: SpectralEnergy + ?Sized>(f: &F, kind: NormKind) -> f64 {
    f.diagonal_form(&|l| kind.weight(l))
}

pub fn norm<F: SpectralEnergy + ?Sized>(f: &F, kind: NormKind) -> f64 {
    norm_sq(f, kind).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_field_has_zero_norms() {
        let g = make_grid(8, 1.0).unwrap();
        let z = VectorField::zeros(&g);
        for kind in [NormKind::L2, NormKind::H1, NormKind::Hminus1, NormKind::DA] {
            assert_eq!(norm(&z, kind), 0.0);
        }
    }

    #[test]
    fn single_mode_ratio() {
        let g = make_grid(16, 1.7).unwrap();
        let f = ScalarField::single_mode(&g, (2, -1), Complex64::new(0.3, 0.9)).unwrap();
        let lambda = g.lambda1() * 5.0;
        let l2 = norm(&f, NormKind::L2);
        assert!((norm(&f, NormKind::H1) - lambda.sqrt() * l2).abs() < 1e-12 * l2 * lambda);
        assert!((norm(&f, NormKind::DA) - lambda * l2).abs() < 1e-12 * l2 * lambda);
        assert!((norm(&f, NormKind::Hminus1) - l2 / lambda.sqrt()).abs() < 1e-12 * l2);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("H1".parse::<NormKind>().unwrap(), NormKind::H1);
        assert!("H7".parse::<NormKind>().is_err());
    }

    #[test]
    fn l2_matches_physical_quadrature() {
        let g = make_grid(16, 2.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = ScalarField::random(&g, 7, &mut rng);
        let s = f.to_physical().unwrap();
        let quad = g.area() * s.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
        assert!((quad - norm_sq(&f, NormKind::L2)).abs() < 1e-12 * quad);
    }

    proptest! {
        #[test]
        fn poincare_inequality(seed in any::<u64>(), kmax in 1i64..7) {
            let g = make_grid(16, 1.3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::random(&g, kmax, &mut rng);
            let h1 = norm_sq(&f, NormKind::H1);
            let l2 = norm_sq(&f, NormKind::L2);
            prop_assert!(h1 >= g.lambda1() * l2 * (1.0 - 1e-14));
            let hm1 = norm_sq(&f, NormKind::Hminus1);
            prop_assert!(hm1 <= l2 / g.lambda1() * (1.0 + 1e-14));
        }
    }
}
