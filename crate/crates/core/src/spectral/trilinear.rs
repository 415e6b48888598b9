use super::field::{ScalarField, VectorField};
use super::ops::{advect_scalar_with, VelocitySamples};
use crate::error::{Error, Result};

fn require_dealiased(ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::NotDealiased)
    }
}

/// `b(u, v, w) = Σ_{i,j} ∫ u_i ∂_i v_j w_j dx`.
///
/// The product `u·∇v_j` is formed on the grid and truncated to the resolved
/// band, where it is exact for dealiased inputs; the final integral against
/// `w` is Parseval, so no quadrature error enters.
pub fn trilinear_b(u: &VectorField, v: &VectorField, w: &VectorField) -> Result<f64> {
    if !(u.same_grid(v) && v.same_grid(w)) {
        return Err(Error::GridMismatch("trilinear form arguments"));
    }
    require_dealiased(u.is_dealiased() && v.is_dealiased() && w.is_dealiased())?;
    let us = VelocitySamples::new(u);
    Ok(advect_scalar_with(&us, &v.x).inner(&w.x) + advect_scalar_with(&us, &v.y).inner(&w.y))
}

/// `b₁(u, ω, ψ) = Σ_i ∫ u_i ∂_i ω ψ dx`.
pub fn trilinear_b1(u: &VectorField, omega: &ScalarField, psi: &ScalarField) -> Result<f64> {
    if !(u.x.same_grid(omega) && omega.same_grid(psi)) {
        return Err(Error::GridMismatch("trilinear form arguments"));
    }
    require_dealiased(u.is_dealiased() && omega.is_dealiased() && psi.is_dealiased())?;
    let us = VelocitySamples::new(u);
    Ok(advect_scalar_with(&us, omega).inner(psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{apply_a, apply_a1, make_grid, norm, NormKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonality_on_small_grid() {
        let g = make_grid(16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = g.dealias_cutoff();
        let u = VectorField::random_solenoidal(&g, k, &mut rng);
        let v = VectorField::random(&g, k, &mut rng);
        let w = ScalarField::random(&g, k, &mut rng);
        let h1u = norm(&u, NormKind::H1);
        let h1v = norm(&v, NormKind::H1);
        assert!(trilinear_b(&u, &v, &v).unwrap().abs() <= 1e-10 * h1u * h1v * h1v);
        let au = apply_a(&u);
        assert!(trilinear_b(&u, &u, &au).unwrap().abs() <= 1e-10 * h1u * h1u * norm(&au, NormKind::L2));
        let h1w = norm(&w, NormKind::H1);
        assert!(trilinear_b1(&u, &w, &w).unwrap().abs() <= 1e-10 * h1u * h1w * h1w);
        // no analogue of the second identity for the scalar form
        assert!(trilinear_b1(&u, &w, &apply_a1(&w)).unwrap().abs() > 1e-6);
    }

    #[test]
    fn rejects_aliased_input() {
        let g = make_grid(8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = VectorField::random_solenoidal(&g, 3, &mut rng);
        assert!(matches!(trilinear_b(&u, &u, &u), Err(Error::NotDealiased)));
    }

    #[test]
    fn rejects_grid_mismatch() {
        let g1 = make_grid(8, 1.0).unwrap();
        let g2 = make_grid(8, 2.0).unwrap();
        let a = VectorField::zeros(&g1);
        let b = VectorField::zeros(&g2);
        assert!(matches!(trilinear_b(&a, &a, &b), Err(Error::GridMismatch(_))));
    }
}
