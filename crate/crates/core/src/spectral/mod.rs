//! Periodic-torus spectral infrastructure.

mod field;
mod grid;
mod nodes;
mod norm;
mod ops;
mod trilinear;

pub use field::{ScalarField, VectorField};
pub(crate) use field::padded_integral;
pub use grid::{make_grid, Grid, Mode};
pub use nodes::{nodal_interpolant, nodal_sample, NodalObserver, NodeSet};
pub use norm::{norm, norm_sq, NormKind, SpectralEnergy};
pub use ops::{
    advect_scalar, advect_vector, apply_a, apply_a1, apply_a1_inverse, apply_a_inverse,
    galerkin_p, galerkin_p_scalar, galerkin_q, galerkin_q_scalar, leray_project, rot_scalar,
    rot_vec, GalerkinProjector,
};
pub(crate) use ops::{advect_scalar_with, advect_vector_with, VelocitySamples};
pub use trilinear::{trilinear_b, trilinear_b1};

/// Physical samples of a field.
pub fn transform_to_physical(f: &ScalarField) -> crate::Result<Vec<f64>> {
    f.to_physical()
}

/// Spectral coefficients of real samples.
pub fn transform_to_spectral(
    grid: &std::sync::Arc<Grid>,
    samples: &[f64],
) -> crate::Result<ScalarField> {
    ScalarField::from_physical(grid, samples)
}
