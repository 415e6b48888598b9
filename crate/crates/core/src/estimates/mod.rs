//! Derived constants, closed-form bounds and trajectory audits of the
//! a-priori inequalities.

mod audit;
mod bounds;
mod constants;

pub use audit::{
    detect_transient, verify_absorbing_ball, verify_energy_inequality, verify_h1_bound,
    verify_time_averages, AuditConfig, CheckRecord,
};
pub use bounds::{
    absorbing_ball_radius_sq, attractor_bound, corollary_modes_bound, da_average_bound,
    h1_average_bound, h1_average_bound_dual, h1_pointwise_bound, kappa1, kappa2, modes_bound,
    modes_threshold, nodes_bound, nodes_rhs, profile_dual_norm_sq, AttractorBound,
    CorollaryBound, ModesMethod, NodesBound, ProfileDual,
};
pub use constants::{
    compute_constants, empirical_growth_constant, force_strength, ladyzhenskaya_c1,
    ConstantOverrides, Constants, ConstantsRecord, ForceStrength,
};
