//! Tangent-linear dynamics, Lyapunov exponents by repeated Gram–Schmidt,
//! Kaplan–Yorke dimension and the trace of the linearization on evolving
//! `N`-dimensional subspaces.

mod basis;
mod spectrum;
mod tangent;

pub use basis::{gram_deviation, kaplan_yorke, lieb_thirring_check, orthonormalize, LiebThirring};
pub use spectrum::{
    audit_trace, lyapunov_spectrum, trace_pn, trace_terms, LyapunovConfig, LyapunovReport,
    TangentState, TraceAudit, TraceSample, TraceTerms,
};
pub use tangent::{tangent_rhs, Tangent};
