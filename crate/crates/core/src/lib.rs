//! Pseudo-spectral simulation and analysis of the two-dimensional micropolar
//! fluid equations on a periodic square.
//!
//! * [`spectral`]: grids, fields, operators, projectors, trilinear forms.
//! * [`dynamics`]: right-hand side, IMEX time stepping, forcing, checkpoints.
//! * [`estimates`]: derived constants, closed-form bounds, trajectory audits.
//! * [`assimilation`]: determining-mode and determining-node twin experiments.
//! * [`lyapunov`]: tangent dynamics, Lyapunov spectrum, trace functional.

pub mod assimilation;
pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod lyapunov;
pub mod spectral;

pub use error::{Error, Result};
