//! Micropolar equations: parameters, forcing, right-hand side, IMEX time
//! stepping and checkpoints.

mod checkpoint;
mod forcing;
mod integrator;
mod params;
mod simulate;
mod state;

pub use checkpoint::{read_checkpoint, read_checkpoint_info, write_checkpoint, CheckpointInfo};
pub use forcing::{make_forcing, Envelope, Forcing, ForcingPart, ProfileKind, ProfileSpec};
pub use integrator::{rhs, step, Imex, Stepper};
pub use params::Params;
pub use simulate::{simulate, Observer, Sample, SimConfig, Trajectory};
pub use state::State;
