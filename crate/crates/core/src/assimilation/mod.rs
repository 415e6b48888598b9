//! Twin experiments for determining modes and nodes, the generalized
//! Gronwall hypothesis check and exponential-rate fitting.

mod fit;
mod gronwall;
mod sync;

pub use fit::{fit_decay_rate, DecayFit};
pub use gronwall::{check_gronwall_conditions, gamma, GronwallReport, GronwallWindow};
pub use sync::{
    default_nudging_gain, run_mode_sync, run_node_sync, run_sync, Observation, SyncConfig,
    SyncReport, SyncSeries, SyncSummary,
};
