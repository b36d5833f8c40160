//! Random times on the simulation grid: construction (hitting, alternating
//! hitting, Cox), the thin-thick decomposition against a family of stopping
//! times, and avoidance diagnostics.

mod construct;
mod decompose;
mod time;

pub use construct::{
    alternating_hitting_sequence, alternating_hitting_series, cox_time, cox_time_with_thresholds,
    draw_thresholds, hitting_time, hitting_time_series, Crossing,
};
pub use decompose::{
    avoidance_rate, decomposition_violations, min_combine, thin_thick_decompose, AvoidanceReport,
    Decomposition,
};
pub use time::{FamilyMember, Provenance, RandomTime, StoppingFamily};
