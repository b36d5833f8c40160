//! Monte Carlo simulation and verification of martingale representations on
//! progressively enlarged filtrations.
//!
//! The crate is organised bottom-up:
//!
//! - [`engine`]: time grids, counter-based random streams, driver simulation
//!   (Brownian motion, Poisson counters), discrete stochastic integrals, the
//!   Lévy transformation and the Doléans exponential.
//! - [`random_times`]: hitting, alternating hitting and Cox times, the
//!   thin-thick decomposition against a family of stopping times and
//!   avoidance diagnostics.
//! - [`enlargement`]: per-time feature sets of the enlarged filtration,
//!   cross-path least-squares conditional expectations and the compensated
//!   occurrence processes of the thin part, the thick part and the full time.
//! - [`analysis`]: realized brackets, conditional drift tests, orthogonality
//!   tests, target martingales and the Galtchouk-Kunita-Watanabe projection.
//! - [`oracle`]: exact enumeration on finite trees, used as ground truth.
//! - [`app`]: the scenario registry, configuration and report files.

pub mod analysis;
pub mod app;
pub mod engine;
pub mod enlargement;
pub mod error;
pub mod oracle;
pub mod random_times;
pub mod stats;

pub use error::{Error, Result};
