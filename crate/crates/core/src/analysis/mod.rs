//! Martingale diagnostics on simulated paths: realized brackets, conditional
//! drift tests, orthogonality tests, target martingales built by backward
//! regression, and the Galtchouk-Kunita-Watanabe projection onto a basis of
//! martingales.

mod bracket;
mod drift;
mod projection;

pub use bracket::{orthogonality_test, realized_bracket, OrthogonalityReport};
pub use drift::{drift_test, DriftCell, DriftConfig, DriftReport};
pub use projection::{
    gkw_project, merge_integrands, target_martingale, GroupFit, IntegrandModel, ProjectionConfig,
    ProjectionResult, Ratio,
};
