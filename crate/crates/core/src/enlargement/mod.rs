//! The progressively enlarged filtration on the grid: per-time feature sets,
//! least-squares conditional expectations across paths, and the compensated
//! occurrence processes of the thin part, the thick part and their sum.

mod compensate;
mod features;
mod regress;

pub use compensate::{
    estimate_thin_probabilities, family_step, immersion_check, thick_compensated, thin_compensated,
    total_compensated, Conditioning, ImmersionResult, IntensitySource, ThickCompensated,
    ThinCompensated, ThinSource,
};
pub use features::{build_features, EnlargedFeatureSet, Summaries};
pub use regress::{
    fit_rows, least_squares, regress_condexp, Dictionary, Fit, LsFit, RegressionConfig, Term,
};
