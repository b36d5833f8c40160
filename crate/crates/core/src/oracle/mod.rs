//! Exact computations on finite trees. Every random variable is a finite map
//! from enumerated atoms to reals, so conditional expectations, discrete
//! compensators and martingale projections can be evaluated by averaging over
//! cylinders. These values serve as ground truth for the regression
//! estimators.

mod equivalence;
mod exact;
mod tree;

pub use equivalence::{oracle_equivalence, EquivalenceReport};
pub use exact::{
    exact_compensator, exact_condexp, exact_gkw, exact_martingale, ExactCompensator, ExactGkw,
};
pub use tree::{build_tree, random_tree_spec, Branch, TreeSpec, TreeWorld, MAX_ATOMS, MAX_STEPS};
