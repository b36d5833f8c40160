//! Time grids, reproducible random streams, driver simulation and discrete
//! stochastic calculus.

mod calculus;
mod drivers;
mod grid;
pub mod rng;
mod series;

pub use calculus::{
    doleans_exponential, levy_transform, levy_transform_series, sign_left, stochastic_integral,
};
pub use drivers::{
    simulate_drivers, simulate_paths, ComponentKind, ComponentSpec, DriverSpec, PathBundle,
};
pub use grid::{make_grid, TimeGrid};
pub use series::{MartingaleSeries, Series};
