//! Projection of martingales onto stochastic integrals of a basis: a default
//! indicator is not spanned by the Brownian motion alone but is by the
//! Brownian motion together with the compensated default process.
//!
//! ```text
//! cargo run --release --example gkw_projection
//! ```

use thinthick::analysis::{gkw_project, target_martingale, ProjectionConfig};
use thinthick::app::default_dictionary;
use thinthick::engine::{simulate_drivers, DriverSpec, Series, TimeGrid};
use thinthick::enlargement::{
    build_features, thick_compensated, IntensitySource, RegressionConfig, Summaries,
};
use thinthick::random_times::{cox_time, thin_thick_decompose, StoppingFamily};

fn main() -> thinthick::Result<()> {
    let grid = TimeGrid::new(1.0, 40)?;
    let n_paths = 20_000;
    let w = simulate_drivers(&grid, n_paths, &DriverSpec::new().brownian("W"), 4)?;
    let w = w.component("W")?;
    let k = Series::from_paths(grid, n_paths, "F", |_, row| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = grid.time(i);
        }
    });
    let tau = cox_time(&k, 8)?;
    let family = StoppingFamily::empty();
    let d = thin_thick_decompose(&tau, &family)?;
    let f = build_features(&[("W", w)], Summaries::default(), &tau, &family)?;
    let reg = RegressionConfig::default();
    let h = thick_compensated(&d, &family, &f, &IntensitySource::CumulativeHazard(k), &reg)?.h;

    let dictionary = default_dictionary("W");
    let cfg = ProjectionConfig::default();
    let default_by_t: Vec<f64> = (0..n_paths)
        .map(|p| tau.occurred_by(p, grid.n_steps()) as u8 as f64)
        .collect();
    let w_squared: Vec<f64> = w.terminal().iter().map(|x| x * x).collect();
    let mixed: Vec<f64> = default_by_t
        .iter()
        .zip(w.terminal())
        .map(|(a, b)| a * b)
        .collect();

    println!("{:>16} {:>10} {:>10}", "target", "on {W}", "on {W,H}");
    for (name, payoff) in [
        ("W_T^2", &w_squared),
        ("1{tau<=T}", &default_by_t),
        ("W_T 1{tau<=T}", &mixed),
    ] {
        let v = target_martingale(payoff, &f, &dictionary, &reg)?;
        let rho = |basis: &[(&str, &Series)]| -> thinthick::Result<f64> {
            Ok(gkw_project(&v, basis, &f, &dictionary, &cfg)?
                .residual_ratio
                .value)
        };
        println!(
            "{name:>16} {:>10.4} {:>10.4}",
            rho(&[("W", w)])?,
            rho(&[("W", w), ("H", &h)])?
        );
    }
    println!("rho_res = E[L_T^2] / E[(V_T - V_0)^2] for the orthogonal residual L");
    Ok(())
}
