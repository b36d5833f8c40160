//! Compensated occurrence processes of the thin part, the thick part and the
//! whole time, with analytic and regression estimates of the jump law.
//!
//! ```text
//! cargo run --release --example compensators
//! ```

use thinthick::analysis::realized_bracket;
use thinthick::engine::{simulate_drivers, DriverSpec, Series, TimeGrid};
use thinthick::enlargement::{
    build_features, thick_compensated, thin_compensated, total_compensated, Conditioning,
    Dictionary, IntensitySource, RegressionConfig, Summaries, ThinSource,
};
use thinthick::random_times::{cox_time, thin_thick_decompose, StoppingFamily};
use thinthick::stats::mean_se;

fn main() -> thinthick::Result<()> {
    let grid = TimeGrid::new(2.0, 50)?;
    let n_paths = 40_000;
    let dates = [13usize, 30];
    let w = simulate_drivers(&grid, n_paths, &DriverSpec::new().brownian("W"), 3)?;
    let w = w.component("W")?;

    // Jump size at each date depends on |W| just before it.
    let jump = |p: usize, i: usize| 0.3 * (1.0 + w.at(p, i - 1).abs());
    let cumulative = |with_jumps: bool| {
        Series::from_paths(grid, n_paths, "F", |p, row| {
            for i in 1..row.len() {
                let dk = match dates.contains(&i) {
                    true if with_jumps => jump(p, i),
                    true => 0.0,
                    false => 0.4 * grid.dt(),
                };
                row[i] = row[i - 1] + dk;
            }
        })
    };
    let (k, k_off_dates) = (cumulative(true), cumulative(false));
    let tau = cox_time(&k, 5)?;
    let family = StoppingFamily::deterministic(grid, n_paths, &dates)?;
    let d = thin_thick_decompose(&tau, &family)?;
    let f = build_features(&[("W", w)], Summaries::default(), &tau, &family)?;
    let reg = RegressionConfig::default();

    let analytic: Vec<Vec<f64>> = dates
        .iter()
        .map(|&i| (0..n_paths).map(|p| -(-jump(p, i)).exp_m1()).collect())
        .collect();
    let exact = thin_compensated(
        &d,
        &family,
        &f,
        &ThinSource::Analytic(analytic.clone()),
        &reg,
    )?;
    let regression = ThinSource::Regression {
        dictionary: Dictionary::polynomial("W", 2)
            .with(thinthick::enlargement::Term::Abs("W".into())),
        conditioning: Conditioning::PreStep,
    };
    let fitted = thin_compensated(&d, &family, &f, &regression, &reg)?;
    for (n, &i) in dates.iter().enumerate() {
        let alive: Vec<usize> = (0..n_paths)
            .filter(|&p| !tau.occurred_by(p, i - 1))
            .collect();
        let gaps: Vec<f64> = alive
            .iter()
            .map(|&p| (fitted.probabilities[n][p] - analytic[n][p]).abs())
            .collect();
        println!(
            "member {}: mean |regression p_n - (1 - exp(-dK))| = {:.4} on {} live paths",
            n + 1,
            mean_se(&gaps, None).mean,
            alive.len()
        );
    }

    let thick = thick_compensated(
        &d,
        &family,
        &f,
        &IntensitySource::CumulativeHazard(k_off_dates),
        &reg,
    )?;
    let h = total_compensated(&exact, &thick, &d, 0.0)?;
    for (name, s) in [("H_thin", &exact.h), ("H_thick", &thick.h), ("H", &h)] {
        let e = mean_se(&s.terminal(), None);
        println!("E[{name}_T] = {:+.5} +- {:.5}", e.mean, e.se);
    }
    let bracket = realized_bracket(&exact.h, &thick.h)?;
    println!(
        "[H_thin, H_thick] identically zero: {}",
        bracket.data().iter().all(|v| *v == 0.0)
    );
    Ok(())
}
