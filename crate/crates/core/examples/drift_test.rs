//! Conditional drift tests certify a compensated process and catch one built
//! with the wrong jump probability.
//!
//! ```text
//! cargo run --release --example drift_test
//! ```

use thinthick::analysis::{drift_test, DriftConfig};
use thinthick::engine::{simulate_drivers, DriverSpec, Series, TimeGrid};
use thinthick::enlargement::{
    build_features, thin_compensated, RegressionConfig, Summaries, ThinSource,
};
use thinthick::random_times::{cox_time, thin_thick_decompose, StoppingFamily};

fn main() -> thinthick::Result<()> {
    let grid = TimeGrid::new(1.0, 40)?;
    let n_paths = 50_000;
    let dates = [10usize, 20, 30];
    let w = simulate_drivers(&grid, n_paths, &DriverSpec::new().brownian("W"), 9)?;
    let w = w.component("W")?;

    // The jump at each date has hazard 1 - exp(-|W|) given the past.
    let k = Series::from_paths(grid, n_paths, "F", |p, row| {
        for i in 1..row.len() {
            row[i] = row[i - 1]
                + if dates.contains(&i) {
                    w.at(p, i - 1).abs()
                } else {
                    0.0
                };
        }
    });
    let tau = cox_time(&k, 1)?;
    let family = StoppingFamily::deterministic(grid, n_paths, &dates)?;
    let d = thin_thick_decompose(&tau, &family)?;
    let f = build_features(&[("W", w)], Summaries::default(), &tau, &family)?;
    let cfg = DriftConfig::default().binned("W", 5).split("occurred");

    let probs = |wrong: bool| -> Vec<Vec<f64>> {
        dates
            .iter()
            .map(|&i| {
                (0..n_paths)
                    .map(|p| {
                        if wrong {
                            0.3
                        } else {
                            -(-w.at(p, i - 1).abs()).exp_m1()
                        }
                    })
                    .collect()
            })
            .collect()
    };
    for (label, wrong) in [("true hazard", false), ("constant 0.3", true)] {
        let h = thin_compensated(
            &d,
            &family,
            &f,
            &ThinSource::Analytic(probs(wrong)),
            &RegressionConfig::default(),
        )?;
        let r = drift_test(&h.h, &f, &cfg)?;
        println!(
            "{label:>13}: {} cells, max |z| {:6.2} vs {:.2} -> {}",
            r.n_tests(),
            r.max_abs_z,
            r.threshold,
            if r.pass { "no drift" } else { "drift detected" }
        );
    }
    Ok(())
}
