//! A Cox time whose cumulative hazard jumps at two fixed dates, split into the
//! part charging those dates and the part avoiding them.
//!
//! ```text
//! cargo run --release --example cox_decomposition
//! ```

use thinthick::engine::{Series, TimeGrid};
use thinthick::random_times::{
    avoidance_rate, cox_time, decomposition_violations, min_combine, thin_thick_decompose,
    StoppingFamily,
};
use thinthick::stats::proportion;

fn main() -> thinthick::Result<()> {
    let grid = TimeGrid::new(2.0, 50)?;
    let n_paths = 50_000;
    let (lambda, jump) = (0.5, 0.4);
    let dates = [13usize, 30];

    // K_t = λ t off the dates plus a jump of size `jump` at each date.
    let k = Series::from_paths(grid, n_paths, "F", |_, row| {
        for i in 1..row.len() {
            let dk = if dates.contains(&i) {
                jump
            } else {
                lambda * grid.dt()
            };
            row[i] = row[i - 1] + dk;
        }
    });
    let tau = cox_time(&k, 11)?;
    let family = StoppingFamily::deterministic(grid, n_paths, &dates)?;
    let d = thin_thick_decompose(&tau, &family)?;

    println!("default by T: {} of {n_paths}", tau.n_finite());
    let thin = proportion(d.thin.n_finite(), n_paths);
    let survive_first = (-lambda * grid.time(dates[0] - 1)).exp();
    let survive_second = (-lambda * grid.time(dates[1] - 1) - jump).exp();
    let expected = (survive_first + survive_second) * -(-jump).exp_m1();
    println!(
        "P(tau at a date) = {:.4} +- {:.4}   analytic {expected:.4}",
        thin.mean, thin.se
    );
    for (n, c) in d.matched.iter().enumerate() {
        println!(
            "  C_{} = {{tau = T_{}}}: {} paths",
            n + 1,
            n + 1,
            c.iter().filter(|b| **b).count()
        );
    }

    println!(
        "violations of tau = tau1 ^ tau2: {}",
        decomposition_violations(&tau, &d.thin, &d.thick)
    );
    let (back, ties) = min_combine(&d.thin, &d.thick)?;
    println!(
        "min(tau1, tau2) reproduces tau: {} (ties {ties})",
        back.values() == tau.values()
    );
    let avoid = avoidance_rate(&d.thick, &family, 0.0)?;
    println!(
        "thick part meets a date on {} paths (pass {})",
        avoid.aggregate, avoid.pass
    );
    Ok(())
}
