//! The Lévy transformation example on a small scale: the filtration of
//! B = ∫ sign(W) dW sees |W| but not the sign of W, so at each hitting time
//! of |W| = 1 the event {W = 1} has conditional probability one half.
//!
//! ```text
//! cargo run --release --example levy_transform
//! ```

use thinthick::engine::{
    doleans_exponential, levy_transform, simulate_drivers, DriverSpec, TimeGrid,
};
use thinthick::random_times::{
    alternating_hitting_series, hitting_time, thin_thick_decompose, Crossing,
};
use thinthick::stats::mean_se;

const SEED: u64 = 12;

fn main() -> thinthick::Result<()> {
    let grid = TimeGrid::new(5.0, 4000)?;
    let n_paths = 20_000;
    let bundle = simulate_drivers(&grid, n_paths, &DriverSpec::new().brownian("W"), SEED)?;
    let w = bundle.component("W")?;
    let b = levy_transform(&bundle, "W")?;
    let s = doleans_exponential(&b);

    // T_n: alternating visits of |W| to 1 and back to 0. A return is a sign
    // change of W or |W| below a level matched to the grid.
    let inner = 0.5826 * grid.dt().sqrt();
    let family = alternating_hitting_series(w, 1.0, inner, 8)?;
    let tau = hitting_time(&bundle, "W", Crossing::Up(1.0), 0)?;
    let d = thin_thick_decompose(&tau, &family)?;
    println!(
        "tau = first W >= 1 is finite on {} paths, {} matched to a T_n",
        tau.n_finite(),
        d.thin.n_finite()
    );

    for n in 0..3 {
        let member = family.member(n);
        let hits: Vec<f64> = (0..n_paths)
            .filter_map(|p| {
                let t = member.value(p)?;
                (!tau.occurred_by(p, t - 1)).then(|| (w.at(p, t) > 0.0) as u8 as f64)
            })
            .collect();
        let e = mean_se(&hits, None);
        println!(
            "P(W_T{} = 1 | tau >= T{}) = {:.4} +- {:.4} over {} paths",
            n + 1,
            n + 1,
            e.mean,
            e.se,
            hits.len()
        );
    }
    let s_t = mean_se(&s.terminal(), None);
    println!("E[S_T] = {:.4} +- {:.4} for S = E(B)", s_t.mean, s_t.se);
    Ok(())
}
