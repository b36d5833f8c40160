//! Brownian and Poisson drivers, the Lévy transformation and the Doléans
//! exponential.
//!
//! ```text
//! cargo run --release --example simulate_drivers
//! ```

use thinthick::engine::{
    doleans_exponential, levy_transform, simulate_drivers, simulate_paths, DriverSpec, TimeGrid,
};
use thinthick::stats::mean_se;

fn main() -> thinthick::Result<()> {
    let grid = TimeGrid::new(1.0, 500)?;
    let spec = DriverSpec::new().brownian("W").poisson("N", 2.0, 1.0);
    let bundle = simulate_drivers(&grid, 20_000, &spec, 7)?;

    let w = bundle.component("W")?;
    let n = bundle.component("N")?;
    let w_t = mean_se(&w.terminal(), None);
    let w2: Vec<f64> = w.terminal().iter().map(|x| x * x).collect();
    println!("E[W_1]   = {:+.4} +- {:.4}   (0)", w_t.mean, w_t.se);
    println!(
        "E[W_1^2] = {:.4} +- {:.4}    (1)",
        mean_se(&w2, None).mean,
        mean_se(&w2, None).se
    );
    let n_t = mean_se(&n.terminal(), None);
    println!("E[N_1]   = {:.4} +- {:.4}    (rate 2)", n_t.mean, n_t.se);

    // Paths are addressed by global index: any chunk reproduces the full run.
    let chunk = simulate_paths(&grid, &spec, 7, 5_000..5_010)?;
    assert_eq!(chunk.component("W")?.path(0), w.path(5_000));
    println!("paths 5000..5010 simulated alone match the full run");

    // B = ∫ sign(W) dW is again Brownian; S = E(B) has mean one.
    let b = levy_transform(&bundle, "W")?;
    let same_size = (1..=grid.n_steps()).all(|i| {
        (0..100).all(|p| (b.increment(p, i).abs() - w.increment(p, i).abs()).abs() < 1e-15)
    });
    println!("|dB| = |dW| on every step: {same_size}");
    let b2: Vec<f64> = b.terminal().iter().map(|x| x * x).collect();
    println!("E[B_1^2] = {:.4}", mean_se(&b2, None).mean);
    let s = doleans_exponential(&b);
    let s_t = mean_se(&s.terminal(), None);
    println!("E[S_1]   = {:.4} +- {:.4}    (1)", s_t.mean, s_t.se);
    Ok(())
}
