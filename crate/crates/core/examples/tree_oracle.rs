//! Exact enumeration on finite trees as ground truth for the Monte Carlo
//! estimators.
//!
//! ```text
//! cargo run --release --example tree_oracle
//! ```

use thinthick::enlargement::{
    thin_compensated, Conditioning, Dictionary, RegressionConfig, Term, ThinSource,
};
use thinthick::oracle::{
    build_tree, exact_compensator, exact_gkw, exact_martingale, oracle_equivalence,
    random_tree_spec, TreeSpec,
};
use thinthick::random_times::{thin_thick_decompose, StoppingFamily};

fn main() -> thinthick::Result<()> {
    // One step of a symmetric walk, tau = first time the walk reaches +1.
    let world = build_tree(&TreeSpec::symmetric(1))?;
    let tau = world.first_time(|a, t| world.walk().at(a, t) >= 1.0)?;
    let exact = exact_compensator(&world, &tau)?;
    println!("one-step tree: H_1 = {:?}", exact.h.terminal());

    // A random tree: regression on node indicators recovers the exact compensator.
    let world = build_tree(&random_tree_spec(2, 0, 6, 512))?;
    let tau = world
        .first_time(|a, t| world.walk().at(a, t) > 0.5 || world.aux().at(a, t) == 1.0 && t >= 4)?;
    let steps: Vec<usize> = (1..=world.n_steps()).collect();
    let family = StoppingFamily::deterministic(*world.grid(), world.n_atoms(), &steps)?;
    let d = thin_thick_decompose(&tau, &family)?;
    let f = world.features(&tau, &family)?;
    let source = ThinSource::Regression {
        dictionary: Dictionary::new(vec![Term::levels("node")]),
        conditioning: Conditioning::PreStep,
    };
    let cfg = RegressionConfig {
        min_paths_per_column: 1,
        rank_tol: 1e-12,
    };
    let estimated = thin_compensated(&d, &family, &f, &source, &cfg)?;
    let gap = estimated
        .h
        .data()
        .iter()
        .zip(exact_compensator(&world, &tau)?.h.data())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!(
        "random tree with {} atoms over {} steps: compensator gap {gap:.2e}",
        world.n_atoms(),
        world.n_steps()
    );

    // Exact GKW decomposition of the terminal walk squared onto M = E[X_T | F].
    let m = exact_martingale(&world, &world.walk().terminal())?;
    let target: Vec<f64> = world.walk().terminal().iter().map(|x| x * x).collect();
    let gkw = exact_gkw(&world, &target, &[&m])?;
    let weighted_sq: f64 = gkw
        .residual
        .terminal()
        .iter()
        .zip(world.probabilities())
        .map(|(l, p)| p * l * l)
        .sum();
    println!("E[L_T^2] for X_T^2 on M: {weighted_sq:.4}");

    let report = oracle_equivalence(1, 20, 10)?;
    println!(
        "20 random trees: max gap {:.2e} over {} identified atom-steps, pass at 1e-8: {}",
        report.max_delta(),
        report.compared_atom_steps,
        report.pass(1e-8)
    );
    Ok(())
}
