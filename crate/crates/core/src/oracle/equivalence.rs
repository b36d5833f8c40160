use super::{
    build_tree, exact_compensator, exact_condexp, exact_gkw, exact_martingale, random_tree_spec,
    TreeSpec, TreeWorld,
};
use crate::analysis::{gkw_project, ProjectionConfig};
use crate::enlargement::{
    regress_condexp, thin_compensated, Conditioning, Dictionary, RegressionConfig, Term, ThinSource,
};
use crate::error::Result;
use crate::random_times::{thin_thick_decompose, RandomTime, StoppingFamily};

/// Largest absolute gaps between the regression estimators and exact
/// enumeration over a batch of random trees.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub instances: usize,
    pub max_steps: usize,
    pub condexp_delta: f64,
    pub compensator_delta: f64,
    /// Integrand gap over atoms and steps where the oracle identifies them.
    pub gkw_integrand_delta: f64,
    pub gkw_residual_delta: f64,
    /// Atom-steps over which integrands were compared.
    pub compared_atom_steps: usize,
    /// `H_1` of the first hitting time of +1 in a one-step symmetric walk.
    pub hand_value: [f64; 2],
}

impl EquivalenceReport {
    pub fn max_delta(&self) -> f64 {
        self.condexp_delta
            .max(self.compensator_delta)
            .max(self.gkw_integrand_delta)
            .max(self.gkw_residual_delta)
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.max_delta() <= tol && self.hand_value == [0.5, -0.5]
    }
}

fn node_dictionary() -> Dictionary {
    Dictionary::new(vec![Term::levels("node")])
}

fn exact_cfg() -> RegressionConfig {
    RegressionConfig {
        min_paths_per_column: 1,
        rank_tol: 1e-12,
    }
}

/// The thin compensated process of `tau` against the family of all grid
/// steps, estimated by regression on node indicators.
fn estimated_h(world: &TreeWorld, tau: &RandomTime) -> Result<crate::engine::Series> {
    let steps: Vec<usize> = (1..=world.n_steps()).collect();
    let family = StoppingFamily::deterministic(*world.grid(), world.n_atoms(), &steps)?;
    let d = thin_thick_decompose(tau, &family)?;
    let f = world.features(tau, &family)?;
    let src = ThinSource::Regression {
        dictionary: node_dictionary(),
        conditioning: Conditioning::PreStep,
    };
    Ok(thin_compensated(&d, &family, &f, &src, &exact_cfg())?.h)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Compares `regress_condexp`, `thin_compensated` and `gkw_project` with
/// node-indicator dictionaries against exact enumeration on `instances`
/// random trees of at most `max_steps` steps.
pub fn oracle_equivalence(
    seed: u64,
    instances: usize,
    max_steps: usize,
) -> Result<EquivalenceReport> {
    let mut report = EquivalenceReport {
        instances,
        max_steps,
        condexp_delta: 0.0,
        compensator_delta: 0.0,
        gkw_integrand_delta: 0.0,
        gkw_residual_delta: 0.0,
        compared_atom_steps: 0,
        hand_value: [f64::NAN; 2],
    };
    for k in 0..instances as u64 {
        let world = build_tree(&random_tree_spec(seed, k, max_steps, 256))?;
        let n = world.n_steps();
        let level = 0.25 + 0.1 * (k % 5) as f64;
        let tau = world.first_time(|a, t| {
            world.walk().at(a, t) > level
                || (world.aux().at(a, t) == 1.0 && t >= 2 && world.walk().at(a, t) < -level)
        })?;
        let steps: Vec<usize> = (1..=n).collect();
        let family = StoppingFamily::deterministic(*world.grid(), world.n_atoms(), &steps)?;
        let f = world.features(&tau, &family)?;

        let rv: Vec<f64> = (0..world.n_atoms())
            .map(|a| (1.3 * world.walk().at(a, n)).sin() + world.aux().at(a, n))
            .collect();
        for t in 0..=n {
            let est = regress_condexp(&rv, &f, t, &node_dictionary(), &exact_cfg())?;
            report.condexp_delta = report
                .condexp_delta
                .max(max_gap(&est.fitted, &exact_condexp(&world, &rv, t)?));
        }

        let exact_h = exact_compensator(&world, &tau)?.h;
        report.compensator_delta = report
            .compensator_delta
            .max(max_gap(estimated_h(&world, &tau)?.data(), exact_h.data()));

        let m = exact_martingale(&world, &world.walk().terminal())?;
        let target: Vec<f64> = (0..world.n_atoms())
            .map(|a| world.walk().at(a, n).powi(2) + if tau.occurred_by(a, n) { 1.0 } else { 0.0 })
            .collect();
        let exact = exact_gkw(&world, &target, &[&m, &exact_h])?;
        let cfg = ProjectionConfig {
            regression: exact_cfg(),
            ..Default::default()
        };
        let est = gkw_project(
            &exact.v,
            &[("M", &m), ("H", &exact_h)],
            &f,
            &node_dictionary(),
            &cfg,
        )?;
        for (a, b) in est.integrands.iter().zip(&exact.integrands) {
            for ((x, y), id) in a.data().iter().zip(b.data()).zip(exact.identified.data()) {
                if *id == 1.0 {
                    report.gkw_integrand_delta = report.gkw_integrand_delta.max((x - y).abs());
                }
            }
        }
        report.compared_atom_steps += exact
            .identified
            .data()
            .iter()
            .filter(|v| **v == 1.0)
            .count();
        report.gkw_residual_delta = report
            .gkw_residual_delta
            .max(max_gap(est.residual.data(), exact.residual.data()));
    }
    let world = build_tree(&TreeSpec::symmetric(1))?;
    let tau = world.first_time(|a, t| world.walk().at(a, t) >= 1.0)?;
    let h = estimated_h(&world, &tau)?;
    report.hand_value = [h.at(0, 1), h.at(1, 1)];
    Ok(report)
}
