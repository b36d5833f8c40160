use super::TreeWorld;
use crate::engine::Series;
use crate::enlargement::least_squares;
use crate::error::{invalid, Error, Result};
use crate::random_times::RandomTime;

/// `E[rv | F_t]` per atom, by averaging over the time-`t` node blocks.
pub fn exact_condexp(world: &TreeWorld, rv: &[f64], t: usize) -> Result<Vec<f64>> {
    if rv.len() != world.n_atoms() {
        return Err(invalid("random variable must have one value per atom"));
    }
    if t > world.n_steps() {
        return Err(invalid(format!("time {t} beyond the tree")));
    }
    let block = world.block(t);
    if block == 1 {
        return Ok(rv.to_vec());
    }
    let p = world.probabilities();
    let mut out = vec![0.0; rv.len()];
    for k in 0..world.n_nodes(t) {
        let r = k * block..(k + 1) * block;
        let mass: f64 = p[r.clone()].iter().sum();
        let mean = p[r.clone()]
            .iter()
            .zip(&rv[r.clone()])
            .map(|(p, x)| p * x)
            .sum::<f64>()
            / mass;
        out[r].fill(mean);
    }
    Ok(out)
}

/// The martingale `E[rv | F_t]`, `t = 0..n`, as a per-atom series.
pub fn exact_martingale(world: &TreeWorld, rv: &[f64]) -> Result<Series> {
    let cols: Vec<Vec<f64>> = (0..=world.n_steps())
        .map(|t| exact_condexp(world, rv, t))
        .collect::<Result<_>>()?;
    Ok(Series::from_paths(
        *world.grid(),
        world.n_atoms(),
        "F",
        |a, row| {
            for (t, v) in row.iter_mut().enumerate() {
                *v = cols[t][a];
            }
        },
    ))
}

fn check_adapted(world: &TreeWorld, x: &Series, what: &str) -> Result<()> {
    for t in 0..=world.n_steps() {
        let block = world.block(t);
        for k in 0..world.n_nodes(t) {
            let first = x.at(k * block, t);
            if (k * block..(k + 1) * block).any(|a| x.at(a, t) != first) {
                return Err(invalid(format!("{what} is not adapted at time {t}")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactCompensator {
    /// `A_t = Σ_{s <= t} P(τ = s | F_{s-1}) 1_{τ >= s}`.
    pub compensator: Series,
    /// `H = 1_{τ <= ·} - A`.
    pub h: Series,
}

/// Discrete Doob decomposition of `1_{τ <= ·}` for a stopping time of the tree.
pub fn exact_compensator(world: &TreeWorld, tau: &RandomTime) -> Result<ExactCompensator> {
    let n = world.n_steps();
    let atoms = world.n_atoms();
    world.grid().check_same(tau.grid())?;
    if tau.n_paths() != atoms {
        return Err(invalid("random time must have one value per atom"));
    }
    let occ = Series::from_paths(*world.grid(), atoms, "F", |a, row| {
        for (t, v) in row.iter_mut().enumerate() {
            *v = if tau.occurred_by(a, t) { 1.0 } else { 0.0 };
        }
    });
    check_adapted(world, &occ, "the random time")
        .map_err(|_| invalid("the random time is not a stopping time of the tree"))?;
    let mut hazard = vec![vec![0.0; atoms]; n + 1];
    for s in 1..=n {
        let hit: Vec<f64> = (0..atoms)
            .map(|a| if tau.value(a) == Some(s) { 1.0 } else { 0.0 })
            .collect();
        hazard[s] = exact_condexp(world, &hit, s - 1)?;
    }
    let hit = |a: usize, s: usize| if tau.value(a) == Some(s) { 1.0 } else { 0.0 };
    let accrues = |a: usize, s: usize| tau.value(a).is_none_or(|t| t >= s);
    let compensator = Series::from_paths(*world.grid(), atoms, "F", |a, row| {
        let mut acc = hit(a, 0);
        row[0] = acc;
        for s in 1..=n {
            if accrues(a, s) {
                acc += hazard[s][a];
            }
            row[s] = acc;
        }
    });
    // accumulated from increments so that H is exactly flat after τ
    let h = Series::from_paths(*world.grid(), atoms, "F", |a, row| {
        let mut acc = 0.0;
        row[0] = 0.0;
        for s in 1..=n {
            if accrues(a, s) {
                acc += hit(a, s) - hazard[s][a];
            }
            row[s] = acc;
        }
    });
    for s in 1..=n {
        let inc: Vec<f64> = (0..atoms).map(|a| h.increment(a, s)).collect();
        let drift = exact_condexp(world, &inc, s - 1)?;
        if let Some(d) = drift.iter().find(|d| d.abs() > 1e-12) {
            return Err(Error::InvalidSpec(format!(
                "compensated process drifts by {d} at step {s}"
            )));
        }
    }
    Ok(ExactCompensator { compensator, h })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactGkw {
    /// `V_t = E[target | F_t]`.
    pub v: Series,
    /// Integrand per basis element; entry `t - 1` multiplies the step to `t`.
    pub integrands: Vec<Series>,
    /// `V - V_0 - Σ_j ∫ φ_j dM^j`.
    pub residual: Series,
    /// 1 where the basis increments over the next step are linearly
    /// independent across children, so the integrands are unique; 0 elsewhere.
    pub identified: Series,
}

/// Exact projection of the martingale closed by `target` onto the integrals
/// of the `basis` martingales: at every node, a probability-weighted least
/// squares fit of the children's `ΔV` on their `ΔM^j`.
pub fn exact_gkw(world: &TreeWorld, target: &[f64], basis: &[&Series]) -> Result<ExactGkw> {
    let n = world.n_steps();
    let atoms = world.n_atoms();
    let v = exact_martingale(world, target)?;
    for m in basis {
        v.check_same_shape(m)?;
        check_adapted(world, m, "a basis element")?;
    }
    let p = world.probabilities();
    let mut phi = vec![vec![0.0; atoms * (n + 1)]; basis.len()];
    let mut identified = vec![0.0; atoms * (n + 1)];
    for t in 1..=n {
        let (parent, child) = (world.block(t - 1), world.block(t));
        for k in 0..world.n_nodes(t - 1) {
            let kids: Vec<usize> = (0..parent / child)
                .map(|c| k * parent + c * child)
                .collect();
            let w: Vec<f64> = kids.iter().map(|&a| p[a..a + child].iter().sum()).collect();
            let y: Vec<f64> = kids.iter().map(|&a| v.increment(a, t)).collect();
            let cols: Vec<Vec<f64>> = basis
                .iter()
                .map(|m| kids.iter().map(|&a| m.increment(a, t)).collect())
                .collect();
            let fit = least_squares(&cols, &y, Some(&w), 1e-12)?;
            for a in k * parent..(k + 1) * parent {
                for (j, c) in fit.coefficients.iter().enumerate() {
                    phi[j][a * (n + 1) + t - 1] = *c;
                }
                identified[a * (n + 1) + t - 1] = if fit.rank_deficient { 0.0 } else { 1.0 };
            }
        }
    }
    let integrands: Vec<Series> = phi
        .into_iter()
        .map(|d| Series::new(*world.grid(), atoms, "F", d))
        .collect::<Result<_>>()?;
    let residual = Series::from_paths(*world.grid(), atoms, "F", |a, row| {
        let mut acc = 0.0;
        row[0] = 0.0;
        for t in 1..=n {
            acc += v.increment(a, t)
                - basis
                    .iter()
                    .zip(&integrands)
                    .map(|(m, f)| f.at(a, t - 1) * m.increment(a, t))
                    .sum::<f64>();
            row[t] = acc;
        }
    });
    let identified = Series::new(*world.grid(), atoms, "F", identified)?;
    Ok(ExactGkw {
        v,
        integrands,
        residual,
        identified,
    })
}
