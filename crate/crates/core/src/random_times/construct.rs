use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::{FamilyMember, RandomTime, StoppingFamily};
use crate::engine::{rng, PathBundle, Series};
use crate::error::{invalid, Result};

/// Hitting predicate evaluated at grid points (no bridge correction).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Crossing {
    /// `X >= v`.
    Up(f64),
    /// `X <= v`.
    Down(f64),
    /// Crossing of `v` from the side of the starting value: `Up(v)` when the
    /// value at the start index is `<= v`, `Down(v)` otherwise.
    Level(f64),
    /// `|X| >= v`.
    Abs(f64),
}

impl Crossing {
    fn resolve(self, start_value: f64) -> Crossing {
        match self {
            Crossing::Level(v) if start_value <= v => Crossing::Up(v),
            Crossing::Level(v) => Crossing::Down(v),
            other => other,
        }
    }

    fn hit(self, x: f64) -> bool {
        match self {
            Crossing::Up(v) => x >= v,
            Crossing::Down(v) => x <= v,
            Crossing::Abs(v) => x.abs() >= v,
            Crossing::Level(_) => unreachable!("resolved before use"),
        }
    }
}

/// First grid index `i >= start` at which `crossing` holds for the named
/// component; +∞ when it never holds up to the horizon.
pub fn hitting_time(
    bundle: &PathBundle,
    component: &str,
    crossing: Crossing,
    start: usize,
) -> Result<RandomTime> {
    hitting_time_series(bundle.component(component)?, crossing, start)
}

pub fn hitting_time_series(x: &Series, crossing: Crossing, start: usize) -> Result<RandomTime> {
    let n = x.grid().n_steps();
    if start > n {
        return Err(invalid(format!("start index {start} beyond the horizon")));
    }
    let values: Vec<Option<usize>> = x
        .par_paths()
        .map(|row| {
            let c = crossing.resolve(row[start]);
            (start..=n).find(|&i| c.hit(row[i]))
        })
        .collect();
    Ok(RandomTime::new(*x.grid(), values)?.with_offset(x.path_offset()))
}

/// The alternating sequence `T_n = inf{i >= S_{n-1}: |X_i| >= outer}`,
/// `S_n = inf{i > T_n: X crosses inner}` with `S_0 = 0`, truncated at
/// `max_n` members.
///
/// `X` crosses `inner` at `i` when `|X_i| <= inner` or `X_i` lies on the other
/// side of zero from `X_{T_n}`. Strict increase of the `T_n` gives disjoint
/// graphs.
pub fn alternating_hitting_sequence(
    bundle: &PathBundle,
    component: &str,
    outer: f64,
    inner: f64,
    max_n: usize,
) -> Result<StoppingFamily> {
    alternating_hitting_series(bundle.component(component)?, outer, inner, max_n)
}

pub fn alternating_hitting_series(
    x: &Series,
    outer: f64,
    inner: f64,
    max_n: usize,
) -> Result<StoppingFamily> {
    if max_n == 0 {
        return Err(invalid("max_n must be at least 1"));
    }
    if !(outer > inner) || inner < 0.0 {
        return Err(invalid(format!(
            "need 0 <= inner < outer, got inner={inner}, outer={outer}"
        )));
    }
    let n = x.grid().n_steps();
    let per_path: Vec<Vec<Option<usize>>> = x
        .par_paths()
        .map(|row| {
            let mut times = vec![None; max_n];
            let mut from = 0usize;
            for slot in times.iter_mut() {
                let Some(t) = (from..=n).find(|&i| row[i].abs() >= outer) else {
                    break;
                };
                *slot = Some(t);
                let side = row[t].signum();
                let Some(s) =
                    (t + 1..=n).find(|&i| row[i].abs() <= inner || row[i].signum() != side)
                else {
                    break;
                };
                from = s;
            }
            times
        })
        .collect();
    let members = (0..max_n)
        .map(|k| {
            let values = per_path.iter().map(|v| v[k]).collect();
            Ok(FamilyMember {
                time: RandomTime::new(*x.grid(), values)?.with_offset(x.path_offset()),
                predictable: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    StoppingFamily::new(members, true)
}

/// Independent `Exp(1)` thresholds, one per path, from their own stream.
pub fn draw_thresholds(theta_seed: u64, path_offset: usize, n_paths: usize) -> Vec<f64> {
    (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut r = rng::stream(theta_seed, "cox-theta", (path_offset + p) as u64);
            Exp1.sample(&mut r)
        })
        .collect()
}

/// Cox time `inf{t: K_t >= Θ}` with `Θ ~ Exp(1)` drawn from `theta_seed`.
pub fn cox_time(k: &Series, theta_seed: u64) -> Result<RandomTime> {
    let thresholds = draw_thresholds(theta_seed, k.path_offset(), k.n_paths());
    cox_time_with_thresholds(k, &thresholds)
}

/// Cox time against explicit thresholds. The pre-snap value interpolates `K`
/// linearly inside the step where the threshold is crossed.
pub fn cox_time_with_thresholds(k: &Series, thresholds: &[f64]) -> Result<RandomTime> {
    if thresholds.len() != k.n_paths() {
        return Err(invalid("one threshold per path is required"));
    }
    let grid = *k.grid();
    for (p, row) in k.paths().enumerate() {
        if row[0] != 0.0 {
            return Err(invalid(format!("K_0 must be 0 (path {p} has {})", row[0])));
        }
        if row.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid(format!("K must be nondecreasing (path {p})")));
        }
    }
    let (values, exact): (Vec<Option<usize>>, Vec<f64>) = k
        .par_paths()
        .zip(thresholds.par_iter())
        .map(|(row, &theta)| match row.iter().position(|&v| v >= theta) {
            None => (None, f64::INFINITY),
            Some(0) => (Some(0), 0.0),
            Some(i) => {
                let frac = (theta - row[i - 1]) / (row[i] - row[i - 1]);
                (Some(i), grid.time(i - 1) + frac * grid.dt())
            }
        })
        .unzip();
    RandomTime::new(grid, values)?
        .with_offset(k.path_offset())
        .with_exact(exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate_drivers, DriverSpec, TimeGrid};
    use crate::random_times::Provenance;
    use crate::stats::{normal_cdf, proportion};

    fn brownian(n_paths: usize, horizon: f64, n_steps: usize, seed: u64) -> PathBundle {
        let grid = TimeGrid::new(horizon, n_steps).unwrap();
        simulate_drivers(&grid, n_paths, &DriverSpec::new().brownian("W"), seed).unwrap()
    }

    #[test]
    fn level_zero_is_hit_immediately() {
        let b = brownian(100, 1.0, 10, 1);
        let t = hitting_time(&b, "W", Crossing::Level(0.0), 0).unwrap();
        assert!(t.values().iter().all(|v| *v == Some(0)));
        assert!(hitting_time(&b, "X", Crossing::Level(0.0), 0).is_err());
    }

    #[test]
    fn level_one_hitting_probability_near_reflection_value() {
        let b = brownian(100_000, 1.0, 500, 2);
        let t = hitting_time(&b, "W", Crossing::Level(1.0), 0).unwrap();
        let est = proportion(t.n_finite(), t.n_paths());
        let exact = 2.0 * normal_cdf(-1.0);
        // Grid snapping misses crossings between points: the bias is
        // downward and of order sqrt(dt) (about 0.5826 * sqrt(dt) * density).
        let bias_band = 0.75 * (1.0f64 / 500.0).sqrt() * 2.0 * (-0.5f64).exp()
            / (2.0 * std::f64::consts::PI).sqrt();
        assert!(est.mean <= exact + 3.0 * est.se);
        assert!(
            est.mean >= exact - bias_band - 3.0 * est.se,
            "{} vs {exact}",
            est.mean
        );
    }

    #[test]
    fn far_level_is_rarely_hit() {
        let b = brownian(20_000, 1.0, 100, 3);
        let t = hitting_time(&b, "W", Crossing::Level(10.0), 0).unwrap();
        assert!((t.n_finite() as f64 / 20_000.0) < 1e-3);
    }

    #[test]
    fn down_and_abs_predicates() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let x = Series::new(grid, 1, "F", vec![0.0, -0.5, 0.4, -1.2, 2.0]).unwrap();
        assert_eq!(
            hitting_time_series(&x, Crossing::Down(-1.0), 0)
                .unwrap()
                .value(0),
            Some(3)
        );
        assert_eq!(
            hitting_time_series(&x, Crossing::Abs(1.0), 0)
                .unwrap()
                .value(0),
            Some(3)
        );
        assert_eq!(
            hitting_time_series(&x, Crossing::Up(1.0), 0)
                .unwrap()
                .value(0),
            Some(4)
        );
        assert_eq!(
            hitting_time_series(&x, Crossing::Level(0.3), 3)
                .unwrap()
                .value(0),
            Some(4)
        );
        assert!(hitting_time_series(&x, Crossing::Up(1.0), 5).is_err());
    }

    #[test]
    fn alternating_sequence_on_a_hand_path() {
        let grid = TimeGrid::new(1.0, 9).unwrap();
        // |W| reaches 1 at 2, sign flips at 4, |W| reaches 1 at 5, flips at 7, hits 1 at 8.
        let x = Series::new(
            grid,
            1,
            "F",
            vec![0.0, 0.5, 1.1, 0.3, -0.2, -1.0, -0.4, 0.1, 1.3, 0.0],
        )
        .unwrap();
        let fam = alternating_hitting_series(&x, 1.0, 0.0, 4).unwrap();
        let got: Vec<_> = (0..4).map(|n| fam.member(n).value(0)).collect();
        assert_eq!(got, vec![Some(2), Some(5), Some(8), None]);
        assert!(fam.all_predictable() && fam.is_increasing());
    }

    #[test]
    fn alternating_sequence_is_strictly_increasing_and_crosses() {
        let b = brownian(2_000, 5.0, 1000, 4);
        let w = b.component("W").unwrap();
        let fam = alternating_hitting_sequence(&b, "W", 1.0, 0.0, 5).unwrap();
        for p in 0..2_000 {
            let mut last = None;
            for n in 0..5 {
                if let Some(t) = fam.member(n).value(p) {
                    assert!(w.at(p, t).abs() >= 1.0);
                    if let Some(l) = last {
                        assert!(t > l);
                    }
                    last = Some(t);
                } else {
                    assert!((n..5).all(|m| fam.member(m).value(p).is_none()));
                    break;
                }
            }
        }
    }

    #[test]
    fn alternating_first_time_matches_dense_oracle() {
        // Oracle: P(sup_{s<=5} |W_s| >= 1) from a four-times denser grid,
        // with an allowance for the remaining grid bias of both grids.
        let coarse = brownian(100_000, 5.0, 1000, 5);
        let dense = brownian(100_000, 5.0, 4000, 6);
        let fam = alternating_hitting_sequence(&coarse, "W", 1.0, 0.0, 1).unwrap();
        let est = proportion(fam.member(0).n_finite(), 100_000);
        let oracle = proportion(
            dense
                .component("W")
                .unwrap()
                .paths()
                .filter(|r| r.iter().any(|x| x.abs() >= 1.0))
                .count(),
            100_000,
        );
        let se = (est.se.powi(2) + oracle.se.powi(2)).sqrt();
        let bias_band = 0.01;
        assert!(
            (est.mean - oracle.mean).abs() <= 3.0 * se + bias_band,
            "{} vs {}",
            est.mean,
            oracle.mean
        );
        assert!(est.mean <= oracle.mean + 3.0 * se);
    }

    #[test]
    fn cox_unit_intensity_survival() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let n = 100_000;
        let k = Series::from_paths(grid, n, "F", |_, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = grid.time(i);
            }
        });
        let tau = cox_time(&k, 77).unwrap();
        for &(t, i) in &[(0.25f64, 25usize), (0.5, 50), (1.0, 100)] {
            let surv = proportion(
                tau.values()
                    .iter()
                    .filter(|v| !matches!(v, Some(j) if *j <= i))
                    .count(),
                n,
            );
            assert!(surv.within((-t).exp(), 3.0), "P(tau > {t}) = {}", surv.mean);
        }
    }

    #[test]
    fn cox_single_jump_law() {
        let grid = TimeGrid::new(2.0, 20).unwrap();
        let c = 0.7;
        let n = 100_000;
        let k = Series::from_paths(grid, n, "F", |_, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = if grid.time(i) >= 1.0 { c } else { 0.0 };
            }
        });
        let tau = cox_time(&k, 78).unwrap();
        let at_jump = tau.values().iter().filter(|v| **v == Some(10)).count();
        assert_eq!(at_jump, tau.n_finite());
        assert!(proportion(at_jump, n).within(1.0 - (-c).exp(), 3.0));
    }

    #[test]
    fn cox_zero_intensity_never_fires_and_rejects_decreasing() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let zero = Series::zeros(grid, 100, "F");
        let tau = cox_time(&zero, 1).unwrap();
        assert_eq!(tau.n_finite(), 0);
        assert!(tau.labels().iter().all(|l| *l == Provenance::Infinite));
        let bad = Series::new(
            grid,
            1,
            "F",
            vec![0.0, 0.2, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        )
        .unwrap();
        assert!(cox_time(&bad, 1).is_err());
        let shifted = Series::constant(grid, 1, "F", 0.5);
        assert!(cox_time(&shifted, 1).is_err());
    }

    #[test]
    fn cox_thresholds_are_chunk_invariant() {
        let all = draw_thresholds(5, 0, 10);
        let tail = draw_thresholds(5, 6, 4);
        assert_eq!(&all[6..], &tail[..]);
    }
}
