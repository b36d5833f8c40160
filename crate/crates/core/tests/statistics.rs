use thinthick::analysis::{drift_test, DriftConfig};
use thinthick::engine::{simulate_drivers, stochastic_integral, DriverSpec, Series, TimeGrid};
use thinthick::enlargement::{
    build_features, thick_compensated, thin_compensated, total_compensated, IntensitySource,
    RegressionConfig, Summaries, ThinSource,
};
use thinthick::random_times::{cox_time, thin_thick_decompose, RandomTime, StoppingFamily};
use thinthick::stats::mean_se;

#[test]
fn brownian_increments_over_disjoint_steps_are_uncorrelated() {
    let grid = TimeGrid::new(1.0, 8).unwrap();
    let b = simulate_drivers(&grid, 100_000, &DriverSpec::new().brownian("W"), 21).unwrap();
    let w = b.component("W").unwrap();
    for i in 1..8 {
        let (a, c) = (w.increments_at(i), w.increments_at(i + 1));
        let prod: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x * y).collect();
        let e = mean_se(&prod, None);
        assert!(e.within(0.0, 4.0), "steps {i},{}: z = {}", i + 1, e.z(0.0));
    }
}

#[test]
fn integral_of_bounded_predictable_integrand_has_no_drift() {
    let grid = TimeGrid::new(1.0, 40).unwrap();
    let n = 50_000;
    let b = simulate_drivers(&grid, n, &DriverSpec::new().brownian("W"), 22).unwrap();
    let w = b.component("W").unwrap();
    let integrand = w.map("F", |x| x.clamp(-1.0, 1.0).cos());
    let m = stochastic_integral(&integrand, w).unwrap();
    let f = build_features(
        &[("W", w)],
        Summaries::default(),
        &RandomTime::never(grid, n),
        &StoppingFamily::empty(),
    )
    .unwrap();
    let r = drift_test(&m, &f, &DriftConfig::default().binned("W", 5)).unwrap();
    assert!(r.pass, "max |z| = {} vs {}", r.max_abs_z, r.threshold);
}

#[test]
fn analytic_compensated_process_is_centred_at_every_time() {
    let grid = TimeGrid::new(2.0, 40).unwrap();
    let n = 100_000;
    let dates = [10usize, 25];
    let (lambda, c) = (0.5, 0.4);
    let total = Series::from_paths(grid, n, "F", |_, row| {
        let mut acc = 0.0;
        for i in 1..row.len() {
            acc += if dates.contains(&i) {
                c
            } else {
                lambda * grid.dt()
            };
            row[i] = acc;
        }
    });
    let continuous = Series::from_paths(grid, n, "F", |_, row| {
        let mut acc = 0.0;
        for i in 1..row.len() {
            if !dates.contains(&i) {
                acc += lambda * grid.dt();
            }
            row[i] = acc;
        }
    });
    let tau = cox_time(&total, 5).unwrap();
    let family = StoppingFamily::deterministic(grid, n, &dates).unwrap();
    let d = thin_thick_decompose(&tau, &family).unwrap();
    let w = simulate_drivers(&grid, n, &DriverSpec::new().brownian("W"), 5).unwrap();
    let f = build_features(
        &[("W", w.component("W").unwrap())],
        Summaries::default(),
        &tau,
        &family,
    )
    .unwrap();
    let reg = RegressionConfig::default();
    let p = vec![vec![-(-c).exp_m1(); n]; dates.len()];
    let thin = thin_compensated(&d, &family, &f, &ThinSource::Analytic(p), &reg).unwrap();
    let thick = thick_compensated(
        &d,
        &family,
        &f,
        &IntensitySource::CumulativeHazard(continuous),
        &reg,
    )
    .unwrap();
    let h = total_compensated(&thin, &thick, &d, 0.0).unwrap();
    for i in 0..=40 {
        let e = mean_se(&h.column(i), None);
        assert!(e.within(0.0, 4.0), "t_{i}: mean {} se {}", e.mean, e.se);
    }
}
