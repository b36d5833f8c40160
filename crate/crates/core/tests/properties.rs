use proptest::prelude::*;
use thinthick::analysis::{gkw_project, merge_integrands, realized_bracket, ProjectionConfig};
use thinthick::engine::{
    levy_transform_series, simulate_drivers, simulate_paths, stochastic_integral, DriverSpec,
    Series, TimeGrid,
};
use thinthick::enlargement::{
    build_features, family_step, thick_compensated, thin_compensated, Dictionary, IntensitySource,
    RegressionConfig, Summaries, ThinSource,
};
use thinthick::oracle::{
    build_tree, exact_compensator, exact_condexp, exact_gkw, exact_martingale, random_tree_spec,
};
use thinthick::random_times::{
    cox_time, decomposition_violations, min_combine, thin_thick_decompose, FamilyMember,
    Provenance, RandomTime, StoppingFamily,
};

fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(1.0, n).unwrap()
}

/// Random time and increasing deterministic family on a small grid.
fn time_and_family() -> impl Strategy<Value = (usize, Vec<Option<usize>>, Vec<usize>)> {
    (4usize..20).prop_flat_map(|n| {
        let tau = prop::collection::vec(prop::option::of(0..=n), 1..40);
        let fam = prop::collection::btree_set(1..=n, 0..4)
            .prop_map(|s| s.into_iter().collect::<Vec<_>>());
        (Just(n), tau, fam)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_is_a_function_of_seed_and_chunking(seed in any::<u64>(), split in 1usize..31) {
        let g = grid(16);
        let spec = DriverSpec::new().brownian("W").poisson("N", 2.0, 1.0);
        let whole = simulate_drivers(&g, 32, &spec, seed).unwrap();
        let again = simulate_drivers(&g, 32, &spec, seed).unwrap();
        prop_assert_eq!(&whole, &again);
        let mut w = simulate_paths(&g, &spec, seed, 0..split).unwrap().component("W").unwrap().clone();
        w.append(simulate_paths(&g, &spec, seed, split..32).unwrap().component("W").unwrap()).unwrap();
        prop_assert_eq!(w.data(), whole.component("W").unwrap().data());
    }

    #[test]
    fn levy_transform_increments_square_to_brownian_ones(seed in any::<u64>()) {
        let g = grid(64);
        let b = simulate_drivers(&g, 8, &DriverSpec::new().brownian("W"), seed).unwrap();
        let w = b.component("W").unwrap();
        let lt = levy_transform_series(w);
        for p in 0..8 {
            for i in 1..=64 {
                let (db, dw) = (lt.increment(p, i), w.increment(p, i));
                prop_assert!((db.abs() - dw.abs()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_identity_holds_pathwise((n, values, dates) in time_and_family()) {
        let g = grid(n);
        let tau = RandomTime::new(g, values.clone()).unwrap();
        let family = StoppingFamily::deterministic(g, values.len(), &dates).unwrap();
        let d = thin_thick_decompose(&tau, &family).unwrap();
        prop_assert_eq!(decomposition_violations(&tau, &d.thin, &d.thick), 0);
        for p in 0..values.len() {
            prop_assert!(!(d.thin.value(p).is_some() && d.thick.value(p).is_some()));
            if let Some(t) = d.thin.value(p) {
                prop_assert!(dates.contains(&t));
                prop_assert!(matches!(d.thin.label(p), Provenance::Thin(k) if dates[k] == t));
            }
            if let Some(t) = d.thick.value(p) {
                prop_assert!(!dates.contains(&t));
            }
        }
        let (back, _) = min_combine(&d.thin, &d.thick).unwrap();
        prop_assert_eq!(back.values(), tau.values());
    }

    #[test]
    fn family_validation_scans_every_path(n_paths in 2usize..50, bad in 0usize..50, at in 1usize..10) {
        let g = grid(10);
        let bad = bad % n_paths;
        let a = RandomTime::new(g, vec![Some(at); n_paths]).unwrap();
        let b = RandomTime::new(g, (0..n_paths).map(|p| if p == bad { Some(at) } else { None }).collect()).unwrap();
        let res = StoppingFamily::new(vec![FamilyMember { time: a, predictable: true }, FamilyMember { time: b, predictable: true }], false);
        prop_assert!(res.is_err());
    }

    #[test]
    fn compensators_respect_their_supports(seed in any::<u64>(), dates in prop::collection::btree_set(1usize..=20, 1..4), c in 0.05f64..1.5) {
        let g = grid(20);
        let n_paths = 64;
        let dates: Vec<usize> = dates.into_iter().collect();
        let k = Series::from_paths(g, n_paths, "F", |_, row| {
            let mut acc = 0.0;
            for i in 1..row.len() {
                acc += if dates.contains(&i) { c } else { 0.05 };
                row[i] = acc;
            }
        });
        let tau = cox_time(&k, seed).unwrap();
        let family = StoppingFamily::deterministic(g, n_paths, &dates).unwrap();
        let d = thin_thick_decompose(&tau, &family).unwrap();
        let w = simulate_drivers(&g, n_paths, &DriverSpec::new().brownian("W"), seed).unwrap();
        let f = build_features(&[("W", w.component("W").unwrap())], Summaries::default(), &tau, &family).unwrap();
        let p = vec![vec![-(-c).exp_m1(); n_paths]; dates.len()];
        let reg = RegressionConfig::default();
        let thin = thin_compensated(&d, &family, &f, &ThinSource::Analytic(p), &reg).unwrap();
        let cont = Series::from_paths(g, n_paths, "F", |_, row| {
            let mut acc = 0.0;
            for i in 1..row.len() {
                if !dates.contains(&i) { acc += 0.05; }
                row[i] = acc;
            }
        });
        let thick = thick_compensated(&d, &family, &f, &IntensitySource::CumulativeHazard(cont), &reg).unwrap();
        for q in 0..n_paths {
            for i in 1..=20 {
                let on_family = family_step(&family, q, i);
                if thin.h.increment(q, i) != 0.0 { prop_assert!(on_family); }
                if thick.lambda.increment(q, i) != 0.0 { prop_assert!(!on_family); }
                if d.tau.value(q).is_some_and(|t| t < i) { prop_assert_eq!(thick.lambda.increment(q, i), 0.0); }
            }
        }
    }

    #[test]
    fn bracket_is_bilinear(x in prop::collection::vec(-50i32..50, 9), y in prop::collection::vec(-50i32..50, 9), z in prop::collection::vec(-50i32..50, 9), a in -4i32..5, b in -4i32..5) {
        // Small integers keep every product and sum exact in floating point.
        let g = grid(8);
        let s = |v: &[i32]| Series::new(g, 1, "F", v.iter().map(|&u| u as f64).collect()).unwrap();
        let (sx, sy, sz) = (s(&x), s(&y), s(&z));
        let lhs = realized_bracket(&sx.scale(a as f64).add(&sy.scale(b as f64)).unwrap(), &sz).unwrap();
        let rhs = realized_bracket(&sx, &sz).unwrap().scale(a as f64).add(&realized_bracket(&sy, &sz).unwrap().scale(b as f64)).unwrap();
        prop_assert_eq!(lhs.data(), rhs.data());
        let (xz, zx) = (realized_bracket(&sx, &sz).unwrap(), realized_bracket(&sz, &sx).unwrap());
        prop_assert_eq!(xz.data(), zx.data());
    }

    #[test]
    fn merged_integral_equals_split_integrals(h1 in prop::collection::vec(-3i32..4, 12), h2 in prop::collection::vec(-3i32..4, 12), g1 in prop::collection::vec(-3i32..4, 12), e1 in prop::collection::vec(-3i32..4, 12), mask in prop::collection::vec(any::<bool>(), 12)) {
        let g = grid(11);
        // Disjoint supports: H1 moves only on masked steps, H2 only elsewhere.
        let path = |inc: &[i32], on: bool| {
            let mut acc = 0.0;
            let mut v = vec![0.0];
            for i in 1..12 {
                if mask[i] == on { acc += inc[i] as f64; }
                v.push(acc);
            }
            Series::new(g, 1, "F", v).unwrap()
        };
        let (a, b) = (path(&h1, true), path(&h2, false));
        let s = |v: &[i32]| Series::new(g, 1, "F", v.iter().map(|&u| u as f64).collect()).unwrap();
        let (gamma, eta) = (s(&g1), s(&e1));
        let rho = merge_integrands(&gamma, &eta, |_, i| mask[i]).unwrap();
        let split = stochastic_integral(&gamma, &a).unwrap().add(&stochastic_integral(&eta, &b).unwrap()).unwrap();
        let merged = stochastic_integral(&rho, &a.add(&b).unwrap()).unwrap();
        prop_assert_eq!(split.data(), merged.data());
    }

    #[test]
    fn tree_oracle_invariants(instance in 0u64..200) {
        let world = build_tree(&random_tree_spec(11, instance, 6, 256)).unwrap();
        let p = world.probabilities();
        // Conservation: node mass equals the sum over its children.
        for t in 0..world.n_steps() {
            let (parent, child) = (world.block(t), world.block(t + 1));
            for k in 0..world.n_nodes(t) {
                let mass: f64 = p[k * parent..(k + 1) * parent].iter().sum();
                let kids: f64 = (0..parent / child).map(|c| p[k * parent + c * child..k * parent + (c + 1) * child].iter().sum::<f64>()).sum();
                prop_assert!((mass - kids).abs() <= 1e-15);
            }
        }
        // Tower law.
        let n = world.n_steps();
        let rv: Vec<f64> = (0..world.n_atoms()).map(|a| world.walk().at(a, n).powi(2)).collect();
        for t in 0..n {
            let direct = exact_condexp(&world, &rv, t).unwrap();
            let via = exact_condexp(&world, &exact_condexp(&world, &rv, t + 1).unwrap(), t).unwrap();
            for (x, y) in direct.iter().zip(&via) { prop_assert!((x - y).abs() <= 1e-12); }
        }
        // Compensated occurrence process has zero one-step conditional means.
        let tau = world.first_time(|a, t| world.walk().at(a, t) > 0.3).unwrap();
        let h = exact_compensator(&world, &tau).unwrap().h;
        for t in 1..=n {
            let inc: Vec<f64> = (0..world.n_atoms()).map(|a| h.increment(a, t)).collect();
            for v in exact_condexp(&world, &inc, t - 1).unwrap() { prop_assert!(v.abs() <= 1e-12); }
        }
        // GKW residual is orthogonal to every basis increment at every node.
        let m = exact_martingale(&world, &(0..world.n_atoms()).map(|a| world.walk().at(a, n)).collect::<Vec<_>>()).unwrap();
        let gkw = exact_gkw(&world, &rv, &[&m, &h]).unwrap();
        for t in 1..=n {
            for basis in [&m, &h] {
                let prod: Vec<f64> = (0..world.n_atoms()).map(|a| gkw.residual.increment(a, t) * basis.increment(a, t)).collect();
                for v in exact_condexp(&world, &prod, t - 1).unwrap() { prop_assert!(v.abs() <= 1e-12); }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn adding_a_basis_element_never_increases_the_increment_residual(seed in any::<u64>()) {
        let g = grid(10);
        let n_paths = 400;
        let b = simulate_drivers(&g, n_paths, &DriverSpec::new().brownian("W").brownian("Z"), seed).unwrap();
        let (w, z) = (b.component("W").unwrap(), b.component("Z").unwrap());
        let v = w.zip_with(z, "F", |x, y| x * y + 0.5 * y).unwrap();
        let tau = RandomTime::never(g, n_paths);
        let f = build_features(&[("W", w), ("Z", z)], Summaries::default(), &tau, &StoppingFamily::empty()).unwrap();
        let dict = Dictionary::polynomial("W", 1).with(thinthick::enlargement::Term::linear("Z"));
        let cfg = ProjectionConfig::default();
        let one = gkw_project(&v, &[("W", w)], &f, &dict, &cfg).unwrap();
        let two = gkw_project(&v, &[("W", w), ("Z", z)], &f, &dict, &cfg).unwrap();
        prop_assert!(two.increment_ratio <= one.increment_ratio + 1e-12);
    }
}
