use super::common::{
    battery, certify_basis, default_dictionary, drift_config, merge_identity, project_battery,
    residual_table, spread_indices, BasisSpec,
};
use super::config::ScenarioConfig;
use super::report::{ReportBundle, Table};
use crate::analysis::{orthogonality_test, realized_bracket};
use crate::engine::rng::derive_seed;
use crate::engine::{simulate_drivers, DriverSpec, Series, TimeGrid};
use crate::enlargement::{
    build_features, thick_compensated, thin_compensated, total_compensated, Conditioning,
    Dictionary, IntensitySource, RegressionConfig, Summaries, ThinSource,
};
use crate::error::{Error, Result};
use crate::random_times::{
    avoidance_rate, cox_time, decomposition_violations, min_combine, thin_thick_decompose,
    RandomTime, StoppingFamily,
};
use crate::stats::{mean_se, proportion};

/// Cumulative hazard split into a continuous part, which never moves at a
/// family step, and a jump part, which moves only there.
pub(crate) struct Hazard {
    pub continuous: Series,
    pub jumps: Series,
    pub jump_idx: Vec<usize>,
}

impl Hazard {
    /// `rate(p, i)` is the intensity at `t_{i-1}` and `jump(p, i)` the hazard
    /// charged at jump index `i`.
    pub fn build(
        grid: TimeGrid,
        n_paths: usize,
        jump_idx: Vec<usize>,
        rate: impl Fn(usize, usize) -> f64 + Sync,
        jump: impl Fn(usize, usize) -> f64 + Sync,
    ) -> Self {
        let dt = grid.dt();
        let continuous = Series::from_paths(grid, n_paths, "F", |p, row| {
            let mut acc = 0.0;
            for i in 1..row.len() {
                if !jump_idx.contains(&i) {
                    acc += rate(p, i) * dt;
                }
                row[i] = acc;
            }
        });
        let jumps = Series::from_paths(grid, n_paths, "F", |p, row| {
            let mut acc = 0.0;
            for i in 1..row.len() {
                if jump_idx.contains(&i) {
                    acc += jump(p, i);
                }
                row[i] = acc;
            }
        });
        Self {
            continuous,
            jumps,
            jump_idx,
        }
    }

    pub fn total(&self) -> Result<Series> {
        self.continuous.add(&self.jumps)
    }
}

/// Grid indices of the given dates; each must fall in `(0, horizon]` and
/// the snapped indices must be distinct.
pub(crate) fn snap_dates(grid: &TimeGrid, dates: &[f64], what: &str) -> Result<Vec<usize>> {
    let mut idx = Vec::new();
    for &t in dates {
        match grid.index_at_or_after(t) {
            Some(i) if t > 0.0 && i > 0 => idx.push(i),
            _ => {
                return Err(Error::Usage(format!(
                    "{what} {t} must lie in (0, {}]",
                    grid.horizon()
                )))
            }
        }
    }
    let mut sorted = idx.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != idx.len() || sorted != idx {
        return Err(Error::Usage(format!(
            "{what} must be increasing and fall on distinct grid points"
        )));
    }
    Ok(idx)
}

fn positive(cfg: &ScenarioConfig, key: &str) -> Result<f64> {
    let v: f64 = cfg.param(key)?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::Usage(format!(
            "{key} must be finite and >= 0, got {v}"
        )));
    }
    Ok(v)
}

/// How `τ` is drawn from the hazard.
pub(crate) enum Recipe {
    /// One Cox time on the total hazard.
    Single,
    /// Minimum of a Cox time on the jump part, pinned to the jump dates, and an
    /// independent Cox time on the continuous part.
    Hybrid,
}

/// The reference-filtration side of a scenario.
pub(crate) struct Reference<'a> {
    /// Driver used for features, binning and the battery.
    pub name: &'a str,
    pub x: &'a Series,
    /// Further features.
    pub extra_features: Vec<(&'a str, &'a Series)>,
    /// Martingales of the reference filtration.
    pub basis: Vec<(&'a str, &'a Series)>,
    pub dictionary: Dictionary,
    pub extra_targets: Vec<(String, Vec<f64>)>,
}

fn pinned_cox(k: &Series, seed: u64) -> Result<RandomTime> {
    let t = cox_time(k, seed)?;
    let exact = (0..t.n_paths()).map(|p| t.time(p)).collect();
    RandomTime::new(*t.grid(), t.values().to_vec())?
        .with_offset(t.path_offset())
        .with_exact(exact)
}

/// Draws `τ`, decomposes it, compensates both parts, certifies the basis and
/// runs the projection battery.
pub(crate) fn run_pipeline(
    cfg: &ScenarioConfig,
    out: &mut ReportBundle,
    r: Reference,
    hazard: Hazard,
    recipe: Recipe,
) -> Result<()> {
    let grid = *r.x.grid();
    let n_paths = r.x.n_paths();
    let threshold: f64 = cfg.param("threshold")?;
    let tie_tol: f64 = cfg.param("tie_tol")?;
    let k_total = hazard.total()?;

    let tau = match recipe {
        Recipe::Single => cox_time(&k_total, derive_seed(cfg.seed, "tau"))?,
        Recipe::Hybrid => {
            let zeta = pinned_cox(&hazard.jumps, derive_seed(cfg.seed, "zeta"))?;
            let xi = cox_time(&hazard.continuous, derive_seed(cfg.seed, "xi"))?;
            let (tau, ties) = min_combine(&zeta, &xi)?;
            out.count("hybrid.ties", ties, 0);
            out.verdict("hybrid.no_ties", ties == 0);
            let d = thin_thick_decompose(
                &tau,
                &StoppingFamily::deterministic(grid, n_paths, &hazard.jump_idx)?,
            )?;
            let mislabelled = (0..n_paths)
                .filter(|&p| {
                    (d.thin.value(p).is_some())
                        != (zeta.value(p).is_some() && zeta.value(p) == tau.value(p))
                })
                .count();
            out.count("hybrid.thin_part_differs_from_review_time", mislabelled, 0);
            out.verdict("hybrid.thin_part_is_review_time", mislabelled == 0);
            tau
        }
    };
    let family = if hazard.jump_idx.is_empty() {
        StoppingFamily::empty()
    } else {
        StoppingFamily::deterministic(grid, n_paths, &hazard.jump_idx)?
    };
    let d = thin_thick_decompose(&tau, &family)?;
    out.estimate(
        "tau.occurred",
        proportion(tau.n_finite(), n_paths).mean,
        proportion(tau.n_finite(), n_paths).se,
    );
    let thin_share = proportion(d.thin.n_finite(), n_paths);
    out.estimate("tau.thin_share", thin_share.mean, thin_share.se);
    let violations = decomposition_violations(&tau, &d.thin, &d.thick);
    out.count("decomposition.violations", violations, 0);
    out.verdict("decomposition_identity", violations == 0);
    let avoid = avoidance_rate(&d.thick, &family, tie_tol)?;
    out.measured("avoidance.thick_collision_rate", avoid.aggregate, tie_tol);
    out.note("avoidance.compared_exact_times", avoid.used_exact);
    out.verdict("avoidance", avoid.pass);

    survival_check(
        out,
        &tau,
        &k_total,
        &spread_indices(
            grid.n_steps(),
            cfg.param::<usize>("survival_points").unwrap_or(5),
        ),
        3.0,
    );

    let mut drivers = vec![(r.name, r.x)];
    drivers.extend(r.extra_features.iter().copied());
    let f = build_features(&drivers, Summaries::default(), &tau, &family)?;
    let reg = RegressionConfig::default();

    let analytic: Vec<Vec<f64>> = hazard
        .jump_idx
        .iter()
        .map(|&i| {
            (0..n_paths)
                .map(|p| -(-hazard.jumps.increment(p, i)).exp_m1())
                .collect()
        })
        .collect();
    let thin_source = match cfg
        .param::<String>("thin_source")
        .as_deref()
        .unwrap_or("analytic")
    {
        "analytic" => ThinSource::Analytic(analytic.clone()),
        "regression" => ThinSource::Regression {
            dictionary: r.dictionary.clone(),
            conditioning: Conditioning::PreStep,
        },
        other => {
            return Err(Error::Usage(format!(
                "thin_source must be analytic or regression, got {other:?}"
            )))
        }
    };
    let thick_source = match cfg
        .param::<String>("thick_source")
        .as_deref()
        .unwrap_or("analytic")
    {
        "analytic" => IntensitySource::CumulativeHazard(hazard.continuous.clone()),
        "empirical" => IntensitySource::EmpiricalHazard {
            dictionary: r.dictionary.clone(),
        },
        other => {
            return Err(Error::Usage(format!(
                "thick_source must be analytic or empirical, got {other:?}"
            )))
        }
    };
    let thin = thin_compensated(&d, &family, &f, &thin_source, &reg)?;
    for n in &thin.skipped {
        out.skip(format!(
            "thin probability of member {} from pooled frequency: population below floor",
            n + 1
        ));
    }
    out.count("thin.clipped_estimates", thin.clipped, n_paths);
    let thick = thick_compensated(&d, &family, &f, &thick_source, &reg)?;
    for i in &thick.skipped_steps {
        out.skip(format!(
            "thick hazard at step {i} from pooled frequency: population below floor"
        ));
    }
    out.count(
        "thick.clipped_estimates",
        thick.clipped,
        n_paths * grid.len(),
    );
    let h = total_compensated(&thin, &thick, &d, 0.0)?;

    if !family.is_empty() {
        jump_law(out, &d, &family, &analytic, &thin.probabilities, &k_total);
        let br = realized_bracket(&thin.h, &thick.h)?;
        let max = br.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        out.measured("bracket.thin_thick.max_abs", max, 0.0);
        let o = orthogonality_test(&thin.h, &thick.h, cfg.alpha, None)?;
        out.verdict("thin_thick_bracket_zero", o.pathwise_zero);
    }

    let drift = drift_config(cfg.alpha, r.name);
    let mut certified_elems = r.basis.clone();
    if family.is_empty() {
        certified_elems.push(("H", &h));
    } else {
        certified_elems.push(("H_thin", &thin.h));
        certified_elems.push(("H_thick", &thick.h));
    }
    let mut certified = certify_basis(out, &certified_elems, &f, &drift)?;
    if !family.is_empty() {
        let mut t = Table::new(
            "drift_total",
            &["process", "start", "end", "cell", "n", "mean", "se", "z"],
        );
        certified &= super::common::drift_verdict(out, &mut t, "H", &h, &f, &drift, true)?;
        out.table(t);
    }

    let mut targets = battery(r.name, r.x, &tau);
    targets.extend(r.extra_targets);
    let mut merged = r.basis.clone();
    merged.push(("H", &h));
    let mut split = r.basis.clone();
    split.push(("H_thin", &thin.h));
    split.push(("H_thick", &thick.h));
    let mut bases = vec![BasisSpec {
        name: "merged",
        elements: merged,
        judged: true,
    }];
    if !family.is_empty() {
        bases.push(BasisSpec {
            name: "split",
            elements: split,
            judged: false,
        });
    }
    bases.push(BasisSpec {
        name: "reference_only",
        elements: r.basis.clone(),
        judged: false,
    });
    let mut table = residual_table();
    let results = project_battery(
        out,
        &mut table,
        &targets,
        &bases,
        &f,
        &r.dictionary,
        threshold,
    )?;
    out.table(table);
    if !family.is_empty() {
        merge_identity(out, &targets, &results, 1e-8);
    }
    let battery_ok = results.iter().all(|row| {
        row[0]
            .as_ref()
            .is_some_and(|x| x.residual_ratio.value <= threshold)
    });
    out.verdict("basis_certified", certified && battery_ok);
    Ok(())
}

/// `P(τ > t_i)` against `E[exp(-K_{t_i})]` at `indices`, tested through the
/// pathwise difference so that the two estimates share their noise.
pub(crate) fn survival_check(
    out: &mut ReportBundle,
    tau: &RandomTime,
    k: &Series,
    indices: &[usize],
    n_se: f64,
) -> bool {
    let grid = *tau.grid();
    let mut table = Table::new(
        "survival",
        &[
            "index",
            "time",
            "empirical",
            "empirical_se",
            "expected",
            "expected_se",
            "z",
        ],
    );
    let mut ok = true;
    for &i in indices {
        let alive: Vec<f64> = (0..tau.n_paths())
            .map(|p| if tau.occurred_by(p, i) { 0.0 } else { 1.0 })
            .collect();
        let law: Vec<f64> = (0..tau.n_paths()).map(|p| (-k.at(p, i)).exp()).collect();
        let diff: Vec<f64> = alive.iter().zip(&law).map(|(a, b)| a - b).collect();
        let (e, x, dd) = (
            mean_se(&alive, None),
            mean_se(&law, None),
            mean_se(&diff, None),
        );
        let z = dd.z(0.0);
        ok &= z.abs() <= n_se;
        out.estimate(&format!("survival.t{i}.empirical"), e.mean, e.se);
        out.estimate(&format!("survival.t{i}.expected"), x.mean, x.se);
        table.push(vec![
            i.into(),
            grid.time(i).into(),
            e.mean.into(),
            e.se.into(),
            x.mean.into(),
            x.se.into(),
            z.into(),
        ]);
    }
    out.table(table);
    out.verdict("survival_law", ok)
}

/// At each family date: the conditional frequency of `τ = T_n` among paths
/// alive there against the analytic hazard `1 - exp(-ΔK)`, and the
/// unconditional frequency against `E[exp(-K_{T_n-}) (1 - exp(-ΔK))]`.
fn jump_law(
    out: &mut ReportBundle,
    d: &crate::random_times::Decomposition,
    family: &StoppingFamily,
    analytic: &[Vec<f64>],
    used: &[Vec<f64>],
    k: &Series,
) {
    let mut table = Table::new(
        "jump_law",
        &[
            "member",
            "index",
            "alive",
            "hits",
            "conditional",
            "conditional_se",
            "hazard",
            "z_conditional",
            "unconditional",
            "unconditional_se",
            "expected",
            "z_unconditional",
            "used_probability",
        ],
    );
    let mut ok = true;
    let n_paths = d.tau.n_paths();
    for (n, m) in family.members().iter().enumerate() {
        let i = m.time.value(0).expect("deterministic family");
        let alive: Vec<usize> = (0..n_paths)
            .filter(|&p| d.tau.value(p).is_none_or(|t| t >= i))
            .collect();
        let hits = alive.iter().filter(|&&p| d.matched[n][p]).count();
        let cond = proportion(hits, alive.len());
        let gap: Vec<f64> = alive
            .iter()
            .map(|&p| (if d.matched[n][p] { 1.0 } else { 0.0 }) - analytic[n][p])
            .collect();
        let g = mean_se(&gap, None);
        let hazard = mean_se(
            &alive.iter().map(|&p| analytic[n][p]).collect::<Vec<_>>(),
            None,
        );
        let unc: Vec<f64> = (0..n_paths)
            .map(|p| if d.matched[n][p] { 1.0 } else { 0.0 })
            .collect();
        let expected: Vec<f64> = (0..n_paths)
            .map(|p| (-k.at(p, i - 1)).exp() * analytic[n][p])
            .collect();
        let ug = mean_se(
            &unc.iter()
                .zip(&expected)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
            None,
        );
        let (u, e) = (mean_se(&unc, None), mean_se(&expected, None));
        let used_mean = mean_se(&alive.iter().map(|&p| used[n][p]).collect::<Vec<_>>(), None);
        let (zc, zu) = (g.z(0.0), ug.z(0.0));
        ok &= zc.abs() <= 3.0 && zu.abs() <= 3.0;
        let key = format!("jump_law.member{}", n + 1);
        out.estimate(&format!("{key}.conditional"), cond.mean, cond.se);
        out.estimate(&format!("{key}.hazard"), hazard.mean, hazard.se);
        out.estimate(&format!("{key}.unconditional"), u.mean, u.se);
        out.estimate(&format!("{key}.unconditional_expected"), e.mean, e.se);
        out.estimate(
            &format!("{key}.used_probability"),
            used_mean.mean,
            used_mean.se,
        );
        table.push(vec![
            (n + 1).into(),
            i.into(),
            alive.len().into(),
            hits.into(),
            cond.mean.into(),
            cond.se.into(),
            hazard.mean.into(),
            zc.into(),
            u.mean.into(),
            u.se.into(),
            e.mean.into(),
            zu.into(),
            used_mean.mean.into(),
        ]);
    }
    out.table(table);
    out.verdict("jump_law", ok);
}

fn brownian(cfg: &ScenarioConfig) -> Result<(TimeGrid, Series)> {
    let grid = TimeGrid::new(cfg.horizon, cfg.n_steps)?;
    let b = simulate_drivers(
        &grid,
        cfg.n_paths,
        &DriverSpec::new().brownian("W"),
        cfg.seed,
    )?;
    Ok((grid, b.component("W")?.clone()))
}

/// Brownian reference filtration and a Cox time with intensity
/// `λ + slope |W|`; the time is thick only.
pub fn run_cox_continuous(cfg: &ScenarioConfig, out: &mut ReportBundle) -> Result<()> {
    let (lambda, slope) = (positive(cfg, "lambda")?, positive(cfg, "slope")?);
    let (grid, w) = brownian(cfg)?;
    let hazard = Hazard::build(
        grid,
        cfg.n_paths,
        Vec::new(),
        |p, i| lambda + slope * w.at(p, i - 1).abs(),
        |_, _| 0.0,
    );
    if slope == 0.0 {
        out.note("survival.law", "exp(-lambda t)");
    }
    let r = Reference {
        name: "W",
        x: &w,
        extra_features: vec![],
        basis: vec![("W", &w)],
        dictionary: default_dictionary("W"),
        extra_targets: vec![],
    };
    run_pipeline(cfg, out, r, hazard, Recipe::Single)
}

/// Cox time whose hazard has predictable jumps of size `jump_size` at
/// deterministic dates on top of a constant intensity.
pub fn run_cox_jumps(cfg: &ScenarioConfig, out: &mut ReportBundle) -> Result<()> {
    let (lambda, c) = (positive(cfg, "lambda")?, positive(cfg, "jump_size")?);
    let (grid, w) = brownian(cfg)?;
    let idx = snap_dates(&grid, &cfg.param_list("jump_times")?, "jump_times")?;
    let hazard = Hazard::build(grid, cfg.n_paths, idx, |_, _| lambda, |_, _| c);
    let r = Reference {
        name: "W",
        x: &w,
        extra_features: vec![],
        basis: vec![("W", &w)],
        dictionary: default_dictionary("W"),
        extra_targets: vec![],
    };
    run_pipeline(cfg, out, r, hazard, Recipe::Single)
}

/// `τ = ζ* ∧ ξ`: `ζ*` charges hazard `c (1 + κ |W|)` at review dates only,
/// `ξ` is an independent Cox time with constant intensity off those dates.
pub fn run_hybrid_default(cfg: &ScenarioConfig, out: &mut ReportBundle) -> Result<()> {
    let (lambda, c, kappa) = (
        positive(cfg, "lambda")?,
        positive(cfg, "review_size")?,
        positive(cfg, "review_slope")?,
    );
    let (grid, w) = brownian(cfg)?;
    let idx = snap_dates(&grid, &cfg.param_list("review_times")?, "review_times")?;
    if idx.is_empty() {
        return Err(Error::Usage(
            "hybrid-default needs at least one review date".into(),
        ));
    }
    let hazard = Hazard::build(
        grid,
        cfg.n_paths,
        idx,
        |_, _| lambda,
        |p, i| c * (1.0 + kappa * w.at(p, i - 1).abs()),
    );
    let dictionary = default_dictionary("W").with(crate::enlargement::Term::Abs("W".into()));
    let r = Reference {
        name: "W",
        x: &w,
        extra_features: vec![],
        basis: vec![("W", &w)],
        dictionary,
        extra_targets: vec![],
    };
    run_pipeline(cfg, out, r, hazard, Recipe::Hybrid)
}

/// Brownian motion plus compound Poisson jumps with finitely many marks. The
/// reference basis is `W` and one compensated counter per mark; `τ` has
/// intensity `a + b |X|` plus optional predictable hazard jumps.
pub fn run_levy_jumps(cfg: &ScenarioConfig, out: &mut ReportBundle) -> Result<()> {
    let marks = cfg.param_list("marks")?;
    let rates = cfg.param_list("rates")?;
    if marks.len() != rates.len() || marks.is_empty() {
        return Err(Error::Usage(
            "marks and rates must be non-empty lists of equal length".into(),
        ));
    }
    let (a, b, c) = (
        positive(cfg, "intensity_base")?,
        positive(cfg, "intensity_slope")?,
        positive(cfg, "jump_size")?,
    );
    let grid = TimeGrid::new(cfg.horizon, cfg.n_steps)?;
    let mut spec = DriverSpec::new().brownian("W");
    let names: Vec<String> = (0..marks.len()).map(|k| format!("N{}", k + 1)).collect();
    for ((name, &m), &r) in names.iter().zip(&marks).zip(&rates) {
        spec = spec.poisson(name.clone(), r, m);
    }
    let bundle = simulate_drivers(&grid, cfg.n_paths, &spec, cfg.seed)?;
    let w = bundle.component("W")?.clone();
    let mut x = w.clone();
    let mut compensated = Vec::new();
    for (name, &r) in names.iter().zip(&rates) {
        x = x.add(&bundle.compound_value(name)?)?;
        let counts = bundle.component(name)?;
        compensated.push(Series::from_paths(grid, cfg.n_paths, "F", |p, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = counts.at(p, i) - r * grid.time(i);
            }
        }));
    }
    let x = x.with_tag("F");
    let idx = snap_dates(&grid, &cfg.param_list("jump_times")?, "jump_times")?;
    let hazard = Hazard::build(
        grid,
        cfg.n_paths,
        idx,
        |p, i| a + b * x.at(p, i - 1).abs(),
        |_, _| c,
    );
    let comp_names: Vec<String> = names.iter().map(|n| format!("{n}~")).collect();
    let mut basis: Vec<(&str, &Series)> = vec![("W", &w)];
    for (n, s) in comp_names.iter().zip(&compensated) {
        basis.push((n.as_str(), s));
    }
    let dictionary = default_dictionary("X")
        .with(crate::enlargement::Term::linear("W"))
        .with(crate::enlargement::Term::power("W", 2));
    let n = grid.n_steps();
    let extra_targets = vec![
        ("W_T".to_string(), w.terminal()),
        (
            "W_T^2".to_string(),
            (0..cfg.n_paths).map(|p| w.at(p, n).powi(2)).collect(),
        ),
    ];
    let r = Reference {
        name: "X",
        x: &x,
        extra_features: vec![("W", &w)],
        basis,
        dictionary,
        extra_targets,
    };
    run_pipeline(cfg, out, r, hazard, Recipe::Single)
}
