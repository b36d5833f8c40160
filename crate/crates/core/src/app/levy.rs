use super::common::{
    certify_basis, drift_config, drift_verdict, project_battery, residual_table, BasisSpec,
};
use super::config::ScenarioConfig;
use super::report::{ReportBundle, Table};
use crate::analysis::{gkw_project, ProjectionConfig};
use crate::engine::{
    doleans_exponential, levy_transform_series, simulate_paths, DriverSpec, Series, TimeGrid,
};
use crate::enlargement::{
    build_features, thin_compensated, total_compensated, Dictionary, EnlargedFeatureSet,
    RegressionConfig, Summaries, Term, ThickCompensated, ThinSource,
};
use crate::error::{Error, Result};
use crate::random_times::{
    alternating_hitting_series, hitting_time_series, thin_thick_decompose, Crossing, FamilyMember,
    RandomTime, StoppingFamily,
};
use crate::stats::{mean_se, pairwise_sum, proportion};

/// Processes of one chunk on one grid.
struct ChunkRun {
    s: Series,
    b: Series,
    n: Series,
    broken: Series,
    h_tau: Series,
    phase: Series,
    tau: RandomTime,
    family: StoppingFamily,
    truncated: usize,
}

fn run_chunk(
    w: &Series,
    inner: f64,
    members: usize,
    coefficient: f64,
    broken: f64,
) -> Result<ChunkRun> {
    let grid = *w.grid();
    let b = levy_transform_series(w);
    let s = doleans_exponential(&b);
    let tau = hitting_time_series(w, Crossing::Up(1.0), 0)?;
    let family = alternating_hitting_series(w, 1.0, inner, members)?;
    let d = thin_thick_decompose(&tau, &family)?;
    let empty = EnlargedFeatureSet::new(grid, w.n_paths());
    let reg = RegressionConfig::default();
    let constant = |c: f64| ThinSource::Analytic(vec![vec![c; w.n_paths()]; family.len()]);
    let thin = thin_compensated(&d, &family, &empty, &constant(coefficient), &reg)?;
    let wrong = thin_compensated(&d, &family, &empty, &constant(broken), &reg)?;
    // The thick part only carries mass truncated beyond the last kept member;
    // it has no intensity on the grid.
    let occurred = Series::from_paths(grid, w.n_paths(), "F^tau", |p, row| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = if d.thick.occurred_by(p, i) { 1.0 } else { 0.0 };
        }
    })
    .with_offset(w.path_offset());
    let thick = ThickCompensated {
        h: occurred,
        lambda: Series::zeros(grid, w.n_paths(), "F^tau"),
        skipped_steps: Vec::new(),
        clipped: 0,
    };
    let h_tau = total_compensated(&thin, &thick, &d, 0.0)?;
    let phase = Series::from_paths(grid, w.n_paths(), "F^tau", |p, row| {
        let x = w.path(p);
        for m in family.members() {
            let Some(t) = m.time.value(p) else { break };
            if tau.value(p).is_some_and(|v| v <= t) {
                break;
            }
            let side = x[t].signum();
            for i in t..row.len() {
                if i > t && (x[i].abs() <= inner || x[i].signum() != side) {
                    break;
                }
                row[i] = 1.0;
            }
        }
    });
    Ok(ChunkRun {
        s,
        b,
        n: thin.h,
        broken: wrong.h,
        h_tau,
        phase,
        tau,
        family,
        truncated: d.truncated,
    })
}

fn terminal_bracket(x: &Series, y: &Series) -> Vec<f64> {
    (0..x.n_paths())
        .map(|p| {
            let (a, b) = (x.path(p), y.path(p));
            let terms: Vec<f64> = (1..a.len())
                .map(|i| (a[i] - a[i - 1]) * (b[i] - b[i - 1]))
                .collect();
            pairwise_sum(&terms)
        })
        .collect()
}

fn sampled(x: &Series, every: usize) -> Result<Series> {
    x.coarsen(every)
}

/// Functions of `|W|` and the excursion phase, also divided by `S` so that
/// integrands against `S` can express integrands against `B`.
fn levy_dictionary() -> Dictionary {
    let inv = || Term::power("S", -1);
    Dictionary::new(vec![
        Term::Constant,
        Term::linear("absW"),
        Term::power("absW", 2),
        Term::linear("S"),
        Term::linear("occurred"),
        Term::linear("revealed"),
        Term::linear("phase"),
        Term::product(Term::linear("phase"), Term::linear("absW")),
        inv(),
        Term::product(Term::linear("absW"), inv()),
        Term::product(Term::power("absW", 2), inv()),
        Term::product(Term::linear("phase"), inv()),
        Term::product(
            Term::product(Term::linear("phase"), Term::linear("absW")),
            inv(),
        ),
    ])
}

/// Ratio `E[a]/E[b]` with a delta-method standard error from paired samples.
fn paired_ratio(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let (ma, mb) = (pairwise_sum(a) / n, pairwise_sum(b) / n);
    let r = ma / mb;
    let g: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - r * y) / mb).collect();
    (r, mean_se(&g, None).se)
}

/// The Lévy transform scenario: `B = ∫ sign(W) dW`, `S = E(B)`, `τ` the first
/// time `W` reaches 1 and `(T_n)` the alternating hitting times of `|W|`
/// between 1 and an inner level. `N` compensates the thin time with constant
/// probability `coefficient`.
///
/// Paths are processed in chunks; drift tests and projections use every
/// `record_every`-th grid point, probabilities and brackets the full grid.
pub fn run_levy_transform(cfg: &ScenarioConfig, out: &mut ReportBundle) -> Result<()> {
    let coefficient: f64 = cfg.param("coefficient")?;
    let broken: f64 = cfg.param("broken_coefficient")?;
    let members: usize = cfg.param("members")?;
    let beta: f64 = cfg.param("inner_beta")?;
    let every: usize = cfg.param("record_every")?;
    let chunk: usize = cfg.param("chunk")?;
    let shrink_required: f64 = cfg.param("shrink")?;
    let threshold: f64 = cfg.param("threshold")?;
    let fail_floor: f64 = cfg.param("fail_floor")?;
    if members == 0 || chunk == 0 || every == 0 || beta < 0.0 {
        return Err(Error::Usage(
            "members, chunk and record_every must be positive and inner_beta >= 0".into(),
        ));
    }
    if !cfg.n_steps.is_multiple_of(2) || !cfg.n_steps.is_multiple_of(every) {
        return Err(Error::Usage(format!(
            "steps ({}) must be even and a multiple of record_every ({every})",
            cfg.n_steps
        )));
    }
    let grid = TimeGrid::new(cfg.horizon, cfg.n_steps)?;
    let half = grid.coarsen(2)?;
    let inner = beta * grid.dt().sqrt();
    let inner_half = beta * half.dt().sqrt();
    out.measured("levy.inner_level", inner, 0.0);
    let spec = DriverSpec::new().brownian("W");

    let mut alive = vec![0usize; members];
    let mut hits = vec![0usize; members];
    let mut truncated = 0usize;
    let mut bracket_fine = Vec::with_capacity(cfg.n_paths);
    let mut bracket_half = Vec::with_capacity(cfg.n_paths);
    let mut recorded: [Option<Series>; 7] = Default::default();
    let mut tau_values: Vec<Option<usize>> = Vec::with_capacity(cfg.n_paths);
    let mut family_values: Vec<Vec<Option<usize>>> = vec![Vec::with_capacity(cfg.n_paths); members];

    let mut start = 0;
    while start < cfg.n_paths {
        let end = (start + chunk).min(cfg.n_paths);
        let bundle = simulate_paths(&grid, &spec, cfg.seed, start..end)?;
        let w = bundle.component("W")?;
        let run = run_chunk(w, inner, members, coefficient, broken)?;
        for p in 0..w.n_paths() {
            for n in 0..members {
                let Some(t) = run.family.member(n).value(p) else {
                    break;
                };
                if run.tau.value(p).is_none_or(|x| x >= t) {
                    alive[n] += 1;
                    if run.tau.value(p) == Some(t) {
                        hits[n] += 1;
                    }
                }
            }
        }
        truncated += run.truncated;
        bracket_fine.extend(terminal_bracket(&run.s, &run.n));
        let abs_w = w.map("F", f64::abs);
        let pieces = [
            &abs_w,
            &run.b,
            &run.s,
            &run.n,
            &run.broken,
            &run.h_tau,
            &run.phase,
        ];
        for (slot, x) in recorded.iter_mut().zip(pieces) {
            let r = sampled(x, every)?;
            match slot {
                Some(acc) => acc.append(&r)?,
                None => *slot = Some(r),
            }
        }
        tau_values.extend_from_slice(run.tau.values());
        for (n, v) in family_values.iter_mut().enumerate() {
            v.extend_from_slice(run.family.member(n).values());
        }
        drop(run);
        let wh = w.coarsen(2)?;
        let coarse = run_chunk(&wh, inner_half, members, coefficient, broken)?;
        bracket_half.extend(terminal_bracket(&coarse.s, &coarse.n));
        start = end;
    }

    // Symmetry constant: P(W_{T_n} = 1 | τ >= T_n) = 1/2.
    let mut table = Table::new(
        "thin_probability",
        &[
            "member",
            "alive",
            "hits",
            "probability",
            "se",
            "expected",
            "z",
        ],
    );
    let mut symmetric = true;
    for n in 0..members {
        let e = proportion(hits[n], alive[n]);
        let z = e.z(0.5);
        if n < 3 {
            symmetric &= z.abs() <= 3.0;
            out.estimate(&format!("levy.member{}.probability", n + 1), e.mean, e.se);
            out.count(&format!("levy.member{}.alive", n + 1), alive[n], 0);
        }
        table.push(vec![
            (n + 1).into(),
            alive[n].into(),
            hits[n].into(),
            e.mean.into(),
            e.se.into(),
            0.5.into(),
            z.into(),
        ]);
    }
    out.table(table);
    out.verdict("symmetry_constant", symmetric);
    out.count("levy.truncated_paths", truncated, cfg.n_paths);

    // Bracket of S and N on the full grid and with dt doubled.
    let fine = mean_se(&bracket_fine, None);
    out.estimate("bracket.S_N.terminal_mean", fine.mean, fine.se);
    out.verdict("bracket.S_N.mean_zero", fine.z(0.0).abs() <= 4.0);
    let abs_fine: Vec<f64> = bracket_fine.iter().map(|v| v.abs()).collect();
    let abs_half: Vec<f64> = bracket_half.iter().map(|v| v.abs()).collect();
    let (mf, mh) = (mean_se(&abs_fine, None), mean_se(&abs_half, None));
    out.estimate("bracket.S_N.mean_abs.dt", mf.mean, mf.se);
    out.estimate("bracket.S_N.mean_abs.2dt", mh.mean, mh.se);
    let (ratio, ratio_se) = paired_ratio(&abs_fine, &abs_half);
    out.estimate("bracket.S_N.shrink", 1.0 - ratio, ratio_se);
    out.measured("bracket.S_N.shrink.required", shrink_required, 0.0);
    out.measured(
        "bracket.S_N.shrink.sqrt_dt_prediction",
        1.0 - std::f64::consts::FRAC_1_SQRT_2,
        0.0,
    );
    out.verdict("bracket.S_N.shrink", 1.0 - ratio >= shrink_required);

    // Recorded grid: features, drift tests, projections.
    let [abs_w, b, s, n, wrong, h_tau, phase] = recorded.map(|x| x.expect("at least one chunk"));
    let tau = RandomTime::new(grid, tau_values)?.coarsen(every)?;
    let family = StoppingFamily::new(
        family_values
            .into_iter()
            .map(|v| {
                Ok(FamilyMember {
                    time: RandomTime::new(grid, v)?,
                    predictable: true,
                })
            })
            .collect::<Result<_>>()?,
        true,
    )?
    .coarsen(every)?;
    let mut f = build_features(
        &[("absW", &abs_w), ("B", &b), ("S", &s)],
        Summaries::default(),
        &tau,
        &family,
    )?;
    f.push("phase", &phase)?;
    let drift = drift_config(cfg.alpha, "absW");
    let mut certified = certify_basis(out, &[("S", &s), ("N", &n)], &f, &drift)?;
    let mut t = Table::new(
        "drift_variants",
        &["process", "start", "end", "cell", "n", "mean", "se", "z"],
    );
    certified &= drift_verdict(out, &mut t, "H_tau", &h_tau, &f, &drift, true)?;
    drift_verdict(out, &mut t, "N_broken", &wrong, &f, &drift, false)?;
    out.table(t);

    let dictionary = levy_dictionary();
    let pc = ProjectionConfig::default();
    let mut res = residual_table();
    let on_s = gkw_project(&n, &[("S", &s)], &f, &dictionary, &pc)?;
    let on_sn = gkw_project(&n, &[("S", &s), ("N", &n)], &f, &dictionary, &pc)?;
    out.estimate(
        "projection.N.S.rho_res",
        on_s.residual_ratio.value,
        on_s.residual_ratio.se,
    );
    out.estimate(
        "projection.N.S_N.rho_res",
        on_sn.residual_ratio.value,
        on_sn.residual_ratio.se,
    );
    let fails = out.verdict(
        "projection.N.S_insufficient",
        on_s.residual_ratio.value >= fail_floor,
    );
    let spans = out.verdict(
        "projection.N.S_N_spans",
        on_sn.residual_ratio.value <= threshold,
    );
    for (basis, r, bound, ok) in [
        ("S", &on_s, fail_floor, fails),
        ("S,N", &on_sn, threshold, spans),
    ] {
        res.push(vec![
            "N".into(),
            basis.into(),
            r.residual_ratio.value.into(),
            r.residual_ratio.se.into(),
            r.increment_ratio.into(),
            r.rank_deficient_groups().into(),
            bound.into(),
            ok.into(),
        ]);
    }

    let battery = match cfg.param::<String>("battery")?.as_str() {
        "on" => true,
        "off" => false,
        other => {
            return Err(Error::Usage(format!(
                "battery must be on or off, got {other:?}"
            )))
        }
    };
    if battery {
        let horizon = tau.grid().n_steps();
        let targets = vec![
            (
                "call_S_T".to_string(),
                (0..s.n_paths())
                    .map(|p| (s.at(p, horizon) - 1.0).max(0.0))
                    .collect(),
            ),
            (
                "default_by_T".to_string(),
                (0..s.n_paths())
                    .map(|p| {
                        if tau.occurred_by(p, horizon) {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            ),
        ];
        let bases = [BasisSpec {
            name: "S_N",
            elements: vec![("S", &s), ("N", &n)],
            judged: false,
        }];
        project_battery(out, &mut res, &targets, &bases, &f, &dictionary, threshold)?;
    }
    out.table(res);
    out.verdict("basis_certified", certified && spans);
    Ok(())
}
