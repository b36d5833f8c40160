use super::report::{ReportBundle, Table};
use crate::analysis::{
    drift_test, gkw_project, orthogonality_test, target_martingale, DriftConfig, ProjectionConfig,
    ProjectionResult,
};
use crate::engine::Series;
use crate::enlargement::{Dictionary, EnlargedFeatureSet, RegressionConfig, Term};
use crate::error::{Error, Result};
use crate::random_times::RandomTime;

/// Drift test setup shared by the scenarios: ten time blocks, quintiles of
/// `bin` and a split on whether `τ` has occurred.
pub fn drift_config(alpha: f64, bin: &str) -> DriftConfig {
    DriftConfig {
        alpha,
        ..DriftConfig::default()
    }
    .binned(bin, 5)
    .split("occurred")
}

/// `{1, X, X², occurred, X·occurred, τ∧t}` for a driver feature `x`.
pub fn default_dictionary(x: &str) -> Dictionary {
    Dictionary::polynomial(x, 2)
        .with(Term::linear("occurred"))
        .with(Term::product(Term::linear(x), Term::linear("occurred")))
        .with(Term::linear("stopped"))
}

/// Drift tests of every basis element and orthogonality tests of every pair.
/// Returns whether all passed.
pub fn certify_basis(
    out: &mut ReportBundle,
    basis: &[(&str, &Series)],
    f: &EnlargedFeatureSet,
    drift: &DriftConfig,
) -> Result<bool> {
    let mut ok = true;
    let mut table = Table::new(
        "drift",
        &["process", "start", "end", "cell", "n", "mean", "se", "z"],
    );
    for (name, s) in basis {
        ok &= drift_verdict(out, &mut table, name, s, f, drift, true)?;
    }
    out.table(table);
    let mut orth = Table::new(
        "orthogonality",
        &[
            "left",
            "right",
            "pathwise_zero",
            "terminal_mean",
            "terminal_se",
            "max_abs_z",
            "threshold",
        ],
    );
    for (a, (na, sa)) in basis.iter().enumerate() {
        for (nb, sb) in &basis[a + 1..] {
            let r = orthogonality_test(sa, sb, drift.alpha, f.weights())?;
            let key = format!("orthogonality.{na}.{nb}");
            out.estimate(
                &format!("{key}.terminal_bracket"),
                r.terminal.mean,
                r.terminal.se,
            );
            out.measured(&format!("{key}.max_abs_z"), r.max_abs_z, r.threshold);
            ok &= out.verdict(&key, r.pass);
            orth.push(vec![
                (*na).into(),
                (*nb).into(),
                r.pathwise_zero.into(),
                r.terminal.mean.into(),
                r.terminal.se.into(),
                r.max_abs_z.into(),
                r.threshold.into(),
            ]);
        }
    }
    out.table(orth);
    Ok(ok)
}

/// One drift test recorded under `drift.<name>`; the verdict is expected to
/// be `pass` when `expect_pass`, otherwise the test must detect the drift.
pub fn drift_verdict(
    out: &mut ReportBundle,
    table: &mut Table,
    name: &str,
    s: &Series,
    f: &EnlargedFeatureSet,
    cfg: &DriftConfig,
    expect_pass: bool,
) -> Result<bool> {
    let r = drift_test(s, f, cfg)?;
    out.measured(&format!("drift.{name}.max_abs_z"), r.max_abs_z, r.threshold);
    out.note(&format!("drift.{name}.tests"), r.n_tests());
    for w in &r.warnings {
        out.skip(format!("drift.{name}: {w}"));
    }
    for c in &r.cells {
        table.push(vec![
            name.into(),
            c.start.into(),
            c.end.into(),
            c.label.clone().into(),
            c.n.into(),
            c.mean.into(),
            c.se.into(),
            c.z.into(),
        ]);
    }
    let key = if expect_pass {
        format!("drift.{name}")
    } else {
        format!("drift.{name}.detected")
    };
    Ok(out.verdict(&key, r.pass == expect_pass))
}

/// Standard battery of terminal payoffs on a driver `x` and the time `tau`.
pub fn battery(name: &str, x: &Series, tau: &RandomTime) -> Vec<(String, Vec<f64>)> {
    let n = x.grid().n_steps();
    let horizon = x.grid().time(n);
    let xt: Vec<f64> = (0..x.n_paths()).map(|p| x.at(p, n)).collect();
    let hit: Vec<f64> = (0..x.n_paths())
        .map(|p| if tau.occurred_by(p, n) { 1.0 } else { 0.0 })
        .collect();
    vec![
        (format!("{name}_T"), xt.clone()),
        (format!("{name}_T^2"), xt.iter().map(|v| v * v).collect()),
        ("default_by_T".into(), hit.clone()),
        (
            "tau_min_T".into(),
            (0..x.n_paths()).map(|p| tau.time(p).min(horizon)).collect(),
        ),
        (
            format!("default_by_T*{name}_T"),
            hit.iter().zip(&xt).map(|(h, v)| h * v).collect(),
        ),
    ]
}

/// Residual table shared by the projection battery and scenario-specific
/// projections.
pub fn residual_table() -> Table {
    Table::new(
        "residuals",
        &[
            "target",
            "basis",
            "rho_res",
            "rho_res_se",
            "increment_ratio",
            "rank_deficient_steps",
            "bound",
            "verdict",
        ],
    )
}

/// A named basis for the projection battery.
pub struct BasisSpec<'a> {
    pub name: &'a str,
    pub elements: Vec<(&'a str, &'a Series)>,
    /// Battery verdicts are issued against this basis.
    pub judged: bool,
}

/// Projections of the martingale of every target onto every basis.
/// Returns `results[target][basis]`.
pub fn project_battery(
    out: &mut ReportBundle,
    table: &mut Table,
    targets: &[(String, Vec<f64>)],
    bases: &[BasisSpec],
    f: &EnlargedFeatureSet,
    dictionary: &Dictionary,
    threshold: f64,
) -> Result<Vec<Vec<Option<ProjectionResult>>>> {
    let cfg = ProjectionConfig::default();
    let reg = RegressionConfig::default();
    let mut results = Vec::new();
    for (tname, payoff) in targets {
        let v = target_martingale(payoff, f, dictionary, &reg)?;
        let mut row = Vec::new();
        for b in bases {
            let key = format!("projection.{tname}.{}", b.name);
            match gkw_project(&v, &b.elements, f, dictionary, &cfg) {
                Ok(r) => {
                    out.estimate(
                        &format!("{key}.rho_res"),
                        r.residual_ratio.value,
                        r.residual_ratio.se,
                    );
                    let verdict = if b.judged {
                        out.verdict(
                            &format!("battery.{tname}"),
                            r.residual_ratio.value <= threshold,
                        )
                        .into()
                    } else {
                        "info".into()
                    };
                    table.push(vec![
                        tname.clone().into(),
                        b.name.into(),
                        r.residual_ratio.value.into(),
                        r.residual_ratio.se.into(),
                        r.increment_ratio.into(),
                        r.rank_deficient_groups().into(),
                        threshold.into(),
                        verdict,
                    ]);
                    row.push(Some(r));
                }
                Err(Error::PopulationTooSmall {
                    have,
                    need,
                    context,
                }) => {
                    out.skip(format!(
                        "{key}: population {have} below floor {need} ({context})"
                    ));
                    row.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        results.push(row);
    }
    Ok(results)
}

/// Largest pathwise gap between two residual processes.
pub fn residual_gap(a: &ProjectionResult, b: &ProjectionResult) -> f64 {
    a.residual
        .data()
        .iter()
        .zip(b.residual.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Split-versus-merged residual identity over the battery: basis 0 must be
/// the merged basis and basis 1 the split one.
pub fn merge_identity(
    out: &mut ReportBundle,
    targets: &[(String, Vec<f64>)],
    results: &[Vec<Option<ProjectionResult>>],
    tol: f64,
) -> bool {
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for ((name, _), row) in targets.iter().zip(results) {
        if let (Some(Some(m)), Some(Some(s))) = (row.first(), row.get(1)) {
            let gap = residual_gap(m, s);
            out.measured(&format!("merge.{name}.residual_gap"), gap, tol);
            worst = worst.max(gap);
            compared += 1;
        }
    }
    out.measured("merge.max_residual_gap", worst, tol);
    out.verdict("merge_identity", compared == targets.len() && worst <= tol)
}

/// `k` grid indices spread evenly over `1..=n`.
pub fn spread_indices(n: usize, k: usize) -> Vec<usize> {
    let k = k.clamp(1, n);
    let mut v: Vec<usize> = (1..=k).map(|j| (j * n).div_ceil(k)).collect();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_indices_cover_the_horizon() {
        assert_eq!(spread_indices(50, 5), vec![10, 20, 30, 40, 50]);
        assert_eq!(spread_indices(3, 5), vec![1, 2, 3]);
    }
}
