use super::{fit_rows, Dictionary, EnlargedFeatureSet, RegressionConfig, Term};
use crate::analysis::{drift_test, DriftConfig, DriftReport};
use crate::engine::Series;
use crate::error::{invalid, Error, Result};
use crate::random_times::{Decomposition, StoppingFamily};

/// Tolerance for probabilities supplied outside `[0, 1]` before rejection.
const CLIP_TOL: f64 = 1e-6;

/// Where the conditioning information for `p_n` is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Conditioning {
    /// Features at the grid point before `T_n` (`F^τ_{T_n-}` for predictable `T_n`).
    #[default]
    PreStep,
    /// Features at `T_n` itself; occurrence features are then excluded.
    AtStep,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ThinSource {
    /// `p[n][path]`, read on paths where `T_n` is finite and `τ >= T_n`.
    Analytic(Vec<Vec<f64>>),
    Regression {
        dictionary: Dictionary,
        conditioning: Conditioning,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThinCompensated {
    /// `H^{τ₁} = Σ_n (1_{C_n} - p_n) 1_{T_n <= ·}`.
    pub h: Series,
    pub probabilities: Vec<Vec<f64>>,
    /// Members whose population fell below the regression floor; their `p_n`
    /// is the pooled frequency.
    pub skipped: Vec<usize>,
    /// Regression estimates clipped into `[0, 1]`.
    pub clipped: usize,
}

/// Whether grid step `i` carries a member of `family` on path `p`.
pub fn family_step(family: &StoppingFamily, p: usize, i: usize) -> bool {
    family.member_at(p, i).is_some()
}

fn alive_at(d: &Decomposition, p: usize, i: usize) -> bool {
    d.tau.value(p).is_none_or(|t| t >= i)
}

fn term_features(t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Constant => {}
        Term::Linear(n) | Term::Power(n, _) | Term::Abs(n) | Term::Levels(n) | Term::Bins(n, _) => {
            out.push(n.clone())
        }
        Term::Product(a, b) => {
            term_features(a, out);
            term_features(b, out);
        }
    }
}

/// Estimates `p_n = P(C_n | F^τ_{T_n-})` for every family member by
/// regressing `1_{C_n}` on the dictionary across the paths still alive at
/// `T_n`. Dead paths get `p_n = 0`.
pub fn estimate_thin_probabilities(
    d: &Decomposition,
    family: &StoppingFamily,
    features: &EnlargedFeatureSet,
    dictionary: &Dictionary,
    conditioning: Conditioning,
    cfg: &RegressionConfig,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, usize)> {
    let n_paths = d.tau.n_paths();
    if conditioning == Conditioning::AtStep {
        let mut names = Vec::new();
        dictionary
            .terms
            .iter()
            .for_each(|t| term_features(t, &mut names));
        if let Some(bad) = names
            .iter()
            .find(|n| *n == "occurred" || *n == "stopped" || n.starts_with('C'))
        {
            return Err(invalid(format!(
                "feature {bad:?} reveals the occurrence at T_n"
            )));
        }
    }
    let mut probs = Vec::with_capacity(family.len());
    let mut skipped = Vec::new();
    let mut clipped = 0;
    for (n, m) in family.members().iter().enumerate() {
        let mut rows = Vec::new();
        let mut paths = Vec::new();
        let mut target = Vec::new();
        for p in 0..n_paths {
            if let Some(t) = m.time.value(p) {
                if alive_at(d, p, t) {
                    let i = match conditioning {
                        Conditioning::PreStep => t.saturating_sub(1),
                        Conditioning::AtStep => t,
                    };
                    rows.push((p, i));
                    paths.push(p);
                    target.push(if d.matched[n][p] { 1.0 } else { 0.0 });
                }
            }
        }
        let mut pn = vec![0.0; n_paths];
        if !rows.is_empty() {
            let fitted = match fit_rows(features, &rows, &target, dictionary, cfg) {
                Ok(fit) => fit.fitted,
                Err(Error::PopulationTooSmall { .. }) => {
                    skipped.push(n);
                    let pooled = fit_rows(
                        features,
                        &rows,
                        &target,
                        &Dictionary::constant(),
                        &RegressionConfig {
                            min_paths_per_column: 1,
                            ..*cfg
                        },
                    )?;
                    pooled.fitted
                }
                Err(e) => return Err(e),
            };
            for (&p, v) in paths.iter().zip(fitted) {
                if !(0.0..=1.0).contains(&v) {
                    clipped += 1;
                }
                pn[p] = v.clamp(0.0, 1.0);
            }
        }
        probs.push(pn);
    }
    Ok((probs, skipped, clipped))
}

/// Compensated occurrence process of the thin part.
pub fn thin_compensated(
    d: &Decomposition,
    family: &StoppingFamily,
    features: &EnlargedFeatureSet,
    source: &ThinSource,
    cfg: &RegressionConfig,
) -> Result<ThinCompensated> {
    let grid = *d.tau.grid();
    let n_paths = d.tau.n_paths();
    if family.len() != d.matched.len() {
        return Err(invalid("family does not match the decomposition"));
    }
    let (probabilities, skipped, clipped) = match source {
        ThinSource::Analytic(p) => {
            if p.len() != family.len() || p.iter().any(|v| v.len() != n_paths) {
                return Err(invalid("analytic probabilities must be [member][path]"));
            }
            let mut out = vec![vec![0.0; n_paths]; family.len()];
            for (n, m) in family.members().iter().enumerate() {
                for q in 0..n_paths {
                    let Some(t) = m.time.value(q) else { continue };
                    if !alive_at(d, q, t) {
                        continue;
                    }
                    let v = p[n][q];
                    if !(-CLIP_TOL..=1.0 + CLIP_TOL).contains(&v) {
                        return Err(Error::InvalidSpec(format!(
                            "p_{} = {v} on path {q} is not a probability",
                            n + 1
                        )));
                    }
                    out[n][q] = v.clamp(0.0, 1.0);
                }
            }
            (out, Vec::new(), 0)
        }
        ThinSource::Regression {
            dictionary,
            conditioning,
        } => estimate_thin_probabilities(d, family, features, dictionary, *conditioning, cfg)?,
    };
    let h = Series::from_paths(grid, n_paths, "F^tau", |p, row| {
        let mut jumps = vec![0.0; row.len()];
        for (n, m) in family.members().iter().enumerate() {
            if let Some(t) = m.time.value(p) {
                let c = if d.matched[n][p] { 1.0 } else { 0.0 };
                jumps[t] += c - probabilities[n][p];
            }
        }
        let mut acc = 0.0;
        for (v, j) in row.iter_mut().zip(jumps) {
            acc += j;
            *v = acc;
        }
    })
    .with_offset(d.tau.path_offset());
    Ok(ThinCompensated {
        h,
        probabilities,
        skipped,
        clipped,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum IntensitySource {
    /// Intensity `λ_t` per path; step hazard `1 - exp(-λ_{t_{i-1}} Δt)`.
    Intensity(Series),
    /// Cumulative hazard `K` per path; step hazard `1 - exp(-ΔK_i)`.
    CumulativeHazard(Series),
    /// Step hazard regressed on the features at the previous grid point.
    EmpiricalHazard { dictionary: Dictionary },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThickCompensated {
    /// `H^{τ₂} = 1_{τ₂ <= ·} - Λ`.
    pub h: Series,
    /// The compensator `Λ`, stopped at `τ` and flat on family steps.
    pub lambda: Series,
    /// Steps whose at-risk population fell below the regression floor.
    pub skipped_steps: Vec<usize>,
    pub clipped: usize,
}

/// Compensated occurrence process of the thick part. The compensator only
/// accrues while `τ` has not occurred and off the steps carrying a family
/// member, where the thick part cannot jump.
pub fn thick_compensated(
    d: &Decomposition,
    family: &StoppingFamily,
    features: &EnlargedFeatureSet,
    source: &IntensitySource,
    cfg: &RegressionConfig,
) -> Result<ThickCompensated> {
    let grid = *d.tau.grid();
    let n_paths = d.tau.n_paths();
    let width = grid.len();
    let mut hazard = vec![0.0; n_paths * width];
    let mut skipped_steps = Vec::new();
    let mut clipped = 0;
    let at_risk = |p: usize, i: usize| alive_at(d, p, i) && !family_step(family, p, i);
    match source {
        IntensitySource::Intensity(s) | IntensitySource::CumulativeHazard(s) => {
            grid.check_same(s.grid())?;
            if s.n_paths() != n_paths {
                return Err(invalid("intensity path count does not match"));
            }
            let cumulative = matches!(source, IntensitySource::CumulativeHazard(_));
            for p in 0..n_paths {
                for i in 1..width {
                    let rate = if cumulative {
                        s.increment(p, i)
                    } else {
                        s.at(p, i - 1) * grid.dt()
                    };
                    if !(rate >= 0.0) {
                        return Err(Error::InvalidSpec(format!(
                            "negative or undefined hazard {rate} on path {p} at step {i}"
                        )));
                    }
                    if at_risk(p, i) {
                        hazard[p * width + i] = -(-rate).exp_m1();
                    }
                }
            }
        }
        IntensitySource::EmpiricalHazard { dictionary } => {
            for i in 1..width {
                let paths: Vec<usize> = (0..n_paths).filter(|&p| at_risk(p, i)).collect();
                if paths.is_empty() {
                    continue;
                }
                let rows: Vec<(usize, usize)> = paths.iter().map(|&p| (p, i - 1)).collect();
                let target: Vec<f64> = paths
                    .iter()
                    .map(|&p| {
                        if d.thick.value(p) == Some(i) {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let fitted = match fit_rows(features, &rows, &target, dictionary, cfg) {
                    Ok(fit) => fit.fitted,
                    Err(Error::PopulationTooSmall { .. }) => {
                        skipped_steps.push(i);
                        fit_rows(
                            features,
                            &rows,
                            &target,
                            &Dictionary::constant(),
                            &RegressionConfig {
                                min_paths_per_column: 1,
                                ..*cfg
                            },
                        )?
                        .fitted
                    }
                    Err(e) => return Err(e),
                };
                for (&p, v) in paths.iter().zip(fitted) {
                    if !(0.0..=1.0).contains(&v) {
                        clipped += 1;
                    }
                    hazard[p * width + i] = v.clamp(0.0, 1.0);
                }
            }
        }
    }
    let lambda = Series::from_paths(grid, n_paths, "F^tau", |p, row| {
        let mut acc = 0.0;
        row[0] = 0.0;
        for i in 1..width {
            acc += hazard[p * width + i];
            row[i] = acc;
        }
    })
    .with_offset(d.tau.path_offset());
    let h = Series::from_paths(grid, n_paths, "F^tau", |p, row| {
        for (i, v) in row.iter_mut().enumerate() {
            let jump = if d.thick.occurred_by(p, i) { 1.0 } else { 0.0 };
            *v = jump - lambda.at(p, i);
        }
    })
    .with_offset(d.tau.path_offset());
    Ok(ThickCompensated {
        h,
        lambda,
        skipped_steps,
        clipped,
    })
}

/// `H^τ = H^{τ₁} + H^{τ₂}`, after checking that the thin part never jumps at
/// a step where the thick part occurs on more than `overlap_tol` of paths.
pub fn total_compensated(
    thin: &ThinCompensated,
    thick: &ThickCompensated,
    d: &Decomposition,
    overlap_tol: f64,
) -> Result<Series> {
    thin.h.check_same_shape(&thick.h)?;
    let n_paths = thin.h.n_paths();
    let overlaps = (0..n_paths)
        .filter(|&p| matches!(d.thick.value(p), Some(i) if i > 0 && thin.h.increment(p, i) != 0.0))
        .count();
    if n_paths > 0 && overlaps as f64 / n_paths as f64 > overlap_tol {
        return Err(Error::InvalidSpec(format!(
            "thin and thick jumps overlap on {overlaps} paths"
        )));
    }
    Ok(thin.h.add(&thick.h)?.with_tag("F^tau"))
}

/// Result of testing one reference martingale for drift in the enlarged
/// filtration.
#[derive(Clone, Debug, PartialEq)]
pub struct ImmersionResult {
    pub name: String,
    pub report: DriftReport,
}

/// Drift tests of reference-filtration martingales against the enlarged
/// feature set. Passing is consistent with immersion on the grid.
pub fn immersion_check(
    martingales: &[(&str, &Series)],
    features: &EnlargedFeatureSet,
    cfg: &DriftConfig,
) -> Result<Vec<ImmersionResult>> {
    martingales
        .iter()
        .map(|(name, m)| {
            Ok(ImmersionResult {
                name: name.to_string(),
                report: drift_test(m, features, cfg)?,
            })
        })
        .collect()
}
