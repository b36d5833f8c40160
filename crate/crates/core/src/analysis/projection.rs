use rayon::prelude::*;

use crate::engine::Series;
use crate::enlargement::{
    least_squares, regress_condexp, Dictionary, EnlargedFeatureSet, RegressionConfig,
};
use crate::error::{invalid, Error, Result};
use crate::stats::{mean_se, pairwise_sum};

/// Backward construction `V_t = E[ξ | F_t]` by cross-path regression at each
/// grid point; `V_T = ξ` exactly.
pub fn target_martingale(
    payoff: &[f64],
    f: &EnlargedFeatureSet,
    dictionary: &Dictionary,
    cfg: &RegressionConfig,
) -> Result<Series> {
    let grid = *f.grid();
    let n = grid.n_steps();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| regress_condexp(payoff, f, i, dictionary, cfg).map(|fit| fit.fitted))
        .collect::<Result<_>>()?;
    Ok(Series::from_paths(grid, f.n_paths(), "F^tau", |p, row| {
        for (i, c) in cols.iter().enumerate() {
            row[i] = c[p];
        }
        row[n] = payoff[p];
    }))
}

/// How integrand coefficients vary over time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IntegrandModel {
    /// An independent regression at every step.
    #[default]
    PerStep,
    /// Steps pooled into this many equal buckets sharing coefficients.
    Buckets(usize),
    /// One pooled regression with coefficients polynomial in time of this degree.
    PolyTime(usize),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProjectionConfig {
    pub model: IntegrandModel,
    pub regression: RegressionConfig,
}

/// A ratio estimate with its delta-method standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ratio {
    pub value: f64,
    pub se: f64,
}

/// Coefficients of one pooled regression.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupFit {
    pub first_step: usize,
    pub last_step: usize,
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub r2: f64,
    pub rank_deficient: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    pub basis: Vec<String>,
    /// Integrand of each basis element; entry `i` multiplies the increment
    /// over step `i + 1`, the terminal entry is zero.
    pub integrands: Vec<Series>,
    /// `∫ φ_j dM^j` per basis element.
    pub components: Vec<Series>,
    /// `L = V - V_0 - Σ_j ∫ φ_j dM^j`.
    pub residual: Series,
    /// `E[L_T²] / E[(V_T - V_0)²]`.
    pub residual_ratio: Ratio,
    /// Unexplained share of the summed squared increments.
    pub increment_ratio: f64,
    /// `E[(∫ φ_j dM^j)_T²] / E[(V_T - V_0)²]` per basis element.
    pub contributions: Vec<f64>,
    pub groups: Vec<GroupFit>,
}

impl ProjectionResult {
    pub fn rank_deficient_groups(&self) -> usize {
        self.groups.iter().filter(|g| g.rank_deficient).count()
    }
}

struct StepOut {
    steps: Vec<usize>,
    phi: Vec<Vec<f64>>,
    fit: GroupFit,
}

fn fit_group(
    v: &Series,
    basis: &[(&str, &Series)],
    f: &EnlargedFeatureSet,
    dictionary: &Dictionary,
    cfg: &ProjectionConfig,
    steps: &[usize],
    poly: usize,
) -> Result<StepOut> {
    let n_paths = v.n_paths();
    let horizon = v.grid().horizon();
    let rows: Vec<(usize, usize)> = steps
        .iter()
        .flat_map(|&i| (0..n_paths).map(move |p| (p, i - 1)))
        .collect();
    let (labels, dcols) = dictionary.design(f, &rows)?;
    let time_factor: Vec<f64> = rows
        .iter()
        .map(|&(_, i)| v.grid().time(i) / horizon)
        .collect();
    let y: Vec<f64> = rows.iter().map(|&(p, i)| v.increment(p, i + 1)).collect();
    let mut cols = Vec::with_capacity(basis.len() * dcols.len() * (poly + 1));
    let mut col_labels = Vec::new();
    for (name, m) in basis {
        let dm: Vec<f64> = rows.iter().map(|&(p, i)| m.increment(p, i + 1)).collect();
        for (l, c) in labels.iter().zip(&dcols) {
            for d in 0..=poly {
                cols.push(
                    c.iter()
                        .zip(&dm)
                        .zip(&time_factor)
                        .map(|((x, dm), t)| x * dm * t.powi(d as i32))
                        .collect::<Vec<f64>>(),
                );
                col_labels.push(if d == 0 {
                    format!("{name}:{l}")
                } else {
                    format!("{name}:{l}*t^{d}")
                });
            }
        }
    }
    let need = cfg.regression.min_paths_per_column * cols.len().max(1);
    if rows.len() < need {
        return Err(Error::PopulationTooSmall {
            have: rows.len(),
            need,
            context: format!("{} regressors at step {}", cols.len(), steps[0]),
        });
    }
    let weights: Option<Vec<f64>> = f
        .weights()
        .map(|w| rows.iter().map(|&(p, _)| w[p]).collect());
    let ls = least_squares(&cols, &y, weights.as_deref(), cfg.regression.rank_tol)?;
    let per = dcols.len() * (poly + 1);
    let phi: Vec<Vec<f64>> = (0..basis.len())
        .map(|j| {
            (0..rows.len())
                .map(|r| {
                    let mut s = 0.0;
                    for (c, col) in dcols.iter().enumerate() {
                        for d in 0..=poly {
                            let beta = ls.coefficients[j * per + c * (poly + 1) + d];
                            if beta != 0.0 {
                                s += beta * col[r] * time_factor[r].powi(d as i32);
                            }
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    Ok(StepOut {
        steps: steps.to_vec(),
        phi,
        fit: GroupFit {
            first_step: steps[0],
            last_step: *steps.last().unwrap(),
            labels: col_labels,
            coefficients: ls.coefficients,
            r2: ls.r2,
            rank_deficient: ls.rank_deficient,
        },
    })
}

/// Galtchouk-Kunita-Watanabe projection of `v` onto the stochastic integrals
/// of the `basis` martingales: integrands are least-squares fits of `ΔV` on
/// `φ(features_{t-}) ΔM^j`, with `φ` ranging over the dictionary.
pub fn gkw_project(
    v: &Series,
    basis: &[(&str, &Series)],
    f: &EnlargedFeatureSet,
    dictionary: &Dictionary,
    cfg: &ProjectionConfig,
) -> Result<ProjectionResult> {
    let grid = *v.grid();
    f.grid().check_same(&grid)?;
    if v.n_paths() != f.n_paths() {
        return Err(invalid("target and feature set differ in path count"));
    }
    for (_, m) in basis {
        v.check_same_shape(m)?;
    }
    let n = grid.n_steps();
    let n_paths = v.n_paths();
    let groups: Vec<Vec<usize>> = match cfg.model {
        IntegrandModel::PerStep => (1..=n).map(|i| vec![i]).collect(),
        IntegrandModel::Buckets(k) => {
            let k = k.clamp(1, n);
            (0..k)
                .map(|b| (b * n / k + 1..=(b + 1) * n / k).collect())
                .collect()
        }
        IntegrandModel::PolyTime(_) => vec![(1..=n).collect()],
    };
    let poly = match cfg.model {
        IntegrandModel::PolyTime(d) => d,
        _ => 0,
    };
    let outs: Vec<StepOut> = groups
        .par_iter()
        .map(|steps| fit_group(v, basis, f, dictionary, cfg, steps, poly))
        .collect::<Result<_>>()?;
    let width = grid.len();
    let mut phi = vec![vec![0.0; n_paths * width]; basis.len()];
    for out in &outs {
        for (k, &i) in out.steps.iter().enumerate() {
            for p in 0..n_paths {
                for (j, ph) in phi.iter_mut().enumerate() {
                    ph[p * width + i - 1] = out.phi[j][k * n_paths + p];
                }
            }
        }
    }
    let integrands: Vec<Series> = phi
        .into_iter()
        .map(|d| Series::new(grid, n_paths, "F^tau", d))
        .collect::<Result<_>>()?;
    let components: Vec<Series> = basis
        .iter()
        .zip(&integrands)
        .map(|((_, m), ph)| {
            Series::from_paths(grid, n_paths, "F^tau", |p, row| {
                let mut acc = 0.0;
                row[0] = 0.0;
                for i in 1..width {
                    acc += ph.at(p, i - 1) * m.increment(p, i);
                    row[i] = acc;
                }
            })
        })
        .collect();
    let residual = Series::from_paths(grid, n_paths, "F^tau", |p, row| {
        for i in 0..width {
            row[i] = v.at(p, i) - v.at(p, 0) - components.iter().map(|c| c.at(p, i)).sum::<f64>();
        }
    });
    let weights = f.weights();
    let total: Vec<f64> = (0..n_paths)
        .map(|p| (v.at(p, n) - v.at(p, 0)).powi(2))
        .collect();
    let lsq: Vec<f64> = residual.terminal().iter().map(|x| x * x).collect();
    let b = mean_se(&total, weights).mean;
    let a = mean_se(&lsq, weights).mean;
    let ratio = a / b;
    let lin: Vec<f64> = lsq.iter().zip(&total).map(|(a, b)| a - ratio * b).collect();
    let residual_ratio = Ratio {
        value: ratio,
        se: mean_se(&lin, weights).se / b,
    };
    let w = |p: usize| weights.map_or(1.0, |w| w[p]);
    let mut num = Vec::with_capacity(n_paths);
    let mut den = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let (mut r2, mut y2) = (0.0, 0.0);
        for i in 1..width {
            r2 += residual.increment(p, i).powi(2);
            y2 += v.increment(p, i).powi(2);
        }
        num.push(w(p) * r2);
        den.push(w(p) * y2);
    }
    let increment_ratio = pairwise_sum(&num) / pairwise_sum(&den);
    let contributions = components
        .iter()
        .map(|c| {
            mean_se(
                &c.terminal().iter().map(|x| x * x).collect::<Vec<_>>(),
                weights,
            )
            .mean
                / b
        })
        .collect();
    Ok(ProjectionResult {
        basis: basis.iter().map(|(n, _)| n.to_string()).collect(),
        integrands,
        components,
        residual,
        residual_ratio,
        increment_ratio,
        contributions,
        groups: outs.into_iter().map(|o| o.fit).collect(),
    })
}

/// Combines integrands as `ρ = γ` on steps in `D` and `η` elsewhere;
/// `in_d(p, i)` says whether step `i` (ending at `t_i`) lies in `D`.
pub fn merge_integrands(
    gamma: &Series,
    eta: &Series,
    in_d: impl Fn(usize, usize) -> bool + Sync,
) -> Result<Series> {
    gamma.check_same_shape(eta)?;
    let n = gamma.grid().n_steps();
    Ok(Series::from_paths(
        *gamma.grid(),
        gamma.n_paths(),
        gamma.tag(),
        |p, row| {
            for k in 0..n {
                row[k] = if in_d(p, k + 1) {
                    gamma.at(p, k)
                } else {
                    eta.at(p, k)
                };
            }
            row[n] = eta.at(p, n);
        },
    ))
}
