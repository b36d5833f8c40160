use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::EnlargedFeatureSet;
use crate::error::{invalid, Error, Result};

/// One element of a regression dictionary, evaluated on feature values.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Constant,
    Linear(String),
    Power(String, i32),
    Abs(String),
    /// One indicator per distinct value of a categorical feature.
    Levels(String),
    /// One indicator per quantile bin of a feature.
    Bins(String, usize),
    Product(Box<Term>, Box<Term>),
}

impl Term {
    pub fn linear(name: &str) -> Self {
        Term::Linear(name.into())
    }

    pub fn power(name: &str, k: i32) -> Self {
        Term::Power(name.into(), k)
    }

    pub fn levels(name: &str) -> Self {
        Term::Levels(name.into())
    }

    pub fn bins(name: &str, k: usize) -> Self {
        Term::Bins(name.into(), k)
    }

    pub fn product(a: Term, b: Term) -> Self {
        Term::Product(Box::new(a), Box::new(b))
    }

    fn label(&self) -> String {
        match self {
            Term::Constant => "1".into(),
            Term::Linear(n) => n.clone(),
            Term::Power(n, k) => format!("{n}^{k}"),
            Term::Abs(n) => format!("|{n}|"),
            Term::Levels(n) => format!("{n}=*"),
            Term::Bins(n, k) => format!("{n}#{k}"),
            Term::Product(a, b) => format!("{}*{}", a.label(), b.label()),
        }
    }

    fn expand(
        &self,
        f: &EnlargedFeatureSet,
        rows: &[(usize, usize)],
    ) -> Result<Vec<(String, Vec<f64>)>> {
        let values = |name: &str| -> Result<Vec<f64>> {
            let k = f.index_of(name)?;
            Ok(rows.iter().map(|&(p, i)| f.value(k, p, i)).collect())
        };
        Ok(match self {
            Term::Constant => vec![("1".into(), vec![1.0; rows.len()])],
            Term::Linear(n) => vec![(n.clone(), values(n)?)],
            Term::Power(n, k) => vec![(
                self.label(),
                values(n)?.into_iter().map(|x| x.powi(*k)).collect(),
            )],
            Term::Abs(n) => vec![(self.label(), values(n)?.into_iter().map(f64::abs).collect())],
            Term::Levels(n) => {
                let v = values(n)?;
                let mut levels = v.clone();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                levels
                    .into_iter()
                    .map(|l| {
                        (
                            format!("{n}={l}"),
                            v.iter().map(|&x| if x == l { 1.0 } else { 0.0 }).collect(),
                        )
                    })
                    .collect()
            }
            Term::Bins(n, k) => {
                if *k == 0 {
                    return Err(invalid("quantile bins need k >= 1"));
                }
                let v = values(n)?;
                let mut sorted = v.clone();
                sorted.sort_by(f64::total_cmp);
                let edges: Vec<f64> = (1..*k)
                    .map(|j| {
                        sorted
                            .get(j * sorted.len() / k)
                            .copied()
                            .unwrap_or(f64::INFINITY)
                    })
                    .collect();
                let bin = |x: f64| edges.iter().filter(|&&e| x >= e).count();
                (0..*k)
                    .map(|b| {
                        (
                            format!("{n}#{b}"),
                            v.iter()
                                .map(|&x| if bin(x) == b { 1.0 } else { 0.0 })
                                .collect(),
                        )
                    })
                    .collect()
            }
            Term::Product(a, b) => {
                let ea = a.expand(f, rows)?;
                let eb = b.expand(f, rows)?;
                let mut out = Vec::with_capacity(ea.len() * eb.len());
                for (la, ca) in &ea {
                    for (lb, cb) in &eb {
                        out.push((
                            format!("{la}*{lb}"),
                            ca.iter().zip(cb).map(|(x, y)| x * y).collect(),
                        ));
                    }
                }
                out
            }
        })
    }
}

/// An ordered list of terms spanning the regression space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dictionary {
    pub terms: Vec<Term>,
}

impl Dictionary {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn constant() -> Self {
        Self::new(vec![Term::Constant])
    }

    /// `1, x, x², ..., x^degree`.
    pub fn polynomial(name: &str, degree: i32) -> Self {
        let mut terms = vec![Term::Constant, Term::linear(name)];
        terms.extend((2..=degree).map(|k| Term::power(name, k)));
        Self::new(terms)
    }

    pub fn with(mut self, term: Term) -> Self {
        self.terms.push(term);
        self
    }

    /// Labelled design columns evaluated at the `(path, index)` rows.
    pub fn design(
        &self,
        f: &EnlargedFeatureSet,
        rows: &[(usize, usize)],
    ) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
        let mut labels = Vec::new();
        let mut cols = Vec::new();
        for t in &self.terms {
            for (l, c) in t.expand(f, rows)? {
                labels.push(l);
                cols.push(c);
            }
        }
        Ok((labels, cols))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressionConfig {
    /// Minimum number of rows per design column.
    pub min_paths_per_column: usize,
    /// Relative eigenvalue cutoff of the normalised Gram matrix.
    pub rank_tol: f64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            min_paths_per_column: 10,
            rank_tol: 1e-12,
        }
    }
}

/// Raw weighted least-squares solution.
#[derive(Clone, Debug, PartialEq)]
pub struct LsFit {
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rank: usize,
    /// Collinearity among the nonzero columns.
    pub rank_deficient: bool,
    /// Columns identically zero on the weighted rows.
    pub dropped: usize,
    pub r2: f64,
}

/// Weighted least squares of `y` on the columns `cols` (each of length
/// `y.len()`), solved through the eigendecomposition of the column-normalised
/// Gram matrix with a pseudo-inverse and one step of iterative refinement.
/// Zero columns are dropped with coefficient zero.
pub fn least_squares(
    cols: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    rank_tol: f64,
) -> Result<LsFit> {
    let n = y.len();
    if cols.iter().any(|c| c.len() != n) || weights.is_some_and(|w| w.len() != n) {
        return Err(invalid(
            "design columns, target and weights must have equal length",
        ));
    }
    let w = |r: usize| weights.map_or(1.0, |w| w[r]);
    let scale: Vec<f64> = cols
        .iter()
        .map(|c| {
            c.iter()
                .enumerate()
                .map(|(r, x)| w(r) * x * x)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let active: Vec<usize> = (0..cols.len())
        .filter(|&k| scale[k] > 0.0 && scale[k].is_finite())
        .collect();
    let m = active.len();
    let mut coefficients = vec![0.0; cols.len()];
    let mut rank = 0;
    if m > 0 {
        let mut gram = DMatrix::<f64>::zeros(m, m);
        let mut row = vec![0.0; m];
        for r in 0..n {
            let wr = w(r);
            if wr == 0.0 {
                continue;
            }
            for (a, &k) in active.iter().enumerate() {
                row[a] = cols[k][r] / scale[k];
            }
            for a in 0..m {
                let ra = wr * row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..m {
                    gram[(a, b)] += ra * row[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let cut = top * rank_tol;
        rank = eig.eigenvalues.iter().filter(|&&l| l > cut).count();
        let solve = |rhs: &DVector<f64>| -> DVector<f64> {
            let proj = eig.eigenvectors.transpose() * rhs;
            let scaled = DVector::from_iterator(
                m,
                proj.iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(v, &l)| if l > cut { v / l } else { 0.0 }),
            );
            &eig.eigenvectors * scaled
        };
        let xt = |v: &[f64]| -> DVector<f64> {
            DVector::from_iterator(
                m,
                active.iter().map(|&k| {
                    (0..n)
                        .map(|r| w(r) * cols[k][r] / scale[k] * v[r])
                        .sum::<f64>()
                }),
            )
        };
        let predict = |beta: &DVector<f64>| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (a, &k) in active.iter().enumerate() {
                let c = beta[a] / scale[k];
                if c != 0.0 {
                    for (o, x) in out.iter_mut().zip(&cols[k]) {
                        *o += c * x;
                    }
                }
            }
            out
        };
        let mut beta = solve(&xt(y));
        let resid: Vec<f64> = y.iter().zip(predict(&beta)).map(|(y, f)| y - f).collect();
        beta += solve(&xt(&resid));
        for (a, &k) in active.iter().enumerate() {
            coefficients[k] = beta[a] / scale[k];
        }
    }
    let mut fitted = vec![0.0; n];
    for (k, c) in coefficients.iter().enumerate() {
        if *c != 0.0 {
            for (o, x) in fitted.iter_mut().zip(&cols[k]) {
                *o += c * x;
            }
        }
    }
    let sw: f64 = (0..n).map(w).sum();
    let ybar = if sw > 0.0 {
        (0..n).map(|r| w(r) * y[r]).sum::<f64>() / sw
    } else {
        0.0
    };
    let sst: f64 = (0..n).map(|r| w(r) * (y[r] - ybar).powi(2)).sum();
    let ssr: f64 = (0..n).map(|r| w(r) * (y[r] - fitted[r]).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(LsFit {
        coefficients,
        fitted,
        rank,
        rank_deficient: rank < m,
        dropped: cols.len() - m,
        r2,
    })
}

/// A dictionary regression fitted on a set of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Fitted values aligned with the rows.
    pub fitted: Vec<f64>,
    pub r2: f64,
    pub rank_deficient: bool,
    pub dropped: usize,
    pub n_rows: usize,
}

/// Regresses `target` (aligned with `rows`) on the dictionary evaluated at
/// `rows`, using the feature set's population weights when present.
pub fn fit_rows(
    f: &EnlargedFeatureSet,
    rows: &[(usize, usize)],
    target: &[f64],
    dictionary: &Dictionary,
    cfg: &RegressionConfig,
) -> Result<Fit> {
    if rows.len() != target.len() {
        return Err(invalid("target must align with the rows"));
    }
    let (labels, cols) = dictionary.design(f, rows)?;
    let need = cfg.min_paths_per_column * cols.len().max(1);
    if rows.len() < need {
        return Err(Error::PopulationTooSmall {
            have: rows.len(),
            need,
            context: format!("{} dictionary columns", cols.len()),
        });
    }
    let weights: Option<Vec<f64>> = f
        .weights()
        .map(|w| rows.iter().map(|&(p, _)| w[p]).collect());
    let ls = least_squares(&cols, target, weights.as_deref(), cfg.rank_tol)?;
    Ok(Fit {
        labels,
        coefficients: ls.coefficients,
        fitted: ls.fitted,
        r2: ls.r2,
        rank_deficient: ls.rank_deficient,
        dropped: ls.dropped,
        n_rows: rows.len(),
    })
}

/// Least-squares estimate of `E[target | F_{t_i}]` across all paths, where
/// `target` holds one value per path.
pub fn regress_condexp(
    target: &[f64],
    f: &EnlargedFeatureSet,
    i: usize,
    dictionary: &Dictionary,
    cfg: &RegressionConfig,
) -> Result<Fit> {
    if target.len() != f.n_paths() {
        return Err(invalid("target must hold one value per path"));
    }
    if i >= f.grid().len() {
        return Err(invalid(format!("grid index {i} out of range")));
    }
    let rows: Vec<(usize, usize)> = (0..f.n_paths()).map(|p| (p, i)).collect();
    fit_rows(f, &rows, target, dictionary, cfg)
}
