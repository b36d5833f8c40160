use crate::engine::Series;
use crate::error::Result;
use crate::stats::{bonferroni_threshold, mean_se, MeanEstimate};

/// Realized covariation `[X, Y]_{t_i} = Σ_{k <= i} ΔX_k ΔY_k`.
pub fn realized_bracket(x: &Series, y: &Series) -> Result<Series> {
    x.check_same_shape(y)?;
    Ok(
        Series::from_paths(*x.grid(), x.n_paths(), x.tag(), |p, row| {
            let (a, b) = (x.path(p), y.path(p));
            let mut acc = 0.0;
            row[0] = 0.0;
            for i in 1..row.len() {
                acc += (a[i] - a[i - 1]) * (b[i] - b[i - 1]);
                row[i] = acc;
            }
        })
        .with_offset(x.path_offset()),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalityReport {
    /// `[M, H]` vanishes identically on every path.
    pub pathwise_zero: bool,
    /// z-score of the cross-path mean of `[M, H]_{t_i}`, per grid index.
    pub z_by_time: Vec<f64>,
    pub max_abs_z: f64,
    pub threshold: f64,
    pub terminal: MeanEstimate,
    pub pass: bool,
}

/// Tests `[M, H] = 0`: pathwise when it holds exactly, otherwise through
/// Bonferroni-corrected z-tests of `E[M, H]_{t_i} = 0` over the grid.
pub fn orthogonality_test(
    m: &Series,
    h: &Series,
    alpha: f64,
    weights: Option<&[f64]>,
) -> Result<OrthogonalityReport> {
    let b = realized_bracket(m, h)?;
    let pathwise_zero = b.data().iter().all(|v| *v == 0.0);
    let n = b.grid().n_steps();
    let z_by_time: Vec<f64> = (0..=n)
        .map(|i| mean_se(&b.column(i), weights).z(0.0))
        .collect();
    let max_abs_z = z_by_time.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    let threshold = bonferroni_threshold(alpha, n);
    let terminal = mean_se(&b.terminal(), weights);
    Ok(OrthogonalityReport {
        pathwise_zero,
        pass: pathwise_zero || max_abs_z <= threshold,
        z_by_time,
        max_abs_z,
        threshold,
        terminal,
    })
}
