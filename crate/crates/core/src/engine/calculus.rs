use super::{ComponentKind, PathBundle, Series};
use crate::error::{invalid, Result};

/// `sgn` with the Tanaka convention `sgn(0) = -1`.
pub fn sign_left(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Lévy transformation `B = ∫ sgn(W) dW` of a Brownian component, discretised
/// with the left-point rule.
pub fn levy_transform(bundle: &PathBundle, component: &str) -> Result<Series> {
    let w = bundle.component(component)?;
    if *bundle.kind(component)? != ComponentKind::Brownian {
        return Err(invalid(format!("component {component:?} is not Brownian")));
    }
    Ok(levy_transform_series(w))
}

/// As [`levy_transform`], for any series playing the role of `W`.
pub fn levy_transform_series(w: &Series) -> Series {
    Series::from_paths(*w.grid(), w.n_paths(), "F^B", |p, row| {
        let wp = w.path(p);
        row[0] = 0.0;
        for i in 1..row.len() {
            row[i] = row[i - 1] + sign_left(wp[i - 1]) * (wp[i] - wp[i - 1]);
        }
    })
    .with_offset(w.path_offset())
}

/// Left-point discrete stochastic integral
/// `(∫φ dM)_{t_k} = Σ_{i<=k} φ_{t_{i-1}} (M_{t_i} - M_{t_{i-1}})`, starting at 0.
pub fn stochastic_integral(integrand: &Series, integrator: &Series) -> Result<Series> {
    integrand.check_same_shape(integrator)?;
    Ok(Series::from_paths(
        *integrator.grid(),
        integrator.n_paths(),
        integrator.tag(),
        |p, row| {
            let phi = integrand.path(p);
            let m = integrator.path(p);
            row[0] = 0.0;
            for i in 1..row.len() {
                row[i] = row[i - 1] + phi[i - 1] * (m[i] - m[i - 1]);
            }
        },
    )
    .with_offset(integrator.path_offset()))
}

/// Doléans exponential of a Brownian-type series, `exp(B_t - t/2)`.
pub fn doleans_exponential(b: &Series) -> Series {
    let grid = *b.grid();
    Series::from_paths(grid, b.n_paths(), b.tag(), |p, row| {
        let bp = b.path(p);
        for (i, v) in row.iter_mut().enumerate() {
            *v = (bp[i] - 0.5 * grid.time(i)).exp();
        }
    })
    .with_offset(b.path_offset())
}
