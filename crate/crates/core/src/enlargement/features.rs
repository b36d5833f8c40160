use crate::engine::{Series, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::random_times::{RandomTime, StoppingFamily};

/// Which running summaries of each driver series enter the feature set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Summaries {
    pub value: bool,
    pub running_max: bool,
    pub running_min: bool,
    pub quadratic_variation: bool,
}

impl Default for Summaries {
    fn default() -> Self {
        Self {
            value: true,
            running_max: false,
            running_min: false,
            quadratic_variation: false,
        }
    }
}

impl Summaries {
    pub fn all() -> Self {
        Self {
            value: true,
            running_max: true,
            running_min: true,
            quadratic_variation: true,
        }
    }
}

/// Per-time, per-path state generating the enlarged filtration at each grid
/// point. Every feature at index `i` depends on path data up to `t_i` only.
///
/// Besides driver summaries it holds `occurred` (`1_{τ <= t}`), `stopped`
/// (`τ ∧ t`), `revealed` (number of family members `<= t`) and, per family
/// member `n`, `C{n+1}` = `1_{C_n}` from `T_n` on (0 before, when the event is
/// not yet decided).
#[derive(Clone, Debug, PartialEq)]
pub struct EnlargedFeatureSet {
    grid: TimeGrid,
    n_paths: usize,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    family_times: Vec<Vec<Option<usize>>>,
    weights: Option<Vec<f64>>,
}

impl EnlargedFeatureSet {
    pub fn new(grid: TimeGrid, n_paths: usize) -> Self {
        Self {
            grid,
            n_paths,
            names: Vec::new(),
            columns: Vec::new(),
            family_times: Vec::new(),
            weights: None,
        }
    }

    /// Adds (or replaces) a feature taken from a grid-aligned series.
    pub fn push(&mut self, name: impl Into<String>, series: &Series) -> Result<()> {
        self.grid.check_same(series.grid())?;
        if series.n_paths() != self.n_paths {
            return Err(invalid("feature path count does not match the set"));
        }
        self.push_raw(name, series.data().to_vec())
    }

    pub(crate) fn push_raw(&mut self, name: impl Into<String>, data: Vec<f64>) -> Result<()> {
        if data.len() != self.n_paths * self.grid.len() {
            return Err(invalid("feature data has the wrong length"));
        }
        let name = name.into();
        match self.names.iter().position(|n| *n == name) {
            Some(k) => self.columns[k] = data,
            None => {
                self.names.push(name);
                self.columns.push(data);
            }
        }
        Ok(())
    }

    /// Population weights (atom probabilities for exact finite worlds).
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n_paths || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights must be nonnegative, one per path"));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::NotFound(format!("feature {name:?}")))
    }

    pub fn value(&self, feature: usize, p: usize, i: usize) -> f64 {
        self.columns[feature][p * self.grid.len() + i]
    }

    pub fn get(&self, name: &str, p: usize, i: usize) -> Result<f64> {
        Ok(self.value(self.index_of(name)?, p, i))
    }

    /// Feature `name` at grid index `i` across paths.
    pub fn column_at(&self, name: &str, i: usize) -> Result<Vec<f64>> {
        let k = self.index_of(name)?;
        Ok((0..self.n_paths).map(|p| self.value(k, p, i)).collect())
    }

    /// Names of the `C_n` indicators already decided on path `p` at index `i`.
    pub fn revealed_indicators(&self, p: usize, i: usize) -> Vec<String> {
        self.family_times
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t[p], Some(v) if v <= i))
            .map(|(n, _)| format!("C{}", n + 1))
            .collect()
    }
}

/// Builds the feature set of the enlargement of the drivers' filtration by
/// `tau`, with `C_n` indicators for the members of `family`.
pub fn build_features(
    drivers: &[(&str, &Series)],
    summaries: Summaries,
    tau: &RandomTime,
    family: &StoppingFamily,
) -> Result<EnlargedFeatureSet> {
    let grid = *tau.grid();
    let n_paths = tau.n_paths();
    let width = grid.len();
    for m in family.members() {
        tau.check_compatible(&m.time)?;
    }
    let mut set = EnlargedFeatureSet::new(grid, n_paths);
    for (name, s) in drivers {
        grid.check_same(s.grid())?;
        if s.n_paths() != n_paths {
            return Err(invalid(format!("driver {name:?} has the wrong path count")));
        }
        if summaries.value {
            set.push(*name, s)?;
        }
        let running = |f: &dyn Fn(f64, f64, f64) -> f64, init: fn(f64) -> f64| -> Vec<f64> {
            let mut out = Vec::with_capacity(n_paths * width);
            for row in s.paths() {
                let mut acc = init(row[0]);
                out.push(acc);
                for i in 1..width {
                    acc = f(acc, row[i], row[i - 1]);
                    out.push(acc);
                }
            }
            out
        };
        if summaries.running_max {
            set.push_raw(format!("{name}.max"), running(&|a, x, _| a.max(x), |x| x))?;
        }
        if summaries.running_min {
            set.push_raw(format!("{name}.min"), running(&|a, x, _| a.min(x), |x| x))?;
        }
        if summaries.quadratic_variation {
            set.push_raw(
                format!("{name}.qv"),
                running(&|a, x, prev| a + (x - prev) * (x - prev), |_| 0.0),
            )?;
        }
    }
    let mut occurred = Vec::with_capacity(n_paths * width);
    let mut stopped = Vec::with_capacity(n_paths * width);
    let mut revealed = Vec::with_capacity(n_paths * width);
    for p in 0..n_paths {
        for i in 0..width {
            occurred.push(if tau.occurred_by(p, i) { 1.0 } else { 0.0 });
            stopped.push(tau.time(p).min(grid.time(i)));
            let k = family
                .members()
                .iter()
                .filter(|m| matches!(m.time.value(p), Some(v) if v <= i))
                .count();
            revealed.push(k as f64);
        }
    }
    set.push_raw("occurred", occurred)?;
    set.push_raw("stopped", stopped)?;
    set.push_raw("revealed", revealed)?;
    for (n, m) in family.members().iter().enumerate() {
        let mut c = vec![0.0; n_paths * width];
        for p in 0..n_paths {
            if let Some(t) = m.time.value(p) {
                if tau.value(p) == Some(t) {
                    c[p * width + t..(p + 1) * width].fill(1.0);
                }
            }
        }
        set.push_raw(format!("C{}", n + 1), c)?;
    }
    set.family_times = family
        .members()
        .iter()
        .map(|m| m.time.values().to_vec())
        .collect();
    Ok(set)
}
