use std::collections::BTreeMap;

use crate::engine::Series;
use crate::enlargement::EnlargedFeatureSet;
use crate::error::{invalid, Result};
use crate::stats::{bonferroni_threshold, mean_se};

#[derive(Clone, Debug, PartialEq)]
pub struct DriftConfig {
    pub alpha: f64,
    /// Number of time blocks the grid is cut into.
    pub n_blocks: usize,
    /// Feature whose quantiles at the block start define bins.
    pub bin_feature: Option<String>,
    pub n_bins: usize,
    /// Categorical features at the block start splitting the population.
    pub split_by: Vec<String>,
    /// Bins smaller than this are merged with a neighbour.
    pub min_bin: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            n_blocks: 10,
            bin_feature: None,
            n_bins: 5,
            split_by: Vec::new(),
            min_bin: 30,
        }
    }
}

impl DriftConfig {
    pub fn binned(mut self, feature: &str, n_bins: usize) -> Self {
        self.bin_feature = Some(feature.into());
        self.n_bins = n_bins;
        self
    }

    pub fn split(mut self, feature: &str) -> Self {
        self.split_by.push(feature.into());
        self
    }
}

/// Mean increment of the tested process over one block within one bin.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftCell {
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    pub cells: Vec<DriftCell>,
    pub max_abs_z: f64,
    pub threshold: f64,
    pub pass: bool,
    pub warnings: Vec<String>,
}

impl DriftReport {
    pub fn n_tests(&self) -> usize {
        self.cells.len()
    }
}

/// Tests `E[X_{t_e} - X_{t_s} | F_{t_s}] = 0` for block boundaries `s < e`,
/// with conditioning approximated by bins of the feature set at `t_s`. All
/// cells share one Bonferroni-corrected threshold at level `alpha`.
pub fn drift_test(x: &Series, f: &EnlargedFeatureSet, cfg: &DriftConfig) -> Result<DriftReport> {
    f.grid().check_same(x.grid())?;
    if x.n_paths() != f.n_paths() {
        return Err(invalid("process and feature set differ in path count"));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(invalid("process has non-finite values"));
    }
    let n = x.grid().n_steps();
    let blocks = cfg.n_blocks.clamp(1, n);
    let mut bounds: Vec<usize> = (0..=blocks)
        .map(|k| (k * n + blocks / 2) / blocks)
        .collect();
    bounds.dedup();
    let split: Vec<usize> = cfg
        .split_by
        .iter()
        .map(|s| f.index_of(s))
        .collect::<Result<_>>()?;
    let bin = cfg
        .bin_feature
        .as_deref()
        .map(|s| f.index_of(s))
        .transpose()?;
    let weights = f.weights();
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for w in bounds.windows(2) {
        let (s, e) = (w[0], w[1]);
        let bin_of: Vec<usize> = match bin {
            Some(k) if cfg.n_bins > 1 => {
                let vals: Vec<f64> = (0..x.n_paths()).map(|p| f.value(k, p, s)).collect();
                let mut sorted = vals.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted.first() == sorted.last() {
                    warnings.push(format!("block {s}-{e}: binning feature is degenerate"));
                }
                let edges: Vec<f64> = (1..cfg.n_bins)
                    .map(|j| sorted[j * sorted.len() / cfg.n_bins])
                    .collect();
                vals.iter()
                    .map(|&v| edges.iter().filter(|&&q| v >= q).count())
                    .collect()
            }
            _ => vec![0; x.n_paths()],
        };
        let mut groups: BTreeMap<Vec<u64>, BTreeMap<usize, Vec<usize>>> = BTreeMap::new();
        for p in 0..x.n_paths() {
            let key: Vec<u64> = split.iter().map(|&k| f.value(k, p, s).to_bits()).collect();
            groups
                .entry(key)
                .or_default()
                .entry(bin_of[p])
                .or_default()
                .push(p);
        }
        let mut rest: Vec<usize> = Vec::new();
        let mut tested: Vec<(String, Vec<usize>)> = Vec::new();
        for (key, bins) in groups {
            let total: usize = bins.values().map(Vec::len).sum();
            if total < cfg.min_bin {
                rest.extend(bins.into_values().flatten());
                continue;
            }
            let label_key: Vec<String> = key
                .iter()
                .map(|b| format!("{}", f64::from_bits(*b)))
                .collect();
            let mut merged: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
            let mut cur: (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
            for (b, paths) in bins {
                cur.0.push(b);
                cur.1.extend(paths);
                if cur.1.len() >= cfg.min_bin {
                    merged.push(std::mem::take(&mut cur));
                }
            }
            if !cur.1.is_empty() {
                match merged.last_mut() {
                    Some(last) => {
                        last.0.extend(cur.0);
                        last.1.extend(cur.1);
                    }
                    None => merged.push(cur),
                }
            }
            for (bins, mut paths) in merged {
                paths.sort_unstable();
                let label = format!("[{}] bins {:?}", label_key.join(","), bins);
                tested.push((label, paths));
            }
        }
        if rest.len() >= cfg.min_bin {
            rest.sort_unstable();
            tested.push(("pooled small groups".into(), rest));
        } else if !rest.is_empty() {
            warnings.push(format!(
                "block {s}-{e}: {} paths in small groups untested",
                rest.len()
            ));
        }
        for (label, paths) in tested {
            let inc: Vec<f64> = paths.iter().map(|&p| x.at(p, e) - x.at(p, s)).collect();
            let w: Option<Vec<f64>> = weights.map(|w| paths.iter().map(|&p| w[p]).collect());
            let est = mean_se(&inc, w.as_deref());
            cells.push(DriftCell {
                start: s,
                end: e,
                label,
                n: paths.len(),
                mean: est.mean,
                se: est.se,
                z: est.z(0.0),
            });
        }
    }
    let threshold = bonferroni_threshold(cfg.alpha, cells.len());
    let max_abs_z = cells.iter().fold(0.0f64, |a, c| a.max(c.z.abs()));
    if cells.is_empty() {
        warnings.push("no cell reached the minimum bin size".into());
    }
    Ok(DriftReport {
        pass: max_abs_z <= threshold,
        cells,
        max_abs_z,
        threshold,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate_drivers, DriverSpec, TimeGrid};
    use crate::enlargement::{build_features, Summaries};
    use crate::random_times::{RandomTime, StoppingFamily};

    fn world(n_paths: usize) -> (Series, EnlargedFeatureSet) {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let b = simulate_drivers(&grid, n_paths, &DriverSpec::default().brownian("W"), 3).unwrap();
        let w = b.component("W").unwrap().clone();
        let f = build_features(
            &[("W", &w)],
            Summaries::default(),
            &RandomTime::never(grid, n_paths),
            &StoppingFamily::empty(),
        )
        .unwrap();
        (w, f)
    }

    #[test]
    fn brownian_motion_has_no_drift() {
        let (w, f) = world(5000);
        let r = drift_test(&w, &f, &DriftConfig::default().binned("W", 5)).unwrap();
        assert!(r.pass, "max |z| {} > {}", r.max_abs_z, r.threshold);
        // at t = 0 the binning feature is constant: one cell there
        assert_eq!(r.n_tests(), 9 * 5 + 1);
    }

    #[test]
    fn deterministic_drift_is_detected() {
        let (w, f) = world(200);
        let t = Series::from_paths(*w.grid(), 200, "F", |_, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = i as f64 / 50.0;
            }
        });
        assert!(!drift_test(&t, &f, &DriftConfig::default()).unwrap().pass);
    }

    #[test]
    fn state_dependent_drift_is_detected_by_binning() {
        let (w, f) = world(5000);
        // mean-reverting: zero unconditional drift, nonzero given W
        let x = Series::from_paths(*w.grid(), 5000, "F", |p, row| {
            let path = w.path(p);
            row[0] = 0.0;
            for i in 1..row.len() {
                row[i] = row[i - 1] + (path[i] - path[i - 1]) - 2.0 * path[i - 1] / 50.0;
            }
        });
        assert!(
            !drift_test(&x, &f, &DriftConfig::default().binned("W", 5))
                .unwrap()
                .pass
        );
    }

    #[test]
    fn tiny_population_is_reported_untested() {
        let (w, f) = world(10);
        let r = drift_test(&w, &f, &DriftConfig::default()).unwrap();
        assert!(r.cells.is_empty() && !r.warnings.is_empty());
    }
}
