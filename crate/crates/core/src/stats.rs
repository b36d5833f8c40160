//! Small numerical helpers shared by the estimators.

use statrs::distribution::{ContinuousCDF, Normal};

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so sums are bit-stable across runs and thread counts.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn z(&self, target: f64) -> f64 {
        z_score(self.mean - target, self.se)
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        self.z(target).abs() <= n_se
    }
}

/// Mean and standard error; with `weights` the estimate is the weighted mean
/// and the standard error uses Kish's effective sample size.
pub fn mean_se(xs: &[f64], weights: Option<&[f64]>) -> MeanEstimate {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            se: f64::NAN,
            n: 0,
        };
    }
    match weights {
        None => {
            let mean = pairwise_sum(xs) / n as f64;
            let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
            let var = if n > 1 {
                pairwise_sum(&dev) / (n - 1) as f64
            } else {
                0.0
            };
            MeanEstimate {
                mean,
                se: (var / n as f64).sqrt(),
                n,
            }
        }
        Some(w) => {
            let sw = pairwise_sum(w);
            let wx: Vec<f64> = xs.iter().zip(w).map(|(x, w)| x * w).collect();
            let mean = pairwise_sum(&wx) / sw;
            let dev: Vec<f64> = xs
                .iter()
                .zip(w)
                .map(|(x, w)| w * (x - mean) * (x - mean))
                .collect();
            let var = pairwise_sum(&dev) / sw;
            let sw2: f64 = pairwise_sum(&w.iter().map(|w| w * w).collect::<Vec<_>>());
            let n_eff = if sw2 > 0.0 { sw * sw / sw2 } else { 0.0 };
            let se = if n_eff > 1.0 {
                (var / (n_eff - 1.0)).sqrt()
            } else {
                0.0
            };
            MeanEstimate { mean, se, n }
        }
    }
}

/// Binomial proportion with its standard error.
pub fn proportion(successes: usize, trials: usize) -> MeanEstimate {
    if trials == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            se: f64::NAN,
            n: 0,
        };
    }
    let p = successes as f64 / trials as f64;
    MeanEstimate {
        mean: p,
        se: (p * (1.0 - p) / trials as f64).sqrt(),
        n: trials,
    }
}

/// `diff / se`, with the degenerate cases resolved: zero difference scores
/// zero, a nonzero difference with zero spread is infinitely significant.
pub fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        diff.signum() * f64::INFINITY
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided Bonferroni critical value for `n_tests` simultaneous z-tests.
pub fn bonferroni_threshold(alpha: f64, n_tests: usize) -> f64 {
    let m = n_tests.max(1) as f64;
    normal_quantile(1.0 - alpha / (2.0 * m))
}
