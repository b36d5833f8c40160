use crate::error::{invalid, Result};

/// Uniform time grid `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(invalid("n_steps must be at least 1"));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `N + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// `t_i`. The last point is exactly the horizon.
    pub fn time(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_steps);
        self.horizon * (i as f64 / self.n_steps as f64)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Index of the first grid point `>= t`, or `None` past the horizon.
    pub fn index_at_or_after(&self, t: f64) -> Option<usize> {
        if t > self.horizon {
            return None;
        }
        let raw = (t / self.dt()).ceil().max(0.0) as usize;
        // Guard against `t / dt` rounding one step too far.
        let i = if raw > 0 && self.time(raw - 1) >= t {
            raw - 1
        } else {
            raw
        };
        Some(i.min(self.n_steps))
    }

    /// Every `factor`-th point of this grid.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(invalid(format!(
                "cannot coarsen {} steps by {factor}",
                self.n_steps
            )));
        }
        Self::new(self.horizon, self.n_steps / factor)
    }

    pub fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self != other {
            return Err(invalid(format!(
                "grid mismatch: (T={}, N={}) vs (T={}, N={})",
                self.horizon, self.n_steps, other.horizon, other.n_steps
            )));
        }
        Ok(())
    }
}

/// Convenience constructor mirroring [`TimeGrid::new`].
pub fn make_grid(horizon: f64, n_steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, n_steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_grid() {
        let g = make_grid(1.0, 4).unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn single_step_grid() {
        assert_eq!(make_grid(2.0, 1).unwrap().points(), vec![0.0, 2.0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_grid(1.0, 0).is_err());
        assert!(make_grid(0.0, 3).is_err());
        assert!(make_grid(-1.0, 3).is_err());
        assert!(make_grid(f64::NAN, 3).is_err());
    }

    #[test]
    fn uniform_and_exact_horizon() {
        for &(h, n) in &[(1.0, 3), (5.0, 4000), (0.7, 13)] {
            let g = make_grid(h, n).unwrap();
            let p = g.points();
            assert_eq!(p[0], 0.0);
            assert_eq!(*p.last().unwrap(), h);
            for w in p.windows(2) {
                assert!(w[1] > w[0]);
                assert!((w[1] - w[0] - g.dt()).abs() <= 8.0 * f64::EPSILON * h);
            }
        }
    }

    #[test]
    fn index_lookup() {
        let g = make_grid(1.0, 4).unwrap();
        assert_eq!(g.index_at_or_after(0.0), Some(0));
        assert_eq!(g.index_at_or_after(0.25), Some(1));
        assert_eq!(g.index_at_or_after(0.3), Some(2));
        assert_eq!(g.index_at_or_after(1.0), Some(4));
        assert_eq!(g.index_at_or_after(1.01), None);
    }

    #[test]
    fn coarsening() {
        let g = make_grid(5.0, 8000).unwrap();
        let c = g.coarsen(2).unwrap();
        assert_eq!(c.n_steps(), 4000);
        assert_eq!(c.time(1), g.time(2));
        assert!(g.coarsen(3).is_err());
    }
}
