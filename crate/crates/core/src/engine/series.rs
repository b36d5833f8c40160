use rayon::prelude::*;

use super::TimeGrid;
use crate::error::{invalid, Result};

/// A grid-aligned process: one row of `N + 1` values per path.
///
/// `tag` names the information set the process is adapted to (for example
/// `"F"` or `"F^tau"`); it is carried along for reporting only.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    grid: TimeGrid,
    n_paths: usize,
    path_offset: usize,
    tag: String,
    data: Vec<f64>,
}

/// The martingale role of a [`Series`]: basis elements, compensated
/// occurrence processes, targets and the like all share this layout.
pub type MartingaleSeries = Series;

impl Series {
    pub fn new(
        grid: TimeGrid,
        n_paths: usize,
        tag: impl Into<String>,
        data: Vec<f64>,
    ) -> Result<Self> {
        if n_paths == 0 {
            return Err(invalid("a series needs at least one path"));
        }
        if data.len() != n_paths * grid.len() {
            return Err(invalid(format!(
                "series data has {} values, expected {} paths x {} points",
                data.len(),
                n_paths,
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            n_paths,
            path_offset: 0,
            tag: tag.into(),
            data,
        })
    }

    pub fn zeros(grid: TimeGrid, n_paths: usize, tag: impl Into<String>) -> Self {
        Self::new(grid, n_paths, tag, vec![0.0; n_paths * grid.len()]).expect("shape is consistent")
    }

    pub fn constant(grid: TimeGrid, n_paths: usize, tag: impl Into<String>, value: f64) -> Self {
        Self::new(grid, n_paths, tag, vec![value; n_paths * grid.len()])
            .expect("shape is consistent")
    }

    /// Builds a series by filling each path row; rows are filled in parallel.
    pub fn from_paths<F>(grid: TimeGrid, n_paths: usize, tag: impl Into<String>, fill: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let width = grid.len();
        let mut data = vec![0.0; n_paths * width];
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(p, row)| fill(p, row));
        Self {
            grid,
            n_paths,
            path_offset: 0,
            tag: tag.into(),
            data,
        }
    }

    pub fn with_offset(mut self, path_offset: usize) -> Self {
        self.path_offset = path_offset;
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    /// Global index of the first path (nonzero for chunks of a larger run).
    pub fn path_offset(&self) -> usize {
        self.path_offset
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let w = self.grid.len();
        &self.data[p * w..(p + 1) * w]
    }

    pub fn path_mut(&mut self, p: usize) -> &mut [f64] {
        let w = self.grid.len();
        &mut self.data[p * w..(p + 1) * w]
    }

    pub fn paths(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.grid.len())
    }

    pub fn par_paths(&self) -> rayon::slice::Chunks<'_, f64> {
        self.data.par_chunks(self.grid.len())
    }

    pub fn at(&self, p: usize, i: usize) -> f64 {
        self.data[p * self.grid.len() + i]
    }

    /// Increment over step `i`, `X_{t_i} - X_{t_{i-1}}`, for `i >= 1`.
    pub fn increment(&self, p: usize, i: usize) -> f64 {
        let row = self.path(p);
        row[i] - row[i - 1]
    }

    /// Values at grid index `i` across paths.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.at(p, i)).collect()
    }

    pub fn increments_at(&self, i: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.increment(p, i)).collect()
    }

    pub fn terminal(&self) -> Vec<f64> {
        self.column(self.grid.n_steps())
    }

    pub fn check_same_shape(&self, other: &Series) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.n_paths != other.n_paths {
            return Err(invalid(format!(
                "path count mismatch: {} vs {}",
                self.n_paths, other.n_paths
            )));
        }
        Ok(())
    }

    pub fn map(&self, tag: impl Into<String>, f: impl Fn(f64) -> f64 + Sync) -> Series {
        let data = self.data.par_iter().map(|&x| f(x)).collect();
        Series {
            grid: self.grid,
            n_paths: self.n_paths,
            path_offset: self.path_offset,
            tag: tag.into(),
            data,
        }
    }

    /// Pointwise combination of two series of identical shape.
    pub fn zip_with(
        &self,
        other: &Series,
        tag: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Result<Series> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .par_iter()
            .zip(other.data.par_iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Series {
            grid: self.grid,
            n_paths: self.n_paths,
            path_offset: self.path_offset,
            tag: tag.into(),
            data,
        })
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.zip_with(other, self.tag.clone(), |a, b| a + b)
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.zip_with(other, self.tag.clone(), |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Series {
        self.map(self.tag.clone(), |x| c * x)
    }

    /// Keeps every `factor`-th grid point.
    pub fn coarsen(&self, factor: usize) -> Result<Series> {
        let grid = self.grid.coarsen(factor)?;
        let data = self
            .paths()
            .flat_map(|row| row.iter().step_by(factor).copied())
            .collect();
        Ok(Series {
            grid,
            n_paths: self.n_paths,
            path_offset: self.path_offset,
            tag: self.tag.clone(),
            data,
        })
    }

    /// Appends the paths of `other` (same grid) below these.
    pub fn append(&mut self, other: &Series) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        self.data.extend_from_slice(&other.data);
        self.n_paths += other.n_paths;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 4).unwrap()
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(Series::new(grid(), 2, "F", vec![0.0; 9]).is_err());
        assert!(Series::new(grid(), 0, "F", vec![]).is_err());
    }

    #[test]
    fn rows_and_increments() {
        let s = Series::from_paths(grid(), 2, "F", |p, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = (p * 10 + i) as f64;
            }
        });
        assert_eq!(s.path(1), &[10.0, 11.0, 12.0, 13.0, 14.0]);
        assert_eq!(s.increment(1, 3), 1.0);
        assert_eq!(s.terminal(), vec![4.0, 14.0]);
        let c = s.coarsen(2).unwrap();
        assert_eq!(c.path(1), &[10.0, 12.0, 14.0]);
    }

    #[test]
    fn zip_checks_shape() {
        let a = Series::zeros(grid(), 2, "F");
        let b = Series::zeros(TimeGrid::new(1.0, 5).unwrap(), 2, "F");
        assert!(a.add(&b).is_err());
    }
}
