use std::ops::Range;

use rand_distr::{Distribution, Poisson, StandardNormal};

use super::{rng, Series, TimeGrid};
use crate::error::{invalid, Error, Result};

/// What a driver component is and how it was generated.
#[derive(Clone, Debug, PartialEq)]
pub enum ComponentKind {
    /// Standard Brownian motion.
    Brownian,
    /// Counting process of a compound Poisson driver: jumps of size `mark`
    /// arrive at `rate`; the stored values are the counts.
    PoissonCount { rate: f64, mark: f64 },
    /// Computed from other components.
    Derived,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSpec {
    pub name: String,
    pub kind: ComponentKind,
    pub initial: f64,
}

/// The set of independent driver components to simulate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DriverSpec {
    pub components: Vec<ComponentSpec>,
}

impl DriverSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn brownian(mut self, name: impl Into<String>) -> Self {
        self.components.push(ComponentSpec {
            name: name.into(),
            kind: ComponentKind::Brownian,
            initial: 0.0,
        });
        self
    }

    pub fn poisson(mut self, name: impl Into<String>, rate: f64, mark: f64) -> Self {
        self.components.push(ComponentSpec {
            name: name.into(),
            kind: ComponentKind::PoissonCount { rate, mark },
            initial: 0.0,
        });
        self
    }

    fn validate(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            if self.components[..i].iter().any(|d| d.name == c.name) {
                return Err(invalid(format!("duplicate component name {:?}", c.name)));
            }
            match c.kind {
                ComponentKind::PoissonCount { rate, mark } => {
                    if !(rate >= 0.0) || !rate.is_finite() {
                        return Err(invalid(format!(
                            "component {:?}: rate must be >= 0, got {rate}",
                            c.name
                        )));
                    }
                    if !mark.is_finite() {
                        return Err(invalid(format!(
                            "component {:?}: mark must be finite",
                            c.name
                        )));
                    }
                }
                ComponentKind::Derived => {
                    return Err(invalid(format!(
                        "component {:?}: derived components are not simulated",
                        c.name
                    )))
                }
                ComponentKind::Brownian => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Component {
    name: String,
    kind: ComponentKind,
    series: Series,
}

/// A simulated ensemble of driver paths: the observable data of `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    n_paths: usize,
    path_offset: usize,
    seed: u64,
    components: Vec<Component>,
}

impl PathBundle {
    /// An empty bundle to which components are attached by hand.
    pub fn empty(grid: TimeGrid, n_paths: usize, seed: u64) -> Self {
        Self {
            grid,
            n_paths,
            path_offset: 0,
            seed,
            components: Vec::new(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn path_offset(&self) -> usize {
        self.path_offset
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|c| c.name.as_str())
    }

    pub fn component(&self, name: &str) -> Result<&Series> {
        self.find(name).map(|c| &c.series)
    }

    pub fn kind(&self, name: &str) -> Result<&ComponentKind> {
        self.find(name).map(|c| &c.kind)
    }

    fn find(&self, name: &str) -> Result<&Component> {
        self.components
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::NotFound(format!("component {name:?}")))
    }

    /// Attaches a component (replacing one of the same name).
    pub fn insert(
        &mut self,
        name: impl Into<String>,
        kind: ComponentKind,
        series: Series,
    ) -> Result<()> {
        self.grid.check_same(series.grid())?;
        if series.n_paths() != self.n_paths {
            return Err(invalid("component path count does not match the bundle"));
        }
        let name = name.into();
        let series = series.with_offset(self.path_offset);
        match self.components.iter_mut().find(|c| c.name == name) {
            Some(c) => {
                c.kind = kind;
                c.series = series;
            }
            None => self.components.push(Component { name, kind, series }),
        }
        Ok(())
    }

    /// Compound Poisson value `mark * count` for a count component.
    pub fn compound_value(&self, name: &str) -> Result<Series> {
        match self.kind(name)? {
            ComponentKind::PoissonCount { mark, .. } => {
                let mark = *mark;
                Ok(self.component(name)?.map("F", move |n| mark * n))
            }
            _ => Err(invalid(format!(
                "component {name:?} is not a Poisson count"
            ))),
        }
    }

    /// Keeps every `factor`-th grid point of every component.
    pub fn coarsen(&self, factor: usize) -> Result<PathBundle> {
        let grid = self.grid.coarsen(factor)?;
        let components = self
            .components
            .iter()
            .map(|c| {
                Ok(Component {
                    name: c.name.clone(),
                    kind: c.kind.clone(),
                    series: c.series.coarsen(factor)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(PathBundle {
            grid,
            n_paths: self.n_paths,
            path_offset: self.path_offset,
            seed: self.seed,
            components,
        })
    }
}

/// Simulates `n_paths` paths of every component of `spec` on `grid`.
pub fn simulate_drivers(
    grid: &TimeGrid,
    n_paths: usize,
    spec: &DriverSpec,
    seed: u64,
) -> Result<PathBundle> {
    if n_paths == 0 {
        return Err(invalid("n_paths must be at least 1"));
    }
    simulate_paths(grid, spec, seed, 0..n_paths)
}

/// Simulates the global paths `paths` only. Concatenating the chunks of a
/// partition of `0..n` reproduces `simulate_drivers(.., n, ..)` exactly.
pub fn simulate_paths(
    grid: &TimeGrid,
    spec: &DriverSpec,
    seed: u64,
    paths: Range<usize>,
) -> Result<PathBundle> {
    spec.validate()?;
    if paths.is_empty() {
        return Err(invalid("empty path range"));
    }
    let n_paths = paths.len();
    let offset = paths.start;
    let dt = grid.dt();
    let mut components = Vec::with_capacity(spec.components.len());
    for c in &spec.components {
        let domain = format!("driver/{}", c.name);
        let initial = c.initial;
        let series = match c.kind {
            ComponentKind::Brownian => {
                let sd = dt.sqrt();
                Series::from_paths(*grid, n_paths, "F", |p, row| {
                    let mut rng = rng::stream(seed, &domain, (offset + p) as u64);
                    row[0] = initial;
                    for i in 1..row.len() {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        row[i] = row[i - 1] + sd * z;
                    }
                })
            }
            ComponentKind::PoissonCount { rate, .. } => {
                let mean = rate * dt;
                let law = if mean > 0.0 {
                    Some(Poisson::new(mean).map_err(|e| invalid(format!("poisson law: {e}")))?)
                } else {
                    None
                };
                Series::from_paths(*grid, n_paths, "F", |p, row| {
                    let mut rng = rng::stream(seed, &domain, (offset + p) as u64);
                    row[0] = initial;
                    for i in 1..row.len() {
                        let k = law.as_ref().map_or(0.0, |l| l.sample(&mut rng));
                        row[i] = row[i - 1] + k;
                    }
                })
            }
            ComponentKind::Derived => unreachable!("rejected by validate"),
        };
        components.push(Component {
            name: c.name.clone(),
            kind: c.kind.clone(),
            series: series.with_offset(offset),
        });
    }
    Ok(PathBundle {
        grid: *grid,
        n_paths,
        path_offset: offset,
        seed,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean_se, pairwise_sum};

    #[test]
    fn brownian_terminal_variance_is_horizon() {
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let b = simulate_drivers(&grid, 100_000, &DriverSpec::new().brownian("W"), 11).unwrap();
        let w = b.component("W").unwrap();
        assert!(w.paths().all(|r| r[0] == 0.0));
        let sq: Vec<f64> = w.terminal().iter().map(|x| x * x).collect();
        let est = mean_se(&sq, None);
        assert!(est.within(1.0, 3.0), "Var W_T = {} +- {}", est.mean, est.se);
    }

    #[test]
    fn poisson_terminal_mean_is_rate_times_horizon() {
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let b = simulate_drivers(
            &grid,
            100_000,
            &DriverSpec::new().poisson("N", 2.0, 0.5),
            12,
        )
        .unwrap();
        let est = mean_se(&b.component("N").unwrap().terminal(), None);
        assert!(est.within(2.0, 3.0), "E N_T = {} +- {}", est.mean, est.se);
        let x = b.compound_value("N").unwrap();
        assert_eq!(x.at(0, 20), 0.5 * b.component("N").unwrap().at(0, 20));
    }

    #[test]
    fn increments_over_disjoint_steps_are_uncorrelated() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let b = simulate_drivers(&grid, 100_000, &DriverSpec::new().brownian("W"), 5).unwrap();
        let w = b.component("W").unwrap();
        for (i, j) in [(1, 2), (3, 7), (5, 6)] {
            let (di, dj) = (w.increments_at(i), w.increments_at(j));
            let prod: Vec<f64> = di.iter().zip(&dj).map(|(a, b)| a * b).collect();
            let est = mean_se(&prod, None);
            assert!(est.within(0.0, 4.0), "corr({i},{j}) z = {}", est.z(0.0));
        }
    }

    #[test]
    fn deterministic_and_chunk_invariant() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let spec = DriverSpec::new().brownian("W").poisson("N", 3.0, 1.0);
        let a = simulate_drivers(&grid, 50, &spec, 99).unwrap();
        let b = simulate_drivers(&grid, 50, &spec, 99).unwrap();
        assert_eq!(a, b);
        let head = simulate_paths(&grid, &spec, 99, 0..20).unwrap();
        let tail = simulate_paths(&grid, &spec, 99, 20..50).unwrap();
        let mut joined = head.component("W").unwrap().clone();
        joined.append(tail.component("W").unwrap()).unwrap();
        assert_eq!(joined.data(), a.component("W").unwrap().data());
        let other = simulate_drivers(&grid, 50, &spec, 100).unwrap();
        assert_ne!(
            pairwise_sum(a.component("W").unwrap().data()),
            pairwise_sum(other.component("W").unwrap().data())
        );
    }

    #[test]
    fn rejects_negative_rate_and_zero_paths() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert!(
            simulate_drivers(&grid, 10, &DriverSpec::new().poisson("N", -1.0, 1.0), 0).is_err()
        );
        assert!(simulate_drivers(&grid, 0, &DriverSpec::new().brownian("W"), 0).is_err());
        let zero =
            simulate_drivers(&grid, 10, &DriverSpec::new().poisson("N", 0.0, 1.0), 0).unwrap();
        assert!(zero
            .component("N")
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn missing_component_is_not_found() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let b = simulate_drivers(&grid, 2, &DriverSpec::new().brownian("W"), 0).unwrap();
        assert!(matches!(b.component("V"), Err(Error::NotFound(_))));
    }
}
