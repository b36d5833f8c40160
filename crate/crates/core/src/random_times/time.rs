use crate::engine::TimeGrid;
use crate::error::{invalid, Result};

/// Where a finite value of a random time comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Constructed directly, not yet decomposed.
    Raw,
    /// Equal to the `n`-th member (0-based) of the exhausting family.
    Thin(usize),
    /// Avoids the family.
    Thick,
    Infinite,
}

/// Per-path value of a random time as a grid index, `None` standing for +∞.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomTime {
    grid: TimeGrid,
    path_offset: usize,
    values: Vec<Option<usize>>,
    labels: Vec<Provenance>,
    exact: Option<Vec<f64>>,
}

impl RandomTime {
    /// A raw time: finite values labelled [`Provenance::Raw`].
    pub fn new(grid: TimeGrid, values: Vec<Option<usize>>) -> Result<Self> {
        let labels = values
            .iter()
            .map(|v| {
                if v.is_some() {
                    Provenance::Raw
                } else {
                    Provenance::Infinite
                }
            })
            .collect();
        Self::with_labels(grid, values, labels)
    }

    pub fn with_labels(
        grid: TimeGrid,
        values: Vec<Option<usize>>,
        labels: Vec<Provenance>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("a random time needs at least one path"));
        }
        if labels.len() != values.len() {
            return Err(invalid("labels and values differ in length"));
        }
        for (v, l) in values.iter().zip(&labels) {
            if let Some(i) = v {
                if *i > grid.n_steps() {
                    return Err(invalid(format!("grid index {i} beyond the horizon")));
                }
            }
            if v.is_none() != (*l == Provenance::Infinite) {
                return Err(invalid(
                    "label Infinite must match exactly the infinite values",
                ));
            }
        }
        Ok(Self {
            grid,
            path_offset: 0,
            values,
            labels,
            exact: None,
        })
    }

    /// The same deterministic index on every path.
    pub fn deterministic(grid: TimeGrid, n_paths: usize, index: usize) -> Result<Self> {
        let mut t = Self::new(grid, vec![Some(index); n_paths])?;
        t.exact = Some(vec![grid.time(index); n_paths]);
        Ok(t)
    }

    pub fn never(grid: TimeGrid, n_paths: usize) -> Self {
        Self::new(grid, vec![None; n_paths]).expect("valid")
    }

    /// Attaches pre-snap continuous values (`f64::INFINITY` when infinite).
    pub fn with_exact(mut self, exact: Vec<f64>) -> Result<Self> {
        if exact.len() != self.values.len() {
            return Err(invalid("exact values differ in length"));
        }
        self.exact = Some(exact);
        Ok(self)
    }

    pub fn with_offset(mut self, offset: usize) -> Self {
        self.path_offset = offset;
        self
    }

    pub fn relabel(mut self, label: Provenance) -> Self {
        for (v, l) in self.values.iter().zip(self.labels.iter_mut()) {
            if v.is_some() {
                *l = label;
            }
        }
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    pub fn path_offset(&self) -> usize {
        self.path_offset
    }

    pub fn value(&self, p: usize) -> Option<usize> {
        self.values[p]
    }

    pub fn values(&self) -> &[Option<usize>] {
        &self.values
    }

    pub fn label(&self, p: usize) -> Provenance {
        self.labels[p]
    }

    pub fn labels(&self) -> &[Provenance] {
        &self.labels
    }

    pub fn exact(&self) -> Option<&[f64]> {
        self.exact.as_deref()
    }

    /// Time value `t_τ`, or +∞.
    pub fn time(&self, p: usize) -> f64 {
        self.values[p].map_or(f64::INFINITY, |i| self.grid.time(i))
    }

    pub fn n_finite(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// `1_{τ <= t_i}` on path `p`.
    pub fn occurred_by(&self, p: usize, i: usize) -> bool {
        matches!(self.values[p], Some(v) if v <= i)
    }

    /// Maps the time onto a grid coarser by `factor`: each value moves to the
    /// first coarse point at or after it.
    pub fn coarsen(&self, factor: usize) -> Result<RandomTime> {
        let grid = self.grid.coarsen(factor)?;
        let values = self
            .values
            .iter()
            .map(|v| v.map(|i| i.div_ceil(factor)))
            .collect();
        let mut t = RandomTime::with_labels(grid, values, self.labels.clone())?;
        t.path_offset = self.path_offset;
        t.exact = self.exact.clone();
        Ok(t)
    }

    pub fn check_compatible(&self, other: &RandomTime) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.n_paths() != other.n_paths() {
            return Err(invalid(format!(
                "path count mismatch: {} vs {}",
                self.n_paths(),
                other.n_paths()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyMember {
    pub time: RandomTime,
    pub predictable: bool,
}

/// An ordered family `T_1, T_2, ...` of stopping times with disjoint graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingFamily {
    members: Vec<FamilyMember>,
    increasing: bool,
}

impl StoppingFamily {
    /// Validates disjointness (and monotonicity when `increasing`) on every path.
    pub fn new(members: Vec<FamilyMember>, increasing: bool) -> Result<Self> {
        if let Some(first) = members.first() {
            for m in &members[1..] {
                first.time.check_compatible(&m.time)?;
            }
        }
        let family = Self {
            members,
            increasing,
        };
        family.validate()?;
        Ok(family)
    }

    /// Deterministic predictable family at the given grid indices.
    pub fn deterministic(grid: TimeGrid, n_paths: usize, indices: &[usize]) -> Result<Self> {
        let members = indices
            .iter()
            .map(|&i| {
                Ok(FamilyMember {
                    time: RandomTime::deterministic(grid, n_paths, i)?,
                    predictable: true,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let increasing = indices.windows(2).all(|w| w[0] < w[1]);
        Self::new(members, increasing)
    }

    pub fn empty() -> Self {
        Self {
            members: Vec::new(),
            increasing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.members.first() else {
            return Ok(());
        };
        for p in 0..first.time.n_paths() {
            let mut seen: Vec<usize> = Vec::with_capacity(self.members.len());
            let mut last: Option<usize> = None;
            for (n, m) in self.members.iter().enumerate() {
                if let Some(v) = m.time.value(p) {
                    if seen.contains(&v) {
                        return Err(invalid(format!(
                            "family members overlap on path {p} at grid index {v}"
                        )));
                    }
                    seen.push(v);
                    if self.increasing {
                        if let Some(l) = last {
                            if v < l {
                                return Err(invalid(format!(
                                    "family not increasing on path {p} at member {n}"
                                )));
                            }
                        }
                        last = Some(v);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn member(&self, n: usize) -> &RandomTime {
        &self.members[n].time
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    pub fn all_predictable(&self) -> bool {
        self.members.iter().all(|m| m.predictable)
    }

    pub fn grid(&self) -> Option<&TimeGrid> {
        self.members.first().map(|m| m.time.grid())
    }

    /// Index of the member whose value on path `p` is `i`, if any.
    pub fn member_at(&self, p: usize, i: usize) -> Option<usize> {
        self.members.iter().position(|m| m.time.value(p) == Some(i))
    }

    pub fn coarsen(&self, factor: usize) -> Result<StoppingFamily> {
        let members = self
            .members
            .iter()
            .map(|m| {
                Ok(FamilyMember {
                    time: m.time.coarsen(factor)?,
                    predictable: m.predictable,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        // Distinct fine times may share a coarse point, so disjointness is not re-checked.
        Ok(Self {
            members,
            increasing: self.increasing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 10).unwrap()
    }

    #[test]
    fn infinite_label_invariant() {
        let t = RandomTime::new(grid(), vec![Some(3), None]).unwrap();
        assert_eq!(t.label(0), Provenance::Raw);
        assert_eq!(t.label(1), Provenance::Infinite);
        assert!(
            RandomTime::with_labels(grid(), vec![Some(1)], vec![Provenance::Infinite]).is_err()
        );
        assert!(RandomTime::with_labels(grid(), vec![None], vec![Provenance::Thick]).is_err());
        assert!(RandomTime::new(grid(), vec![Some(11)]).is_err());
    }

    #[test]
    fn family_disjointness_is_checked() {
        let a = RandomTime::new(grid(), vec![Some(2), Some(4)]).unwrap();
        let b = RandomTime::new(grid(), vec![Some(5), Some(4)]).unwrap();
        let err = StoppingFamily::new(
            vec![
                FamilyMember {
                    time: a.clone(),
                    predictable: true,
                },
                FamilyMember {
                    time: b,
                    predictable: true,
                },
            ],
            false,
        );
        assert!(err.is_err());
        let c = RandomTime::new(grid(), vec![Some(1), None]).unwrap();
        let not_increasing = StoppingFamily::new(
            vec![
                FamilyMember {
                    time: a,
                    predictable: true,
                },
                FamilyMember {
                    time: c,
                    predictable: true,
                },
            ],
            true,
        );
        assert!(not_increasing.is_err());
        assert!(StoppingFamily::deterministic(grid(), 3, &[2, 5, 8])
            .unwrap()
            .is_increasing());
        assert!(StoppingFamily::deterministic(grid(), 3, &[2, 2]).is_err());
    }

    #[test]
    fn coarsen_rounds_up() {
        let t = RandomTime::new(grid(), vec![Some(3), Some(4), None, Some(0)]).unwrap();
        let c = t.coarsen(2).unwrap();
        assert_eq!(c.values(), &[Some(2), Some(2), None, Some(0)]);
    }
}
