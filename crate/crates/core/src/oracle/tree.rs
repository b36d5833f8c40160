use rand::Rng;

use crate::engine::rng::stream;
use crate::engine::{Series, TimeGrid};
use crate::enlargement::{build_features, EnlargedFeatureSet, Summaries};
use crate::error::{invalid, Error, Result};
use crate::random_times::{RandomTime, StoppingFamily};

pub const MAX_STEPS: usize = 12;
pub const MAX_ATOMS: usize = 1 << 22;

/// One child of every node at a given step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub increment: f64,
    /// Auxiliary label, e.g. an independent randomizer for Cox-style times.
    pub aux: u32,
    pub prob: f64,
}

impl Branch {
    pub fn new(increment: f64, aux: u32, prob: f64) -> Self {
        Self {
            increment,
            aux,
            prob,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeSpec {
    pub x0: f64,
    pub dt: f64,
    /// Branches available at each step; the same at every node of a step.
    pub steps: Vec<Vec<Branch>>,
}

impl TreeSpec {
    /// Walk with increments `up`/`down` taken with probabilities `p`/`1 - p`.
    pub fn binary(n_steps: usize, up: f64, down: f64, p: f64) -> Self {
        Self {
            x0: 0.0,
            dt: 1.0,
            steps: vec![vec![Branch::new(up, 0, p), Branch::new(down, 0, 1.0 - p)]; n_steps],
        }
    }

    pub fn symmetric(n_steps: usize) -> Self {
        Self::binary(n_steps, 1.0, -1.0, 0.5)
    }

    /// Every step splits each walk branch into auxiliary outcomes `0..k`
    /// with probabilities `aux_probs`, independent of the walk.
    pub fn with_aux(mut self, aux_probs: &[f64]) -> Self {
        for step in &mut self.steps {
            *step = step
                .iter()
                .flat_map(|b| {
                    aux_probs
                        .iter()
                        .enumerate()
                        .map(move |(k, q)| Branch::new(b.increment, k as u32, b.prob * q))
                })
                .collect();
        }
        self
    }
}

/// Finite probability space of all branch sequences with exact atom weights.
///
/// Atoms are numbered in mixed radix with the first step most significant, so
/// the atoms below a node at time `t` form a contiguous block.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeWorld {
    spec: TreeSpec,
    grid: TimeGrid,
    stride: Vec<usize>,
    probs: Vec<f64>,
    walk: Series,
    aux: Series,
}

pub fn build_tree(spec: &TreeSpec) -> Result<TreeWorld> {
    let n = spec.steps.len();
    if n == 0 || n > MAX_STEPS {
        return Err(invalid(format!(
            "tree needs 1..={MAX_STEPS} steps, got {n}"
        )));
    }
    let mut n_atoms: usize = 1;
    for (s, step) in spec.steps.iter().enumerate() {
        if step.is_empty() {
            return Err(invalid(format!("step {} has no branches", s + 1)));
        }
        if step
            .iter()
            .any(|b| !(b.prob > 0.0) || !b.increment.is_finite())
        {
            return Err(invalid(format!(
                "step {}: branch probabilities must be positive",
                s + 1
            )));
        }
        let total: f64 = step.iter().map(|b| b.prob).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!(
                "step {} probabilities sum to {total}",
                s + 1
            )));
        }
        n_atoms = n_atoms
            .checked_mul(step.len())
            .filter(|&a| a <= MAX_ATOMS)
            .ok_or_else(|| invalid("tree exceeds the atom bound"))?;
    }
    let grid = TimeGrid::new(spec.dt * n as f64, n)?;
    let mut stride = vec![1; n + 1];
    for t in (0..n).rev() {
        stride[t] = stride[t + 1] * spec.steps[t].len();
    }
    let mut probs = vec![0.0; n_atoms];
    let mut walk = vec![0.0; n_atoms * (n + 1)];
    let mut aux = vec![0.0; n_atoms * (n + 1)];
    for a in 0..n_atoms {
        let mut p = 1.0;
        let mut x = spec.x0;
        walk[a * (n + 1)] = x;
        for t in 1..=n {
            let b = spec.steps[t - 1][(a / stride[t]) % spec.steps[t - 1].len()];
            p *= b.prob;
            x += b.increment;
            walk[a * (n + 1) + t] = x;
            aux[a * (n + 1) + t] = b.aux as f64;
        }
        probs[a] = p;
    }
    let total: f64 = crate::stats::pairwise_sum(&probs);
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!(
            "atom probabilities sum to {total}"
        )));
    }
    Ok(TreeWorld {
        spec: spec.clone(),
        grid,
        stride,
        probs,
        walk: Series::new(grid, n_atoms, "F", walk)?,
        aux: Series::new(grid, n_atoms, "F", aux)?,
    })
}

impl TreeWorld {
    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps()
    }

    pub fn n_atoms(&self) -> usize {
        self.probs.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Number of atoms below one node at time `t`.
    pub fn block(&self, t: usize) -> usize {
        self.stride[t]
    }

    pub fn n_nodes(&self, t: usize) -> usize {
        self.n_atoms() / self.stride[t]
    }

    /// Node at time `t` containing atom `a`.
    pub fn node(&self, a: usize, t: usize) -> usize {
        a / self.stride[t]
    }

    pub fn walk(&self) -> &Series {
        &self.walk
    }

    pub fn aux(&self) -> &Series {
        &self.aux
    }

    /// Node identifiers as a per-atom series, usable as a categorical feature.
    pub fn node_series(&self) -> Series {
        Series::from_paths(self.grid, self.n_atoms(), "F", |a, row| {
            for (t, v) in row.iter_mut().enumerate() {
                *v = self.node(a, t) as f64;
            }
        })
    }

    /// The atoms as a weighted path population: walk `X`, auxiliary labels
    /// `aux` and node identifiers `node`, enlarged by `tau` with the
    /// indicators of `family`.
    pub fn features(
        &self,
        tau: &RandomTime,
        family: &StoppingFamily,
    ) -> Result<EnlargedFeatureSet> {
        let node = self.node_series();
        build_features(
            &[("X", &self.walk), ("aux", &self.aux), ("node", &node)],
            Summaries::default(),
            tau,
            family,
        )?
        .with_weights(self.probs.clone())
    }

    /// First step `t >= 1` at which `pred(atom, t)` holds, as a random time.
    pub fn first_time(&self, pred: impl Fn(usize, usize) -> bool) -> Result<RandomTime> {
        let values = (0..self.n_atoms())
            .map(|a| (1..=self.n_steps()).find(|&t| pred(a, t)))
            .collect();
        RandomTime::new(self.grid, values)
    }
}

/// A random tree: 2 to `max_steps` steps with 2 or 3 branches per step (3
/// only while the atom count stays within `max_atoms`), uniform increments in
/// `[-1, 1]`, alternating auxiliary labels and random positive probabilities.
pub fn random_tree_spec(seed: u64, instance: u64, max_steps: usize, max_atoms: usize) -> TreeSpec {
    let mut rng = stream(seed, "oracle/tree", instance);
    let n = rng.random_range(2..=max_steps.clamp(2, MAX_STEPS));
    let mut atoms = 1usize;
    let steps = (0..n)
        .map(|s| {
            let rest = 1usize << (n - s - 1);
            let k = if atoms * 3 * rest <= max_atoms && rng.random_bool(0.5) {
                3
            } else {
                2
            };
            atoms *= k;
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let head: f64 = probs[..k - 1].iter().sum();
            probs[k - 1] = 1.0 - head;
            (0..k)
                .map(|j| Branch::new(rng.random_range(-1.0..1.0), (j % 2) as u32, probs[j]))
                .collect()
        })
        .collect();
    TreeSpec {
        x0: 0.0,
        dt: 1.0,
        steps,
    }
}
