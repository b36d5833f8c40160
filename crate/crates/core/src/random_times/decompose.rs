use super::{Provenance, RandomTime, StoppingFamily};
use crate::error::{invalid, Result};

/// Pathwise minimum; labels (and pre-snap values) follow the argument that
/// achieves it. Ties go to `a` and are counted.
pub fn min_combine(a: &RandomTime, b: &RandomTime) -> Result<(RandomTime, usize)> {
    a.check_compatible(b)?;
    let mut ties = 0;
    let mut values = Vec::with_capacity(a.n_paths());
    let mut labels = Vec::with_capacity(a.n_paths());
    let mut pick_a = Vec::with_capacity(a.n_paths());
    for p in 0..a.n_paths() {
        let take_a = match (a.value(p), b.value(p)) {
            (Some(x), Some(y)) => {
                if x == y {
                    ties += 1;
                }
                x <= y
            }
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => true,
        };
        let src = if take_a { a } else { b };
        values.push(src.value(p));
        labels.push(src.label(p));
        pick_a.push(take_a);
    }
    let mut out = RandomTime::with_labels(*a.grid(), values, labels)?.with_offset(a.path_offset());
    if let (Some(ea), Some(eb)) = (a.exact(), b.exact()) {
        let exact = pick_a
            .iter()
            .enumerate()
            .map(|(p, &ta)| if ta { ea[p] } else { eb[p] })
            .collect();
        out = out.with_exact(exact)?;
    }
    Ok((out, ties))
}

/// Result of splitting `τ` into its thin part `τ₁` and thick part `τ₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub tau: RandomTime,
    pub thin: RandomTime,
    pub thick: RandomTime,
    /// `matched[n][p]` is the indicator of `C_n = {τ = T_n < ∞}`.
    pub matched: Vec<Vec<bool>>,
    /// Paths whose finite `τ` falls after the last member of a fully used
    /// (all members finite) family: mass the truncated family cannot attribute.
    pub truncated: usize,
}

impl Decomposition {
    /// Index `n` with `C_n` on path `p`.
    pub fn matched_member(&self, p: usize) -> Option<usize> {
        self.matched.iter().position(|c| c[p])
    }
}

/// Thin-thick decomposition of `tau` against `family` by exact grid-index
/// equality: `τ₁ = T_n` on `C_n`, `τ₂ = τ` off `∪ C_n`, each +∞ elsewhere.
pub fn thin_thick_decompose(tau: &RandomTime, family: &StoppingFamily) -> Result<Decomposition> {
    family.validate()?;
    for m in family.members() {
        tau.check_compatible(&m.time)?;
    }
    let n_paths = tau.n_paths();
    let mut matched = vec![vec![false; n_paths]; family.len()];
    let mut thin_v = vec![None; n_paths];
    let mut thin_l = vec![Provenance::Infinite; n_paths];
    let mut thick_v = vec![None; n_paths];
    let mut thick_l = vec![Provenance::Infinite; n_paths];
    let mut truncated = 0;
    for p in 0..n_paths {
        let Some(t) = tau.value(p) else { continue };
        match family.member_at(p, t) {
            Some(n) => {
                matched[n][p] = true;
                thin_v[p] = Some(t);
                thin_l[p] = Provenance::Thin(n);
            }
            None => {
                thick_v[p] = Some(t);
                thick_l[p] = Provenance::Thick;
                let last = family.members().last().and_then(|m| m.time.value(p));
                if !family.is_empty()
                    && family.members().iter().all(|m| m.time.value(p).is_some())
                    && last.is_some_and(|l| t > l)
                {
                    truncated += 1;
                }
            }
        }
    }
    let off = tau.path_offset();
    let mut thin = RandomTime::with_labels(*tau.grid(), thin_v, thin_l)?.with_offset(off);
    let mut thick = RandomTime::with_labels(*tau.grid(), thick_v, thick_l)?.with_offset(off);
    if let Some(e) = tau.exact() {
        let pick = |keep: &RandomTime| {
            (0..n_paths)
                .map(|p| {
                    if keep.value(p).is_some() {
                        e[p]
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        };
        thin = thin.clone().with_exact(pick(&thin))?;
        thick = thick.clone().with_exact(pick(&thick))?;
    }
    Ok(Decomposition {
        tau: tau.clone(),
        thin,
        thick,
        matched,
        truncated,
    })
}

/// Number of paths violating `τ = τ₁ ∧ τ₂` with `{τ₁ < ∞} ∩ {τ₂ < ∞} = ∅`.
pub fn decomposition_violations(tau: &RandomTime, thin: &RandomTime, thick: &RandomTime) -> usize {
    (0..tau.n_paths())
        .filter(|&p| {
            let (t, a, b) = (tau.value(p), thin.value(p), thick.value(p));
            let both = a.is_some() && b.is_some();
            let min = match (a, b) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, None) => x,
                (None, y) => y,
            };
            both || min != t
        })
        .count()
}

/// Collision frequencies `P(τ = T_n < ∞)` per family member.
#[derive(Clone, Debug, PartialEq)]
pub struct AvoidanceReport {
    pub per_member: Vec<f64>,
    pub aggregate: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Whether pre-snap continuous values were compared (otherwise grid indices).
    pub used_exact: bool,
}

/// Frequency of `{τ = T_n < ∞}` per member and in aggregate, checked against
/// `tolerance`. Pre-snap values are compared when both sides carry them.
pub fn avoidance_rate(
    tau: &RandomTime,
    family: &StoppingFamily,
    tolerance: f64,
) -> Result<AvoidanceReport> {
    if !(tolerance >= 0.0) {
        return Err(invalid("tie tolerance must be >= 0"));
    }
    let n_paths = tau.n_paths() as f64;
    let mut per_member = Vec::with_capacity(family.len());
    let mut any = vec![false; tau.n_paths()];
    let mut used_exact = !family.is_empty();
    for m in family.members() {
        tau.check_compatible(&m.time)?;
        let exact = tau.exact().zip(m.time.exact());
        used_exact &= exact.is_some();
        let mut hits = 0usize;
        for p in 0..tau.n_paths() {
            let hit = match exact {
                Some((a, b)) => a[p].is_finite() && a[p] == b[p],
                None => tau.value(p).is_some() && tau.value(p) == m.time.value(p),
            };
            if hit {
                hits += 1;
                any[p] = true;
            }
        }
        per_member.push(hits as f64 / n_paths);
    }
    let aggregate = any.iter().filter(|&&h| h).count() as f64 / n_paths;
    Ok(AvoidanceReport {
        per_member,
        aggregate,
        tolerance,
        pass: aggregate <= tolerance,
        used_exact,
    })
}
