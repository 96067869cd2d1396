//! Intervention specifications, the natural partial order on them, graph
//! mutilation (the do-operator), and interventional distribution posets.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::gaussian::{implied_distribution, GaussianDist};
use crate::graph::CausalGraph;
use crate::scm::LinearScm;

/// An atomic intervention: a finite assignment of values to distinct target
/// variables. The empty assignment is the null intervention (pure
/// observation).
///
/// Targets are kept name-sorted, so two specs are equal exactly when they
/// assign the same values to the same targets.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionSpec {
    assignments: BTreeMap<String, f64>,
}

impl InterventionSpec {
    /// Builds a normalized spec from `(target, value)` pairs.
    ///
    /// # Errors
    ///
    /// [`Error::DuplicateTarget`] when a target is listed twice;
    /// [`Error::NonFiniteValue`] for NaN/infinite values.
    pub fn new(assignments: &[(&str, f64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(target, value) in assignments {
            if !value.is_finite() {
                return Err(Error::NonFiniteValue {
                    context: format!("intervention value for {target}"),
                });
            }
            if map.insert(target.to_owned(), value).is_some() {
                return Err(Error::DuplicateTarget {
                    name: target.to_owned(),
                });
            }
        }
        Ok(InterventionSpec { assignments: map })
    }

    /// The null intervention (no targets).
    pub fn null() -> Self {
        InterventionSpec {
            assignments: BTreeMap::new(),
        }
    }

    /// True when this is the null intervention.
    pub fn is_null(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Number of targets.
    pub fn order(&self) -> usize {
        self.assignments.len()
    }

    /// Target names in sorted order.
    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.assignments.keys().map(String::as_str)
    }

    /// The assigned value for `target`, if it is one.
    pub fn value_of(&self, target: &str) -> Option<f64> {
        self.assignments.get(target).copied()
    }

    /// The full `target → value` map, name-sorted.
    pub fn assignments(&self) -> &BTreeMap<String, f64> {
        &self.assignments
    }

    /// The refinement partial order: `self ≤ other` iff every target of
    /// `self` is also a target of `other` with the same value. The null
    /// intervention is below everything.
    pub fn leq(&self, other: &InterventionSpec) -> bool {
        self.assignments
            .iter()
            .all(|(t, v)| other.assignments.get(t) == Some(v))
    }

    /// Human-readable label: `observational` for the null intervention,
    /// otherwise `do(A=1, B=0.5)` with name-sorted targets.
    pub fn label(&self) -> String {
        if self.is_null() {
            return "observational".to_owned();
        }
        let parts: Vec<String> = self
            .assignments
            .iter()
            .map(|(t, v)| format!("{t}={v}"))
            .collect();
        format!("do({})", parts.join(", "))
    }
}

impl fmt::Display for InterventionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A finite, deduplicated set of interventions that always contains the null
/// intervention, in a deterministic order with the null spec first.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionSet {
    specs: Vec<InterventionSpec>,
}

impl InterventionSet {
    /// Builds a set from arbitrary specs: duplicates collapse to their first
    /// occurrence and the null intervention is prepended when missing.
    pub fn new(specs: Vec<InterventionSpec>) -> Self {
        let mut out = vec![InterventionSpec::null()];
        for s in specs {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        InterventionSet { specs: out }
    }

    /// The singleton set `{∅}`.
    pub fn observational() -> Self {
        InterventionSet {
            specs: vec![InterventionSpec::null()],
        }
    }

    /// Enumerates the null intervention plus every intervention on at most
    /// `max_order` distinct targets, drawing values from `grid`.
    ///
    /// The order is deterministic: ∅ first, then ascending target count,
    /// then lexicographic by target names, then lexicographic by the value
    /// tuple (grid values are pre-sorted ascending and deduplicated).
    ///
    /// # Errors
    ///
    /// [`Error::NonFiniteValue`] for NaN/infinite grid values.
    pub fn enumerate(grid: &BTreeMap<String, Vec<f64>>, max_order: usize) -> Result<Self> {
        let mut targets = Vec::with_capacity(grid.len());
        for (name, values) in grid {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    context: format!("grid values for {name}"),
                });
            }
            let mut vals = values.clone();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            if !vals.is_empty() {
                targets.push((name.as_str(), vals));
            }
        }

        let mut specs = vec![InterventionSpec::null()];
        for k in 1..=max_order.min(targets.len()) {
            for subset in combinations(targets.len(), k) {
                let chosen: Vec<&(&str, Vec<f64>)> = subset.iter().map(|&i| &targets[i]).collect();
                let mut cursor = vec![0usize; k];
                loop {
                    let assignments: Vec<(&str, f64)> = chosen
                        .iter()
                        .zip(&cursor)
                        .map(|(&&(name, ref vals), &vi)| (name, vals[vi]))
                        .collect();
                    specs.push(InterventionSpec::new(&assignments)?);
                    // Advance the mixed-radix cursor, last target fastest.
                    let mut pos = k;
                    loop {
                        if pos == 0 {
                            break;
                        }
                        pos -= 1;
                        cursor[pos] += 1;
                        if cursor[pos] < chosen[pos].1.len() {
                            break;
                        }
                        cursor[pos] = 0;
                    }
                    if cursor.iter().all(|&c| c == 0) {
                        break;
                    }
                }
            }
        }
        Ok(InterventionSet::new(specs))
    }

    /// The specs, null intervention first.
    pub fn specs(&self) -> &[InterventionSpec] {
        &self.specs
    }

    /// Number of specs (always ≥ 1).
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    /// Never true: the null intervention is always present.
    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Iterates over the specs in set order.
    pub fn iter(&self) -> std::slice::Iter<'_, InterventionSpec> {
        self.specs.iter()
    }
}

/// All `k`-element index subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Applies the do-operator: every target keeps its place in the variable
/// order but loses its incoming edges and its structural equation becomes the
/// constant assigned value (noise mean = value, noise variance = 0).
/// Non-targets are untouched.
///
/// # Errors
///
/// [`Error::UnknownTarget`] when a target is not a model variable.
pub fn apply_do(scm: &LinearScm, spec: &InterventionSpec) -> Result<LinearScm> {
    let graph = scm.graph();
    let mut target_idx = Vec::with_capacity(spec.order());
    for t in spec.targets() {
        let i = graph
            .idx(t)
            .map_err(|_| Error::UnknownTarget { name: t.to_owned() })?;
        target_idx.push(i);
    }

    let kept_edges: Vec<(String, String)> = graph
        .edge_indices()
        .iter()
        .filter(|(_, to)| !target_idx.contains(to))
        .map(|&(f, t)| (graph.nodes()[f].clone(), graph.nodes()[t].clone()))
        .collect();
    let mutilated = CausalGraph::new(graph.nodes().to_vec(), kept_edges)
        .expect("mutilating a DAG cannot introduce a cycle");

    let coefficients: BTreeMap<(usize, usize), f64> = scm
        .coefficients_by_index()
        .iter()
        .filter(|((_, to), _)| !target_idx.contains(to))
        .map(|(&k, &v)| (k, v))
        .collect();

    let mut noise_mean = scm.noise_mean_slice().to_vec();
    let mut noise_var = scm.noise_var_slice().to_vec();
    for (t, &i) in spec.targets().zip(&target_idx) {
        noise_mean[i] = spec.value_of(t).expect("target came from the spec");
        noise_var[i] = 0.0;
    }

    Ok(LinearScm::from_parts(
        mutilated,
        coefficients,
        noise_mean,
        noise_var,
    ))
}

/// The set of distributions implied by an SCM under an intervention set,
/// together with the refinement partial order restricted to its entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionPoset {
    entries: Vec<(InterventionSpec, GaussianDist)>,
    relation: Vec<(usize, usize)>,
}

impl DistributionPoset {
    /// The `(intervention, implied distribution)` entries in set order
    /// (null intervention first).
    pub fn entries(&self) -> &[(InterventionSpec, GaussianDist)] {
        &self.entries
    }

    /// The materialized order relation as index pairs `(i, j)` with
    /// `entries[i].0 ≤ entries[j].0`, reflexive pairs included.
    pub fn relation(&self) -> &[(usize, usize)] {
        &self.relation
    }

    /// The distribution recorded for a spec, if present.
    pub fn distribution_for(&self, spec: &InterventionSpec) -> Option<&GaussianDist> {
        self.entries.iter().find(|(s, _)| s == spec).map(|(_, d)| d)
    }
}

/// Computes the distribution poset of `scm` under `iset`: one entry per spec
/// (mutilate, then solve exactly), plus the materialized refinement order.
///
/// # Errors
///
/// [`Error::UnknownTarget`] when any spec targets a non-variable.
pub fn implied_poset(scm: &LinearScm, iset: &InterventionSet) -> Result<DistributionPoset> {
    let mut entries = Vec::with_capacity(iset.len());
    for spec in iset.iter() {
        let mutilated = apply_do(scm, spec)?;
        entries.push((spec.clone(), implied_distribution(&mutilated)));
    }
    let mut relation = Vec::new();
    for (i, (si, _)) in entries.iter().enumerate() {
        for (j, (sj, _)) in entries.iter().enumerate() {
            if si.leq(sj) {
                relation.push((i, j));
            }
        }
    }
    Ok(DistributionPoset { entries, relation })
}
