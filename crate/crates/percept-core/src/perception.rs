//! Perception analysis: detecting when two receivers' models disagree,
//! classifying how they disagree, ranking deviation from a reference
//! receiver, and the conjunction-rule checker.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Metric;
use crate::intervention::{implied_poset, InterventionSet, InterventionSpec};
use crate::profile::{assemble_high_level, ReceiverProfile};

/// Coefficient and noise tolerances used when the perception pipeline
/// classifies disagreement kinds.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// The way two receivers' models disagree, independent of any metric or
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerceptionKind {
    /// No structural, coefficient, or noise difference.
    None,
    /// The receivers hold different causal graphs over the variables.
    Unfaithful,
    /// Same graph, but some effect magnitude β differs.
    Inconsistent,
    /// Same graph and coefficients, but the noise specifications differ.
    NoiseDivergent,
}

impl std::fmt::Display for PerceptionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PerceptionKind::None => "none",
            PerceptionKind::Unfaithful => "unfaithful",
            PerceptionKind::Inconsistent => "inconsistent",
            PerceptionKind::NoiseDivergent => "noise-divergent",
        })
    }
}

/// How per-intervention distances collapse into the aggregate d̄.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Worst-case disagreement (the default at the CLI).
    Max,
    /// Average disagreement.
    Mean,
}

impl Aggregation {
    fn apply(&self, distances: impl Iterator<Item = f64>) -> f64 {
        let values: Vec<f64> = distances.collect();
        match self {
            Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::Max => "max",
            Aggregation::Mean => "mean",
        })
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::validation(format!(
                "unknown aggregation {other:?} (expected \"max\" or \"mean\")"
            ))),
        }
    }
}

/// One evaluated intervention in a [`PerceptionReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRow {
    /// Human-readable intervention label.
    #[serde(rename = "do")]
    pub label: String,
    /// The matched intervention itself.
    #[serde(skip)]
    pub spec: InterventionSpec,
    /// Distance between the two implied distributions on the shared
    /// variables.
    pub distance: f64,
}

/// The outcome of comparing two receivers' models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerceptionReport {
    /// The two receiver ids, in argument order.
    pub receivers: (String, String),
    /// Variables both receivers model, in the first receiver's declaration
    /// order; all distances are over these.
    pub shared_variables: Vec<String>,
    pub metric: String,
    pub aggregation: Aggregation,
    pub epsilon: f64,
    /// Per-intervention distances over the matched intervention set.
    pub interventions: Vec<DistanceRow>,
    /// d̄, the declared aggregation of the listed distances.
    pub aggregate_distance: f64,
    /// True iff d̄ > ε.
    pub perception: bool,
    pub kind: PerceptionKind,
}

/// Compares the observational distributions of two receivers — perception
/// over the singleton intervention set `{∅}`.
///
/// # Errors
///
/// [`Error::NoSharedVariables`] when the profiles share no variable names;
/// [`Error::ValidationError`] unless `epsilon > 0`; assembly errors
/// propagate.
pub fn observational_perception(
    a: &ReceiverProfile,
    b: &ReceiverProfile,
    metric: Metric,
    epsilon: f64,
) -> Result<PerceptionReport> {
    causal_perception(
        a,
        b,
        &InterventionSet::observational(),
        metric,
        Aggregation::Max,
        epsilon,
    )
}

/// Compares two receivers across an intervention set: builds both implied
/// distribution posets, matches entries by identical intervention, measures
/// each matched pair on the shared variables, aggregates into d̄, and
/// classifies the kind of disagreement.
///
/// # Errors
///
/// [`Error::NoSharedVariables`] when the profiles share no variable names;
/// [`Error::ValidationError`] unless `epsilon > 0`;
/// [`Error::UnknownTarget`] when an intervention targets a variable either
/// receiver lacks; [`Error::EmptyMatchedSet`] if no interventions match
/// (unreachable when both posets come from one set, which always contains ∅);
/// assembly and metric errors propagate.
pub fn causal_perception(
    a: &ReceiverProfile,
    b: &ReceiverProfile,
    iset: &InterventionSet,
    metric: Metric,
    agg: Aggregation,
    epsilon: f64,
) -> Result<PerceptionReport> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::validation("epsilon must be > 0"));
    }
    let shared: Vec<String> = a
        .variables()
        .iter()
        .filter(|v| b.variables().contains(v))
        .cloned()
        .collect();
    if shared.is_empty() {
        return Err(Error::NoSharedVariables);
    }
    let shared_refs: Vec<&str> = shared.iter().map(String::as_str).collect();

    let scm_a = assemble_high_level(a)?;
    let scm_b = assemble_high_level(b)?;
    let poset_a = implied_poset(&scm_a, iset)?;
    let poset_b = implied_poset(&scm_b, iset)?;

    let mut rows = Vec::with_capacity(iset.len());
    for (spec, dist_a) in poset_a.entries() {
        let Some(dist_b) = poset_b.distribution_for(spec) else {
            continue;
        };
        let distance = metric.distance(
            &dist_a.marginal(&shared_refs)?,
            &dist_b.marginal(&shared_refs)?,
        )?;
        rows.push(DistanceRow {
            label: spec.label(),
            spec: spec.clone(),
            distance,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyMatchedSet);
    }

    let aggregate_distance = agg.apply(rows.iter().map(|r| r.distance));
    Ok(PerceptionReport {
        receivers: (a.id().to_owned(), b.id().to_owned()),
        shared_variables: shared,
        metric: metric.name().to_owned(),
        aggregation: agg,
        epsilon,
        interventions: rows,
        aggregate_distance,
        perception: aggregate_distance > epsilon,
        kind: classify_kind(a, b, CLASSIFY_TOL, CLASSIFY_TOL)?,
    })
}

/// Classifies how two receivers disagree, independent of metric,
/// aggregation, and ε: different node or labeled edge sets → `Unfaithful`;
/// same graph but some coefficient gap beyond `tol_coef` → `Inconsistent`;
/// same graph and coefficients but noise gaps beyond `tol_noise` →
/// `NoiseDivergent`; otherwise `None`.
///
/// # Errors
///
/// [`Error::ValidationError`] unless both tolerances are `> 0`; assembly
/// errors propagate for profiles whose matrix pairs lack descriptors.
pub fn classify_kind(
    a: &ReceiverProfile,
    b: &ReceiverProfile,
    tol_coef: f64,
    tol_noise: f64,
) -> Result<PerceptionKind> {
    if tol_coef.is_nan() || tol_coef <= 0.0 || tol_noise.is_nan() || tol_noise <= 0.0 {
        return Err(Error::validation("classification tolerances must be > 0"));
    }
    let scm_a = assemble_high_level(a)?;
    let scm_b = assemble_high_level(b)?;

    let nodes_a: BTreeSet<&String> = scm_a.graph().nodes().iter().collect();
    let nodes_b: BTreeSet<&String> = scm_b.graph().nodes().iter().collect();
    let edges_a: BTreeSet<(&str, &str)> = scm_a.graph().edges().collect();
    let edges_b: BTreeSet<(&str, &str)> = scm_b.graph().edges().collect();
    if nodes_a != nodes_b || edges_a != edges_b {
        return Ok(PerceptionKind::Unfaithful);
    }

    for (from, to) in &edges_a {
        let ca = scm_a
            .coefficient(from, to)
            .expect("edge comes from the graph");
        let cb = scm_b.coefficient(from, to).expect("edge sets are equal");
        if (ca - cb).abs() > tol_coef {
            return Ok(PerceptionKind::Inconsistent);
        }
    }

    for node in &nodes_a {
        let (ma, va) = (scm_a.noise_mean_of(node)?, scm_a.noise_var_of(node)?);
        let (mb, vb) = (scm_b.noise_mean_of(node)?, scm_b.noise_var_of(node)?);
        if (ma - mb).abs() > tol_noise || (va - vb).abs() > tol_noise {
            return Ok(PerceptionKind::NoiseDivergent);
        }
    }

    Ok(PerceptionKind::None)
}

/// One receiver's deviation from the reference in a [`PibReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PibRow {
    pub id: String,
    pub aggregate_distance: f64,
    pub kind: PerceptionKind,
}

/// Perception-induced deviation of each receiver from a designated
/// reference, ranked worst-first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PibReport {
    pub reference: String,
    pub metric: String,
    pub aggregation: Aggregation,
    pub epsilon: f64,
    /// Sorted by aggregate distance descending, ties by id ascending.
    pub rows: Vec<PibRow>,
}

/// Runs [`causal_perception`] of every receiver in `others` against
/// `reference` and ranks the results by aggregate distance (descending,
/// ties broken by id).
///
/// # Errors
///
/// [`Error::ValidationError`] when `others` is empty or `epsilon ≤ 0`;
/// everything [`causal_perception`] can raise propagates.
pub fn pib_report(
    reference: &ReceiverProfile,
    others: &[&ReceiverProfile],
    iset: &InterventionSet,
    metric: Metric,
    agg: Aggregation,
    epsilon: f64,
) -> Result<PibReport> {
    if others.is_empty() {
        return Err(Error::validation("pib needs at least one other receiver"));
    }
    let mut rows = Vec::with_capacity(others.len());
    for other in others {
        let report = causal_perception(reference, other, iset, metric, agg, epsilon)?;
        rows.push(PibRow {
            id: other.id().to_owned(),
            aggregate_distance: report.aggregate_distance,
            kind: report.kind,
        });
    }
    rows.sort_by(|x, y| {
        y.aggregate_distance
            .total_cmp(&x.aggregate_distance)
            .then_with(|| x.id.cmp(&y.id))
    });
    Ok(PibReport {
        reference: reference.id().to_owned(),
        metric: metric.name().to_owned(),
        aggregation: agg,
        epsilon,
        rows,
    })
}

/// Verdict of the conjunction-rule check: a joint event may never be more
/// probable than either of its constituents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FallacyVerdict {
    pub p_joint: f64,
    pub p_a: f64,
    pub p_b: f64,
    /// True iff `p_joint > min(p_a, p_b)`.
    pub violated: bool,
    /// `p_joint − min(p_a, p_b)`; positive exactly when violated.
    pub margin: f64,
}

/// Checks the extension rule `P(A ∩ B) ≤ min(P(A), P(B))`.
///
/// # Errors
///
/// [`Error::OutOfRangeProbability`] for any input outside `[0, 1]`.
pub fn check_conjunction(p_joint: f64, p_a: f64, p_b: f64) -> Result<FallacyVerdict> {
    for (name, value) in [("p_joint", p_joint), ("p_a", p_a), ("p_b", p_b)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRangeProbability {
                name: name.to_owned(),
                value,
            });
        }
    }
    let floor = p_a.min(p_b);
    Ok(FallacyVerdict {
        p_joint,
        p_a,
        p_b,
        violated: p_joint > floor,
        margin: p_joint - floor,
    })
}
