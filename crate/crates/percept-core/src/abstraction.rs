//! τ/ω machinery: pushing low-level (descriptor) distributions forward to
//! high-level variables and verifying exact transformations numerically.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{implied_distribution, GaussianDist, Metric};
use crate::intervention::{apply_do, InterventionSet, InterventionSpec};
use crate::profile::{assemble_high_level, assemble_low_level, ReceiverProfile};

/// How a high-level intervention maps to descriptor-level targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaRule {
    /// `do(X = x) ↦ do(X.θ₁ = x/n, …, X.θₙ = x/n)` — the default, under
    /// which the descriptor sum reproduces the intervened value exactly.
    EqualSplit,
    /// `do(X = x) ↦ do(X.θ_k = x)` for the given descriptor index — puts the
    /// whole value on one descriptor, exposing transformations whose
    /// exactness depends on which low-level interventions are in scope.
    SingleDescriptor(usize),
}

/// Maps a high-level intervention to the low-level equal-split intervention:
/// each target `X = x` becomes `x/n` on every one of `X`'s `n` descriptors.
/// The null intervention maps to itself.
///
/// # Errors
///
/// [`Error::MissingDescriptors`] when a target has no descriptors.
pub fn omega_equal_split(
    spec: &InterventionSpec,
    profile: &ReceiverProfile,
) -> Result<InterventionSpec> {
    apply_omega(spec, profile, OmegaRule::EqualSplit)
}

/// [`omega_equal_split`] generalized over the mapping rule.
///
/// # Errors
///
/// [`Error::MissingDescriptors`] when a target has no descriptors;
/// [`Error::ValidationError`] when a `SingleDescriptor` index is out of range
/// for some target.
pub fn apply_omega(
    spec: &InterventionSpec,
    profile: &ReceiverProfile,
    rule: OmegaRule,
) -> Result<InterventionSpec> {
    let mut assignments: Vec<(String, f64)> = Vec::new();
    for target in spec.targets() {
        let nodes = profile.descriptor_nodes_of(target);
        if nodes.is_empty() {
            return Err(Error::MissingDescriptors {
                variable: target.to_owned(),
            });
        }
        let value = spec.value_of(target).expect("target came from the spec");
        match rule {
            OmegaRule::EqualSplit => {
                let share = value / nodes.len() as f64;
                for node in nodes {
                    assignments.push((node, share));
                }
            }
            OmegaRule::SingleDescriptor(k) => {
                let node = nodes.into_iter().nth(k).ok_or_else(|| {
                    Error::validation(format!("descriptor index {k} out of range for {target:?}"))
                })?;
                assignments.push((node, value));
            }
        }
    }
    let refs: Vec<(&str, f64)> = assignments.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    InterventionSpec::new(&refs)
}

/// Pushes a low-level distribution forward through τ: every high-level
/// variable becomes the sum of its descriptors (`mean → T·μ`,
/// `cov → T·Σ·Tᵀ` for the 0/1 aggregation matrix `T`).
///
/// # Errors
///
/// [`Error::VariableMismatch`] unless the distribution's variables are
/// exactly the profile's descriptor nodes in declaration order.
pub fn tau_pushforward(low: &GaussianDist, profile: &ReceiverProfile) -> Result<GaussianDist> {
    let mut expected: Vec<String> = Vec::new();
    for v in profile.variables() {
        expected.extend(profile.descriptor_nodes_of(v));
    }
    if low.variables() != expected.as_slice() {
        return Err(Error::VariableMismatch {
            left: low.variables().to_vec(),
            right: expected,
        });
    }

    let high_vars: Vec<String> = profile
        .descriptor_variables()
        .iter()
        .map(|v| v.to_string())
        .collect();
    let mut t = DMatrix::<f64>::zeros(high_vars.len(), expected.len());
    let mut col = 0;
    for (row, v) in high_vars.iter().enumerate() {
        for _ in profile.descriptors_of(v) {
            t[(row, col)] = 1.0;
            col += 1;
        }
    }
    let mean = &t * low.mean();
    let cov = &t * low.cov() * t.transpose();
    GaussianDist::new(high_vars, mean, cov)
}

/// One verified intervention in a [`ConsistencyReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    /// Human-readable intervention label.
    #[serde(rename = "do")]
    pub label: String,
    /// The high-level intervention this row verified.
    #[serde(skip)]
    pub spec: InterventionSpec,
    /// Distance between the τ-pushforward of the intervened low-level
    /// distribution and the intervened high-level distribution.
    pub distance: f64,
    pub pass: bool,
}

/// Numerical verdict on whether τ/ω form an exact transformation for a
/// profile over a finite intervention set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub profile: String,
    pub tau: crate::profile::Tau,
    pub metric: String,
    pub tolerance: f64,
    pub interventions: Vec<ConsistencyRow>,
    /// True iff every row passed.
    pub pass: bool,
}

/// Verifies the exact-transformation property with the default equal-split ω:
/// for every high-level intervention `i`, the τ-pushforward of the low-level
/// model under `ω(i)` must match the high-level model under `i` (marginalized
/// to the descriptor-bearing variables) within `tol`.
///
/// # Errors
///
/// Assembly errors ([`Error::MissingDescriptors`], [`Error::CycleError`])
/// propagate, as do metric errors; `tol` must be a non-negative finite
/// number.
pub fn check_exact_transformation(
    profile: &ReceiverProfile,
    iset_high: &InterventionSet,
    metric: Metric,
    tol: f64,
) -> Result<ConsistencyReport> {
    check_exact_transformation_with(profile, iset_high, metric, tol, OmegaRule::EqualSplit)
}

/// [`check_exact_transformation`] generalized over the ω rule.
pub fn check_exact_transformation_with(
    profile: &ReceiverProfile,
    iset_high: &InterventionSet,
    metric: Metric,
    tol: f64,
    rule: OmegaRule,
) -> Result<ConsistencyReport> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::validation("tolerance must be finite and >= 0"));
    }
    let low = assemble_low_level(profile)?;
    let high = assemble_high_level(profile)?;
    let push_vars: Vec<&str> = profile.descriptor_variables();

    let mut rows = Vec::with_capacity(iset_high.len());
    for spec in iset_high.iter() {
        let low_spec = apply_omega(spec, profile, rule)?;
        let pushed = tau_pushforward(&implied_distribution(&apply_do(&low, &low_spec)?), profile)?;
        let high_marginal = implied_distribution(&apply_do(&high, spec)?).marginal(&push_vars)?;
        let distance = metric.distance(&pushed, &high_marginal)?;
        rows.push(ConsistencyRow {
            label: spec.label(),
            spec: spec.clone(),
            distance,
            pass: distance <= tol,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ConsistencyReport {
        profile: profile.id().to_owned(),
        tau: profile.tau(),
        metric: metric.name().to_owned(),
        tolerance: tol,
        interventions: rows,
        pass,
    })
}
