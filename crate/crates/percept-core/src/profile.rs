//! Receiver profiles: per-variable descriptor sets (categorization),
//! causal statements over variable pairs (signification), JSON parsing with
//! full validation, and assembly of the high-level and low-level SCMs a
//! profile induces.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::intervention::InterventionSet;
use crate::scm::LinearScm;

/// Aggregation rule turning a descriptor weight matrix φ̄ into a single
/// high-level coefficient β.
///
/// `Sum` is the literal `β = Σφ̄`; `Mean` divides by the number of cause
/// descriptors (`β = Σφ̄ / n`), which is the rule under which the low-level
/// model's pushforward reproduces the high-level effect exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tau {
    Sum,
    Mean,
}

impl std::fmt::Display for Tau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tau::Sum => "sum",
            Tau::Mean => "mean",
        })
    }
}

impl std::str::FromStr for Tau {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Tau::Sum),
            "mean" => Ok(Tau::Mean),
            other => Err(Error::validation(format!(
                "unknown tau {other:?} (expected \"sum\" or \"mean\")"
            ))),
        }
    }
}

/// What a signification entry asserts about its variable pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignificationKind {
    /// A directed cause-effect claim with an optional scalar weight.
    Orientation,
    /// A full descriptor-to-descriptor weight matrix φ̄.
    Matrix,
    /// An explicit "no statement" for the pair.
    Empty,
}

/// An externally imposed edge (e.g. bylaws) that exists independently of any
/// descriptor reasoning.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumedEdge {
    pub from: String,
    pub to: String,
    /// Structural coefficient; unweighted edges default to 1.
    pub weight: Option<f64>,
}

/// One causal relational statement over an ordered variable pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Signification {
    pub from: String,
    pub to: String,
    pub kind: SignificationKind,
    /// Scalar weight for `Orientation` entries.
    pub weight: Option<f64>,
    /// `|Θ(from)| × |Θ(to)|` weights for `Matrix` entries.
    pub phi_bar: Option<Vec<Vec<f64>>>,
}

/// A finite intervention grid: values per variable plus the maximum number of
/// simultaneous targets.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionGrid {
    grids: BTreeMap<String, Vec<f64>>,
    max_order: usize,
}

impl InterventionGrid {
    /// Builds a grid from per-variable value lists.
    ///
    /// # Errors
    ///
    /// [`Error::NonFiniteValue`] for NaN/infinite values.
    pub fn new(grids: BTreeMap<String, Vec<f64>>, max_order: usize) -> Result<Self> {
        for (name, values) in &grids {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    context: format!("grid values for {name}"),
                });
            }
        }
        Ok(InterventionGrid { grids, max_order })
    }

    /// Parses the standalone grid file format
    /// `{"grids": {var: [values]}, "max_order": k}`.
    ///
    /// # Errors
    ///
    /// [`Error::SchemaError`] for malformed documents;
    /// [`Error::NonFiniteValue`] for NaN/infinite values.
    pub fn parse_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawGridFile {
            grids: BTreeMap<String, Vec<f64>>,
            max_order: usize,
        }
        let mut de = serde_json::Deserializer::from_str(text);
        let raw: RawGridFile = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
        InterventionGrid::new(raw.grids, raw.max_order)
    }

    /// Per-variable value lists.
    pub fn grids(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.grids
    }

    /// Maximum number of simultaneous targets.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Enumerates the grid into an [`InterventionSet`] (null intervention
    /// included).
    pub fn to_set(&self) -> Result<InterventionSet> {
        InterventionSet::enumerate(&self.grids, self.max_order)
    }
}

fn schema_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    Error::SchemaError {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    }
}

/// A receiver's complete interpretation bundle: variables, descriptors,
/// significations, assumed edges, noise, τ choice, and an optional
/// intervention grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverProfile {
    id: String,
    variables: Vec<String>,
    descriptors: BTreeMap<String, Vec<String>>,
    assumed_edges: Vec<AssumedEdge>,
    significations: Vec<Signification>,
    noise: BTreeMap<String, (f64, f64)>,
    tau: Tau,
    interventions: Option<InterventionGrid>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    id: String,
    variables: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    descriptors: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    assumed_edges: Vec<RawEdge>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    significations: Vec<RawSignification>,
    noise: BTreeMap<String, RawNoise>,
    tau: Tau,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interventions: Option<BTreeMap<String, serde_json::Value>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    from: String,
    to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignification {
    pair: (String, String),
    kind: SignificationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_bar: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    mean: f64,
    var: f64,
}

impl ReceiverProfile {
    /// Parses and fully validates a profile document.
    ///
    /// # Errors
    ///
    /// [`Error::SchemaError`] (with a JSON path) for structural problems —
    /// unknown fields, missing fields, wrong types; [`Error::ValidationError`]
    /// for semantic ones — undeclared variables, matrix shape mismatches,
    /// duplicate statements per unordered pair, missing or negative noise,
    /// and cycles among the asserted edges.
    pub fn parse_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let raw: RawProfile = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawProfile) -> Result<Self> {
        let mut declared = BTreeSet::new();
        for v in &raw.variables {
            if v.is_empty() {
                return Err(Error::validation("empty variable name"));
            }
            if !declared.insert(v.as_str()) {
                return Err(Error::validation(format!("duplicate variable {v:?}")));
            }
        }
        let require_declared = |name: &str, role: &str| -> Result<()> {
            if declared.contains(name) {
                Ok(())
            } else {
                Err(Error::validation(format!(
                    "{role} references undeclared variable {name:?}"
                )))
            }
        };

        for (variable, names) in &raw.descriptors {
            require_declared(variable, "descriptors")?;
            let mut seen = BTreeSet::new();
            for d in names {
                if d.is_empty() {
                    return Err(Error::validation(format!(
                        "empty descriptor name for {variable:?}"
                    )));
                }
                if !seen.insert(d.as_str()) {
                    return Err(Error::validation(format!(
                        "duplicate descriptor {d:?} for {variable:?}"
                    )));
                }
            }
        }

        let mut noise = BTreeMap::new();
        for (variable, spec) in &raw.noise {
            require_declared(variable, "noise")?;
            if !spec.mean.is_finite() || !spec.var.is_finite() {
                return Err(Error::NonFiniteValue {
                    context: format!("noise for {variable}"),
                });
            }
            if spec.var < 0.0 {
                return Err(Error::validation(format!(
                    "negative noise variance for {variable:?}"
                )));
            }
            noise.insert(variable.clone(), (spec.mean, spec.var));
        }
        for v in &raw.variables {
            if !noise.contains_key(v) {
                return Err(Error::validation(format!("missing noise for {v:?}")));
            }
        }

        let descriptor_count = |variable: &str| raw.descriptors.get(variable).map_or(0, Vec::len);

        let mut unordered_pairs = BTreeSet::new();
        let mut significations = Vec::with_capacity(raw.significations.len());
        for s in &raw.significations {
            let (from, to) = (&s.pair.0, &s.pair.1);
            require_declared(from, "signification")?;
            require_declared(to, "signification")?;
            if from == to {
                return Err(Error::validation(format!(
                    "signification pair ({from}, {to}) is a self-pair"
                )));
            }
            let key = if from < to {
                (from.clone(), to.clone())
            } else {
                (to.clone(), from.clone())
            };
            if !unordered_pairs.insert(key) {
                return Err(Error::validation(format!(
                    "more than one statement for the pair ({from}, {to})"
                )));
            }
            match s.kind {
                SignificationKind::Orientation => {
                    if s.phi_bar.is_some() {
                        return Err(Error::validation(format!(
                            "signification ({from}, {to}): phi_bar is only valid for kind \"matrix\""
                        )));
                    }
                    if let Some(w) = s.weight {
                        if !w.is_finite() {
                            return Err(Error::NonFiniteValue {
                                context: format!("weight on ({from}, {to})"),
                            });
                        }
                    }
                }
                SignificationKind::Matrix => {
                    if s.weight.is_some() {
                        return Err(Error::validation(format!(
                            "signification ({from}, {to}): weight is only valid for kind \"orientation\""
                        )));
                    }
                    let phi = s.phi_bar.as_ref().ok_or_else(|| {
                        Error::validation(format!(
                            "signification ({from}, {to}): kind \"matrix\" requires phi_bar"
                        ))
                    })?;
                    let n = descriptor_count(from);
                    let m = descriptor_count(to);
                    if phi.len() != n || phi.iter().any(|row| row.len() != m) {
                        return Err(Error::validation(format!(
                            "phi_bar for ({from}, {to}) must be {n}×{m} to match the descriptor sets"
                        )));
                    }
                    if phi.iter().flatten().any(|v| !v.is_finite()) {
                        return Err(Error::NonFiniteValue {
                            context: format!("phi_bar for ({from}, {to})"),
                        });
                    }
                }
                SignificationKind::Empty => {
                    if s.weight.is_some() || s.phi_bar.is_some() {
                        return Err(Error::validation(format!(
                            "signification ({from}, {to}): kind \"empty\" carries no weight or phi_bar"
                        )));
                    }
                }
            }
            significations.push(Signification {
                from: from.clone(),
                to: to.clone(),
                kind: s.kind,
                weight: s.weight,
                phi_bar: s.phi_bar.clone(),
            });
        }

        let mut assumed_edges = Vec::with_capacity(raw.assumed_edges.len());
        for e in &raw.assumed_edges {
            require_declared(&e.from, "assumed edge")?;
            require_declared(&e.to, "assumed edge")?;
            if e.from == e.to {
                return Err(Error::validation(format!(
                    "assumed edge ({}, {}) is a self-loop",
                    e.from, e.to
                )));
            }
            if let Some(w) = e.weight {
                if !w.is_finite() {
                    return Err(Error::NonFiniteValue {
                        context: format!("weight on assumed edge ({}, {})", e.from, e.to),
                    });
                }
            }
            assumed_edges.push(AssumedEdge {
                from: e.from.clone(),
                to: e.to.clone(),
                weight: e.weight,
            });
        }

        // Every edge the profile asserts, from any source, must be unique and
        // the whole must stay acyclic.
        let mut edges = Vec::new();
        let mut seen_edges = BTreeSet::new();
        for s in &significations {
            if s.kind != SignificationKind::Empty {
                edges.push((s.from.clone(), s.to.clone()));
            }
        }
        for e in &assumed_edges {
            edges.push((e.from.clone(), e.to.clone()));
        }
        for (f, t) in &edges {
            if !seen_edges.insert((f.clone(), t.clone())) {
                return Err(Error::validation(format!(
                    "edge {f} -> {t} is asserted more than once"
                )));
            }
        }
        match CausalGraph::new(raw.variables.clone(), edges) {
            Ok(_) => {}
            Err(Error::CycleError { cycle }) => {
                return Err(Error::validation(format!(
                    "cycle among asserted edges: {}",
                    cycle.join(" -> ")
                )));
            }
            Err(other) => return Err(other),
        }

        let interventions = match &raw.interventions {
            None => None,
            Some(map) => Some(parse_embedded_grid(map, &declared)?),
        };

        Ok(ReceiverProfile {
            id: raw.id,
            variables: raw.variables,
            descriptors: raw.descriptors,
            assumed_edges,
            significations,
            noise,
            tau: raw.tau,
            interventions,
        })
    }

    /// Serializes back to the canonical document format. The result parses
    /// to a profile equal to `self`.
    pub fn to_json(&self) -> String {
        let raw = RawProfile {
            id: self.id.clone(),
            variables: self.variables.clone(),
            descriptors: self.descriptors.clone(),
            assumed_edges: self
                .assumed_edges
                .iter()
                .map(|e| RawEdge {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    weight: e.weight,
                })
                .collect(),
            significations: self
                .significations
                .iter()
                .map(|s| RawSignification {
                    pair: (s.from.clone(), s.to.clone()),
                    kind: s.kind,
                    weight: s.weight,
                    phi_bar: s.phi_bar.clone(),
                })
                .collect(),
            noise: self
                .noise
                .iter()
                .map(|(v, &(mean, var))| (v.clone(), RawNoise { mean, var }))
                .collect(),
            tau: self.tau,
            interventions: self.interventions.as_ref().map(|g| {
                let mut map: BTreeMap<String, serde_json::Value> = g
                    .grids()
                    .iter()
                    .map(|(v, vals)| (v.clone(), serde_json::json!(vals)))
                    .collect();
                map.insert("max_order".to_owned(), serde_json::json!(g.max_order()));
                map
            }),
        };
        serde_json::to_string_pretty(&raw).expect("profile serialization cannot fail")
    }

    /// Profile id.
    pub fn id(&self) -> &str {
        &self.id
    }

    /// Declared variables in declaration order.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Descriptor names Θ(variable), empty when none were declared.
    pub fn descriptors_of(&self, variable: &str) -> &[String] {
        self.descriptors.get(variable).map_or(&[], Vec::as_slice)
    }

    /// Low-level node names for one variable, `variable.descriptor` each, in
    /// descriptor order.
    pub fn descriptor_nodes_of(&self, variable: &str) -> Vec<String> {
        self.descriptors_of(variable)
            .iter()
            .map(|d| format!("{variable}.{d}"))
            .collect()
    }

    /// Variables that carry at least one descriptor, in declaration order.
    pub fn descriptor_variables(&self) -> Vec<&str> {
        self.variables
            .iter()
            .filter(|v| !self.descriptors_of(v).is_empty())
            .map(String::as_str)
            .collect()
    }

    /// The externally imposed edges.
    pub fn assumed_edges(&self) -> &[AssumedEdge] {
        &self.assumed_edges
    }

    /// The signification statements in document order.
    pub fn significations(&self) -> &[Signification] {
        &self.significations
    }

    /// Noise `(mean, var)` for a variable.
    pub fn noise_of(&self, variable: &str) -> Result<(f64, f64)> {
        self.noise
            .get(variable)
            .copied()
            .ok_or_else(|| Error::UnknownVariable {
                name: variable.to_owned(),
            })
    }

    /// The τ aggregation rule.
    pub fn tau(&self) -> Tau {
        self.tau
    }

    /// The same profile with a different τ.
    pub fn with_tau(&self, tau: Tau) -> Self {
        let mut out = self.clone();
        out.tau = tau;
        out
    }

    /// The embedded intervention grid, when the document declared one.
    pub fn intervention_grid(&self) -> Option<&InterventionGrid> {
        self.interventions.as_ref()
    }
}

fn parse_embedded_grid(
    map: &BTreeMap<String, serde_json::Value>,
    declared: &BTreeSet<&str>,
) -> Result<InterventionGrid> {
    let max_order = match map.get("max_order") {
        None => {
            return Err(Error::SchemaError {
                path: "interventions.max_order".to_owned(),
                reason: "missing field".to_owned(),
            })
        }
        Some(v) => v.as_u64().ok_or_else(|| Error::SchemaError {
            path: "interventions.max_order".to_owned(),
            reason: "expected a non-negative integer".to_owned(),
        })? as usize,
    };
    let mut grids = BTreeMap::new();
    for (key, value) in map {
        if key == "max_order" {
            continue;
        }
        if !declared.contains(key.as_str()) {
            return Err(Error::validation(format!(
                "interventions reference undeclared variable {key:?}"
            )));
        }
        let arr = value.as_array().ok_or_else(|| Error::SchemaError {
            path: format!("interventions.{key}"),
            reason: "expected an array of numbers".to_owned(),
        })?;
        let mut values = Vec::with_capacity(arr.len());
        for v in arr {
            let number = v.as_f64().ok_or_else(|| Error::SchemaError {
                path: format!("interventions.{key}"),
                reason: "expected an array of numbers".to_owned(),
            })?;
            values.push(number);
        }
        grids.insert(key.clone(), values);
    }
    InterventionGrid::new(grids, max_order)
}

/// Assembles the high-level SCM over the profile's variables: orientations
/// and assumed edges pass their weights through (default 1), matrix pairs
/// collapse to β via the profile's τ.
///
/// # Errors
///
/// [`Error::MissingDescriptors`] when a matrix pair touches a variable with
/// Θ = ∅; [`Error::CycleError`] when the asserted edges are cyclic (possible
/// only for profiles built outside [`ReceiverProfile::parse_json`], which
/// rejects cycles).
pub fn assemble_high_level(profile: &ReceiverProfile) -> Result<LinearScm> {
    let mut coefs: Vec<(String, String, f64)> = Vec::new();
    for s in profile.significations() {
        match s.kind {
            SignificationKind::Orientation => {
                coefs.push((s.from.clone(), s.to.clone(), s.weight.unwrap_or(1.0)));
            }
            SignificationKind::Matrix => {
                let beta = matrix_beta(profile, s)?;
                coefs.push((s.from.clone(), s.to.clone(), beta));
            }
            SignificationKind::Empty => {}
        }
    }
    for e in profile.assumed_edges() {
        coefs.push((e.from.clone(), e.to.clone(), e.weight.unwrap_or(1.0)));
    }

    let graph = CausalGraph::new(
        profile.variables().to_vec(),
        coefs
            .iter()
            .map(|(f, t, _)| (f.clone(), t.clone()))
            .collect::<Vec<_>>(),
    )?;
    let coef_refs: Vec<(&str, &str, f64)> = coefs
        .iter()
        .map(|(f, t, w)| (f.as_str(), t.as_str(), *w))
        .collect();
    let noise: Vec<(&str, f64, f64)> = profile
        .variables()
        .iter()
        .map(|v| {
            let (mean, var) = profile
                .noise_of(v)
                .expect("parse guarantees noise totality");
            (v.as_str(), mean, var)
        })
        .collect();
    LinearScm::new(graph, &coef_refs, &noise)
}

fn matrix_beta(profile: &ReceiverProfile, s: &Signification) -> Result<f64> {
    let phi = s
        .phi_bar
        .as_ref()
        .expect("matrix significations carry phi_bar");
    let n = profile.descriptors_of(&s.from).len();
    if n == 0 {
        return Err(Error::MissingDescriptors {
            variable: s.from.clone(),
        });
    }
    if profile.descriptors_of(&s.to).is_empty() {
        return Err(Error::MissingDescriptors {
            variable: s.to.clone(),
        });
    }
    let total: f64 = phi.iter().flatten().sum();
    Ok(match profile.tau() {
        Tau::Sum => total,
        Tau::Mean => total / n as f64,
    })
}

/// Assembles the low-level SCM over descriptor nodes (`variable.descriptor`).
/// Every matrix pair contributes the full `n × m` edge grid (zero weights
/// included); descriptors of one variable share no edges and split their
/// variable's noise equally (mean/n, var/n each).
///
/// # Errors
///
/// [`Error::MissingDescriptors`] when a matrix pair touches a variable with
/// Θ = ∅.
pub fn assemble_low_level(profile: &ReceiverProfile) -> Result<LinearScm> {
    let mut nodes: Vec<String> = Vec::new();
    let mut noise: Vec<(String, f64, f64)> = Vec::new();
    for v in profile.variables() {
        let descriptors = profile.descriptors_of(v);
        if descriptors.is_empty() {
            continue;
        }
        let (mean, var) = profile
            .noise_of(v)
            .expect("parse guarantees noise totality");
        let share = descriptors.len() as f64;
        for node in profile.descriptor_nodes_of(v) {
            nodes.push(node.clone());
            noise.push((node, mean / share, var / share));
        }
    }

    let mut coefs: Vec<(String, String, f64)> = Vec::new();
    for s in profile.significations() {
        if s.kind != SignificationKind::Matrix {
            continue;
        }
        let phi = s
            .phi_bar
            .as_ref()
            .expect("matrix significations carry phi_bar");
        let cause_nodes = profile.descriptor_nodes_of(&s.from);
        let effect_nodes = profile.descriptor_nodes_of(&s.to);
        if cause_nodes.is_empty() {
            return Err(Error::MissingDescriptors {
                variable: s.from.clone(),
            });
        }
        if effect_nodes.is_empty() {
            return Err(Error::MissingDescriptors {
                variable: s.to.clone(),
            });
        }
        for (i, cause) in cause_nodes.iter().enumerate() {
            for (j, effect) in effect_nodes.iter().enumerate() {
                coefs.push((cause.clone(), effect.clone(), phi[i][j]));
            }
        }
    }

    let graph = CausalGraph::new(
        nodes,
        coefs
            .iter()
            .map(|(f, t, _)| (f.clone(), t.clone()))
            .collect::<Vec<_>>(),
    )?;
    let coef_refs: Vec<(&str, &str, f64)> = coefs
        .iter()
        .map(|(f, t, w)| (f.as_str(), t.as_str(), *w))
        .collect();
    let noise_refs: Vec<(&str, f64, f64)> =
        noise.iter().map(|(n, m, v)| (n.as_str(), *m, *v)).collect();
    LinearScm::new(graph, &coef_refs, &noise_refs)
}
