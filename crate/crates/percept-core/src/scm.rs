//! Linear-Gaussian structural causal models.
//!
//! Each variable is a linear function of its graph parents plus an
//! independent Gaussian noise term: `X_j = Σ α_i · X_pa(j)_i + U_j` with
//! `U_j ~ N(mean_j, var_j)`. The model is fully described by the graph, one
//! coefficient per edge, and per-node noise parameters.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianDist};
use crate::graph::CausalGraph;

/// A linear SCM with additive Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScm {
    graph: CausalGraph,
    /// One coefficient per `(parent, child)` edge, keyed by node index.
    coefficients: BTreeMap<(usize, usize), f64>,
    noise_mean: Vec<f64>,
    noise_var: Vec<f64>,
}

/// One local-Markov check: `variable ⫫ other | given`, evaluated as a
/// partial correlation on the analytic implied covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovEntry {
    pub variable: String,
    pub other: String,
    pub given: Vec<String>,
    pub partial_correlation: f64,
    pub pass: bool,
}

/// A vanishing-but-unimplied dependence: the edge `from -> to` exists, yet
/// the partial correlation of the pair given `from`'s parents is ~0
/// (path cancellation).
#[derive(Debug, Clone, PartialEq)]
pub struct FaithfulnessFlag {
    pub from: String,
    pub to: String,
    pub given: Vec<String>,
    pub partial_correlation: f64,
}

impl LinearScm {
    /// Builds a validated SCM.
    ///
    /// `coefficients` must carry exactly one `(parent, child, α)` entry per
    /// graph edge; `noise` exactly one `(node, mean, var)` entry per node.
    ///
    /// # Errors
    ///
    /// [`Error::ValidationError`] when the coefficient keys do not equal the
    /// edge set, a noise entry is missing/duplicated, or a variance is
    /// negative; [`Error::NonFiniteValue`] for NaN/infinite parameters.
    pub fn new(
        graph: CausalGraph,
        coefficients: &[(&str, &str, f64)],
        noise: &[(&str, f64, f64)],
    ) -> Result<Self> {
        let mut coef = BTreeMap::new();
        for &(from, to, alpha) in coefficients {
            let fi = graph.idx(from)?;
            let ti = graph.idx(to)?;
            if !alpha.is_finite() {
                return Err(Error::NonFiniteValue {
                    context: format!("coefficient {from} -> {to}"),
                });
            }
            if !graph.edge_indices().contains(&(fi, ti)) {
                return Err(Error::validation(format!(
                    "coefficient given for non-edge {from} -> {to}"
                )));
            }
            if coef.insert((fi, ti), alpha).is_some() {
                return Err(Error::validation(format!(
                    "coefficient for edge {from} -> {to} given twice"
                )));
            }
        }
        if coef.len() != graph.edge_count() {
            let missing = graph
                .edges()
                .find(|(f, t)| {
                    let key = (graph.idx(f).unwrap(), graph.idx(t).unwrap());
                    !coef.contains_key(&key)
                })
                .map(|(f, t)| format!("{f} -> {t}"))
                .unwrap_or_default();
            return Err(Error::validation(format!(
                "missing coefficient for edge {missing}"
            )));
        }

        let p = graph.node_count();
        let mut noise_mean = vec![f64::NAN; p];
        let mut noise_var = vec![f64::NAN; p];
        let mut seen = BTreeSet::new();
        for &(name, mean, var) in noise {
            let i = graph.idx(name)?;
            if !seen.insert(i) {
                return Err(Error::validation(format!("noise for {name} given twice")));
            }
            if !mean.is_finite() || !var.is_finite() {
                return Err(Error::NonFiniteValue {
                    context: format!("noise of {name}"),
                });
            }
            if var < 0.0 {
                return Err(Error::validation(format!(
                    "noise variance of {name} is negative"
                )));
            }
            noise_mean[i] = mean;
            noise_var[i] = var;
        }
        if seen.len() != p {
            let missing = graph
                .nodes()
                .iter()
                .enumerate()
                .find(|(i, _)| !seen.contains(i))
                .map(|(_, n)| n.clone())
                .unwrap_or_default();
            return Err(Error::validation(format!("missing noise for {missing}")));
        }

        Ok(LinearScm {
            graph,
            coefficients: coef,
            noise_mean,
            noise_var,
        })
    }

    /// Internal constructor for already-index-aligned parts (graph surgery).
    pub(crate) fn from_parts(
        graph: CausalGraph,
        coefficients: BTreeMap<(usize, usize), f64>,
        noise_mean: Vec<f64>,
        noise_var: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(coefficients.len(), graph.edge_count());
        debug_assert_eq!(noise_mean.len(), graph.node_count());
        debug_assert_eq!(noise_var.len(), graph.node_count());
        LinearScm {
            graph,
            coefficients,
            noise_mean,
            noise_var,
        }
    }

    /// The causal graph.
    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    /// The coefficient on `from -> to`, if that edge exists.
    pub fn coefficient(&self, from: &str, to: &str) -> Option<f64> {
        let fi = self.graph.idx(from).ok()?;
        let ti = self.graph.idx(to).ok()?;
        self.coefficients.get(&(fi, ti)).copied()
    }

    /// Noise mean of a node.
    pub fn noise_mean_of(&self, name: &str) -> Result<f64> {
        Ok(self.noise_mean[self.graph.idx(name)?])
    }

    /// Noise variance of a node.
    pub fn noise_var_of(&self, name: &str) -> Result<f64> {
        Ok(self.noise_var[self.graph.idx(name)?])
    }

    pub(crate) fn coefficients_by_index(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.coefficients
    }

    pub(crate) fn noise_mean_slice(&self) -> &[f64] {
        &self.noise_mean
    }

    pub(crate) fn noise_var_slice(&self) -> &[f64] {
        &self.noise_var
    }

    /// `(parent index, coefficient)` pairs per node, parent-ascending — the
    /// shape the forward-substitution and sampling loops want.
    pub(crate) fn parent_coefficients(&self) -> Vec<Vec<(usize, f64)>> {
        let p = self.graph.node_count();
        let mut out = vec![Vec::new(); p];
        for (&(f, t), &a) in &self.coefficients {
            out[t].push((f, a));
        }
        out
    }

    /// The exact joint distribution implied by the model.
    pub fn implied_distribution(&self) -> GaussianDist {
        gaussian::implied_distribution(self)
    }

    /// Checks the local Markov property on the analytic implied covariance:
    /// for every node `i` and every non-descendant `j ∉ pa(i)`, the partial
    /// correlation of `(i, j)` given `pa(i)` must vanish.
    ///
    /// # Errors
    ///
    /// [`Error::ValidationError`] for `tol ≤ 0`;
    /// [`Error::SingularCovariance`] when some noise variance is zero.
    pub fn verify_markov(&self, tol: f64) -> Result<Vec<MarkovEntry>> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::validation("tolerance must be positive"));
        }
        if self.noise_var.contains(&0.0) {
            return Err(Error::SingularCovariance);
        }
        let dist = self.implied_distribution();
        let nodes = self.graph.nodes();
        let mut entries = Vec::new();
        for i in 0..nodes.len() {
            let parents: Vec<usize> = self.graph.parent_indices(i).to_vec();
            let parent_set: BTreeSet<usize> = parents.iter().copied().collect();
            let descendants = self.graph.descendant_indices(i);
            let mut given: Vec<String> = parents.iter().map(|&p| nodes[p].clone()).collect();
            given.sort_unstable();
            for j in 0..nodes.len() {
                if j == i || descendants.contains(&j) || parent_set.contains(&j) {
                    continue;
                }
                let rho = gaussian::partial_correlation_by_index(&dist, i, j, &parents)?;
                entries.push(MarkovEntry {
                    variable: nodes[i].clone(),
                    other: nodes[j].clone(),
                    given: given.clone(),
                    partial_correlation: rho,
                    pass: rho.abs() <= tol,
                });
            }
        }
        Ok(entries)
    }

    /// Flags edges whose implied dependence vanishes anyway: for each edge
    /// `from -> to`, the partial correlation of `(from, to)` given `pa(from)`
    /// is computed, and values `≤ tol` in magnitude are reported
    /// (path-cancellation unfaithfulness).
    ///
    /// # Errors
    ///
    /// [`Error::ValidationError`] for `tol ≤ 0`;
    /// [`Error::SingularCovariance`] when conditioning degenerates.
    pub fn verify_faithfulness(&self, tol: f64) -> Result<Vec<FaithfulnessFlag>> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::validation("tolerance must be positive"));
        }
        let dist = self.implied_distribution();
        let nodes = self.graph.nodes();
        let mut flags = Vec::new();
        for &(f, t) in self.graph.edge_indices() {
            let parents: Vec<usize> = self.graph.parent_indices(f).to_vec();
            let rho = gaussian::partial_correlation_by_index(&dist, f, t, &parents)?;
            if rho.abs() <= tol {
                let mut given: Vec<String> = parents.iter().map(|&p| nodes[p].clone()).collect();
                given.sort_unstable();
                flags.push(FaithfulnessFlag {
                    from: nodes[f].clone(),
                    to: nodes[t].clone(),
                    given,
                    partial_correlation: rho,
                });
            }
        }
        Ok(flags)
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::{admissions_r1_scm, admissions_r2_scm};
    use super::*;
    use crate::graph::graph_from_strs;

    fn chain_abc(a_b: f64, b_c: f64, a_c: f64) -> LinearScm {
        let g = graph_from_strs(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("A", "C")]).unwrap();
        LinearScm::new(
            g,
            &[("A", "B", a_b), ("B", "C", b_c), ("A", "C", a_c)],
            &[("A", 0.0, 1.0), ("B", 0.0, 1.0), ("C", 0.0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn coefficient_keys_must_equal_edge_set() {
        let g = graph_from_strs(&["A", "B"], &[("A", "B")]).unwrap();
        let err = LinearScm::new(g.clone(), &[], &[("A", 0.0, 1.0), ("B", 0.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::ValidationError { .. }));

        let err = LinearScm::new(
            g.clone(),
            &[("A", "B", 1.0), ("B", "A", 1.0)],
            &[("A", 0.0, 1.0), ("B", 0.0, 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ValidationError { .. }));

        let err = LinearScm::new(
            g,
            &[("A", "B", f64::NAN)],
            &[("A", 0.0, 1.0), ("B", 0.0, 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { .. }));
    }

    #[test]
    fn noise_must_cover_every_node_and_be_nonnegative() {
        let g = graph_from_strs(&["A", "B"], &[("A", "B")]).unwrap();
        let err = LinearScm::new(g.clone(), &[("A", "B", 1.0)], &[("A", 0.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::ValidationError { .. }));

        let err = LinearScm::new(g, &[("A", "B", 1.0)], &[("A", 0.0, 1.0), ("B", 0.0, -0.5)])
            .unwrap_err();
        assert!(matches!(err, Error::ValidationError { .. }));
    }

    #[test]
    fn markov_entries_pass_for_screened_admissions_model() {
        let entries = admissions_r2_scm().verify_markov(1e-9).unwrap();
        let screened = entries
            .iter()
            .find(|e| e.variable == "X1" && e.other == "Z")
            .expect("X1 vs Z given its parents must be checked");
        assert_eq!(screened.given, vec!["X2"]);
        assert!(
            screened.pass,
            "partial correlation {}",
            screened.partial_correlation
        );
        assert!(entries.iter().all(|e| e.pass));
    }

    #[test]
    fn markov_check_set_excludes_parents() {
        let entries = admissions_r1_scm().verify_markov(1e-9).unwrap();
        assert!(
            !entries.iter().any(|e| e.variable == "X1" && e.other == "Z"),
            "Z is a parent of X1 in this model, so no entry may exist"
        );
        assert!(entries.iter().all(|e| e.pass));
    }

    #[test]
    fn markov_passes_for_independent_pair_with_zero_correlation() {
        let g = graph_from_strs(&["A", "B"], &[]).unwrap();
        let scm = LinearScm::new(g, &[], &[("A", 0.0, 1.0), ("B", 0.0, 1.0)]).unwrap();
        let entries = scm.verify_markov(1e-9).unwrap();
        assert_eq!(entries.len(), 2);
        for e in entries {
            assert!(e.given.is_empty());
            assert_eq!(e.partial_correlation, 0.0);
            assert!(e.pass);
        }
    }

    #[test]
    fn markov_rejects_degenerate_noise() {
        let g = graph_from_strs(&["A"], &[]).unwrap();
        let scm = LinearScm::new(g, &[], &[("A", 0.0, 0.0)]).unwrap();
        assert_eq!(
            scm.verify_markov(1e-9).unwrap_err(),
            Error::SingularCovariance
        );
    }

    #[test]
    fn exact_path_cancellation_is_flagged_at_the_cancelled_edge() {
        // A -> B -> C plus A -> C with α(A→B)·α(B→C) = −α(A→C): the direct
        // edge's correlation vanishes even though the edge is real.
        let scm = chain_abc(0.7, 0.6, -0.42);
        let flags = scm.verify_faithfulness(1e-9).unwrap();
        assert_eq!(flags.len(), 1);
        assert_eq!((flags[0].from.as_str(), flags[0].to.as_str()), ("A", "C"));
        assert!(flags[0].given.is_empty());
    }

    #[test]
    fn generic_coefficients_are_faithful() {
        let scm = chain_abc(0.7, 0.6, 0.31);
        assert!(scm.verify_faithfulness(1e-9).unwrap().is_empty());
        assert!(admissions_r1_scm()
            .verify_faithfulness(1e-9)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn single_edge_cannot_cancel() {
        let g = graph_from_strs(&["A", "B"], &[("A", "B")]).unwrap();
        let scm =
            LinearScm::new(g, &[("A", "B", 0.4)], &[("A", 0.0, 1.0), ("B", 0.0, 1.0)]).unwrap();
        assert!(scm.verify_faithfulness(1e-9).unwrap().is_empty());
    }
}
