//! Causal graphs: validated DAGs over named variables, deterministic
//! topological order, Markov factorization, and d-separation queries.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A directed acyclic graph over named variables.
///
/// Nodes keep their declaration order, which breaks every tie in the
/// topological order and in rendered output, so all downstream reports are
/// reproducible byte-for-byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    /// `(parent, child)` pairs by node index, ordered.
    edges: BTreeSet<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl CausalGraph {
    /// Builds a validated graph from declared nodes and `(parent, child)`
    /// edges.
    ///
    /// # Errors
    ///
    /// [`Error::DuplicateNode`] for a repeated name,
    /// [`Error::UnknownEndpoint`] for an edge endpoint that was never
    /// declared, and [`Error::CycleError`] (listing one witness cycle) when no
    /// topological order exists.
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator,
        N::Item: Into<String>,
        E: IntoIterator,
        E::Item: Into<(String, String)>,
    {
        let nodes: Vec<String> = nodes.into_iter().map(Into::into).collect();
        let mut index = BTreeMap::new();
        for (i, name) in nodes.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::validation("node names must be non-empty"));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateNode { name: name.clone() });
            }
        }

        let mut edge_set = BTreeSet::new();
        for edge in edges {
            let (from, to) = edge.into();
            let fi = *index
                .get(&from)
                .ok_or(Error::UnknownEndpoint { name: from.clone() })?;
            let ti = *index
                .get(&to)
                .ok_or(Error::UnknownEndpoint { name: to.clone() })?;
            if fi == ti {
                return Err(Error::CycleError {
                    cycle: vec![from.clone(), from],
                });
            }
            edge_set.insert((fi, ti));
        }

        let p = nodes.len();
        let mut parents = vec![Vec::new(); p];
        let mut children = vec![Vec::new(); p];
        for &(f, t) in &edge_set {
            parents[t].push(f);
            children[f].push(t);
        }
        // BTreeSet iteration is (parent, child)-ascending, so children lists
        // are already sorted; parent lists need their own sort.
        for list in &mut parents {
            list.sort_unstable();
        }

        let topo = Self::kahn(&nodes, &parents, &children)?;

        Ok(CausalGraph {
            nodes,
            index,
            edges: edge_set,
            parents,
            children,
            topo,
        })
    }

    /// Kahn's algorithm with declaration-order tie-breaking; on failure,
    /// extracts one cycle from the leftover nodes for the error payload.
    fn kahn(
        nodes: &[String],
        parents: &[Vec<usize>],
        children: &[Vec<usize>],
    ) -> Result<Vec<usize>> {
        let p = nodes.len();
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..p).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(&next) = ready.iter().next() {
            ready.remove(&next);
            order.push(next);
            for &ch in &children[next] {
                indegree[ch] -= 1;
                if indegree[ch] == 0 {
                    ready.insert(ch);
                }
            }
        }
        if order.len() == p {
            return Ok(order);
        }

        // Walk parent links inside the leftover set until a node repeats.
        let leftover: BTreeSet<usize> = (0..p).filter(|&i| indegree[i] > 0).collect();
        let start = *leftover.iter().next().expect("leftover set is non-empty");
        let mut path = Vec::new();
        let mut seen = BTreeMap::new();
        let mut cur = start;
        let cycle = loop {
            if let Some(&pos) = seen.get(&cur) {
                // `path[pos..]` traces child-to-parent; reverse for edge order.
                let mut cyc: Vec<String> = path[pos..]
                    .iter()
                    .rev()
                    .map(|&i: &usize| nodes[i].clone())
                    .collect();
                let first = cyc[0].clone();
                cyc.push(first);
                break cyc;
            }
            seen.insert(cur, path.len());
            path.push(cur);
            cur = *parents[cur]
                .iter()
                .find(|p| leftover.contains(p))
                .expect("every leftover node keeps a leftover parent");
        };
        Err(Error::CycleError { cycle })
    }

    /// Declared node names in declaration order.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `(parent, child)` name pairs in deterministic (index) order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges
            .iter()
            .map(|&(f, t)| (self.nodes[f].as_str(), self.nodes[t].as_str()))
    }

    /// True when `name` is a declared node.
    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// True when the edge `from -> to` exists.
    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&f), Some(&t)) => self.edges.contains(&(f, t)),
            _ => false,
        }
    }

    /// Parent names of `name`, ascending by declaration index.
    pub fn parents_of(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.idx(name)?;
        Ok(self.parents[i]
            .iter()
            .map(|&p| self.nodes[p].as_str())
            .collect())
    }

    /// Child names of `name`, ascending by declaration index.
    pub fn children_of(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.idx(name)?;
        Ok(self.children[i]
            .iter()
            .map(|&c| self.nodes[c].as_str())
            .collect())
    }

    pub(crate) fn idx(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode {
                name: name.to_owned(),
            })
    }

    pub(crate) fn edge_indices(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub(crate) fn parent_indices(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn topo_indices(&self) -> &[usize] {
        &self.topo
    }

    /// Node indices of the strict descendants of `i`.
    pub(crate) fn descendant_indices(&self, i: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = self.children[i].clone();
        while let Some(v) = stack.pop() {
            if out.insert(v) {
                stack.extend(self.children[v].iter().copied());
            }
        }
        out
    }

    /// Topological order of the node names: every parent precedes its
    /// children, with ties broken by declaration order.
    pub fn topological_order(&self) -> Vec<&str> {
        self.topo.iter().map(|&i| self.nodes[i].as_str()).collect()
    }

    /// The Markov factorization of the joint distribution: one
    /// `P(child | parents)` term per node.
    pub fn factorize(&self) -> FactorizationTerms {
        let mut terms = Vec::with_capacity(self.nodes.len());
        let mut decl = Vec::with_capacity(self.nodes.len());
        for &i in self.topo.iter().rev() {
            let mut parents: Vec<String> = self.parents[i]
                .iter()
                .map(|&p| self.nodes[p].clone())
                .collect();
            parents.sort_unstable();
            terms.push((self.nodes[i].clone(), parents));
            decl.push(i);
        }
        let mut render_order: Vec<usize> = (0..terms.len()).collect();
        render_order.sort_unstable_by(|&a, &b| decl[b].cmp(&decl[a]));
        FactorizationTerms {
            terms,
            render_order,
        }
    }

    /// True iff every path between `a` and `b` is blocked given `c`
    /// (standard collider/chain/fork activation rules).
    ///
    /// # Errors
    ///
    /// [`Error::UnknownNode`] for an undeclared name and
    /// [`Error::OverlappingSets`] when the three sets are not pairwise
    /// disjoint.
    pub fn d_separated(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<bool> {
        let to_indices = |names: &[&str]| -> Result<BTreeSet<usize>> {
            names.iter().map(|n| self.idx(n)).collect()
        };
        let a = to_indices(a)?;
        let b = to_indices(b)?;
        let c = to_indices(c)?;
        for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
            if let Some(&i) = x.intersection(y).next() {
                return Err(Error::OverlappingSets {
                    name: self.nodes[i].clone(),
                });
            }
        }

        // Ancestors of the conditioning set (inclusive): a collider passes
        // the trail exactly when it lies in this set.
        let mut cond_ancestors = c.clone();
        let mut stack: Vec<usize> = c.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if cond_ancestors.insert(p) {
                    stack.push(p);
                }
            }
        }

        // Reachability over (node, arrival-direction) states.
        const FROM_CHILD: usize = 0;
        const FROM_PARENT: usize = 1;
        let p = self.nodes.len();
        let mut visited = vec![[false; 2]; p];
        let mut stack: Vec<(usize, usize)> = a.iter().map(|&i| (i, FROM_CHILD)).collect();
        while let Some((v, dir)) = stack.pop() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if b.contains(&v) {
                return Ok(false);
            }
            let conditioned = c.contains(&v);
            match dir {
                FROM_CHILD if !conditioned => {
                    for &par in &self.parents[v] {
                        stack.push((par, FROM_CHILD));
                    }
                    for &ch in &self.children[v] {
                        stack.push((ch, FROM_PARENT));
                    }
                }
                FROM_PARENT => {
                    if !conditioned {
                        for &ch in &self.children[v] {
                            stack.push((ch, FROM_PARENT));
                        }
                    }
                    if cond_ancestors.contains(&v) {
                        for &par in &self.parents[v] {
                            stack.push((par, FROM_CHILD));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(true)
    }
}

/// The terms of a Markov factorization, stored in reverse topological order.
///
/// Rendering sorts terms by the child's declaration index, descending, and
/// lists parents ascending by name — the order joint factorizations are
/// conventionally written in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorizationTerms {
    terms: Vec<(String, Vec<String>)>,
    render_order: Vec<usize>,
}

impl FactorizationTerms {
    /// `(child, parents)` pairs in reverse topological order; parent lists
    /// are ascending by name.
    pub fn terms(&self) -> &[(String, Vec<String>)] {
        &self.terms
    }

    /// Renders the factorization as a product string such as
    /// `P(Y|X_1, X_2)P(X_2|Z)P(X_1|X_2, Z)P(Z)`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for &i in &self.render_order {
            let (child, parents) = &self.terms[i];
            out.push_str("P(");
            out.push_str(child);
            if !parents.is_empty() {
                out.push('|');
                out.push_str(&parents.join(", "));
            }
            out.push(')');
        }
        out
    }
}

impl fmt::Display for FactorizationTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Convenience constructor used across the crate's tests.
#[cfg(test)]
pub(crate) fn graph_from_strs(nodes: &[&str], edges: &[(&str, &str)]) -> Result<CausalGraph> {
    CausalGraph::new(
        nodes.iter().map(|s| s.to_string()),
        edges.iter().map(|(f, t)| (f.to_string(), t.to_string())),
    )
}
