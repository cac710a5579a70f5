//! Discrete factor graphs with dense tables.
//!
//! A [`FactorGraph`] is always validated: construction fails unless the graph
//! is a forest whose factors cover every variable. Tables are stored densely
//! in mixed-radix order with the first scope variable as the most significant
//! digit, so for a scope `(a, b)` with cardinalities `(2, 3)` the entry for
//! `a = 1, b = 2` sits at index `1·3 + 2 = 5`.

use crate::error::{Error, Result};

/// A variable with a finite domain `{0, …, cardinality − 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Self {
        Variable {
            name: name.into(),
            cardinality,
        }
    }
}

/// A factor: an ordered scope of variable indices and a dense value table.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor<T = f64> {
    pub name: String,
    pub scope: Vec<usize>,
    pub values: Vec<T>,
}

impl<T> Factor<T> {
    pub fn new(name: impl Into<String>, scope: Vec<usize>, values: Vec<T>) -> Self {
        Factor {
            name: name.into(),
            scope,
            values,
        }
    }
}

/// One variable–factor adjacency. `position` is the variable's slot in the
/// factor scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub variable: usize,
    pub factor: usize,
    pub position: usize,
}

/// A validated, acyclic factor graph whose tables hold values of type `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph<T = f64> {
    variables: Vec<Variable>,
    factors: Vec<Factor<T>>,
    edges: Vec<Edge>,
    factor_edges: Vec<Vec<usize>>,
    variable_edges: Vec<Vec<usize>>,
    component_of: Vec<usize>,
    components: usize,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

impl<T> FactorGraph<T> {
    /// Validates and indexes a factor graph.
    ///
    /// Fails with `ZeroCardinality`, `EmptyScope`, `UnknownVariable`,
    /// `DuplicateScopeVariable`, `ScopeMismatch`, `UncoveredVariable` or
    /// `CycleDetected`, checked in that order.
    pub fn new(variables: Vec<Variable>, factors: Vec<Factor<T>>) -> Result<Self> {
        for v in &variables {
            if v.cardinality == 0 {
                return Err(Error::ZeroCardinality(v.name.clone()));
            }
        }
        let nv = variables.len();
        let mut seen = vec![usize::MAX; nv];
        for (m, f) in factors.iter().enumerate() {
            if f.scope.is_empty() {
                return Err(Error::EmptyScope(f.name.clone()));
            }
            for &n in &f.scope {
                if n >= nv {
                    return Err(Error::UnknownVariable(format!(
                        "#{n} in scope of factor {:?}",
                        f.name
                    )));
                }
                if seen[n] == m {
                    return Err(Error::DuplicateScopeVariable {
                        factor: f.name.clone(),
                        variable: variables[n].name.clone(),
                    });
                }
                seen[n] = m;
            }
            let expected = table_len(f.scope.iter().map(|&n| variables[n].cardinality));
            if expected != f.values.len() {
                return Err(Error::ScopeMismatch {
                    factor: f.name.clone(),
                    expected,
                    found: f.values.len(),
                });
            }
        }

        let mut edges = Vec::new();
        let mut factor_edges = Vec::with_capacity(factors.len());
        let mut variable_edges = vec![Vec::new(); nv];
        for (m, f) in factors.iter().enumerate() {
            let mut ids = Vec::with_capacity(f.scope.len());
            for (position, &n) in f.scope.iter().enumerate() {
                let id = edges.len();
                edges.push(Edge {
                    variable: n,
                    factor: m,
                    position,
                });
                variable_edges[n].push(id);
                ids.push(id);
            }
            factor_edges.push(ids);
        }
        if let Some(n) = variable_edges.iter().position(Vec::is_empty) {
            return Err(Error::UncoveredVariable(variables[n].name.clone()));
        }

        // Nodes: variables 0..nv, factors nv..nv+nf. A forest has exactly
        // |nodes| - |components| edges, i.e. no union ever closes a loop.
        let mut dsu = DisjointSet::new(nv + factors.len());
        for e in &edges {
            if !dsu.union(e.variable, nv + e.factor) {
                return Err(Error::CycleDetected {
                    factor: factors[e.factor].name.clone(),
                });
            }
        }
        let mut component_of = vec![usize::MAX; nv];
        let mut label = vec![usize::MAX; nv + factors.len()];
        let mut components = 0;
        for (n, slot) in component_of.iter_mut().enumerate() {
            let r = dsu.find(n);
            if label[r] == usize::MAX {
                label[r] = components;
                components += 1;
            }
            *slot = label[r];
        }

        Ok(FactorGraph {
            variables,
            factors,
            edges,
            factor_edges,
            variable_edges,
            component_of,
            components,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn factors(&self) -> &[Factor<T>] {
        &self.factors
    }

    pub fn variable(&self, n: usize) -> &Variable {
        &self.variables[n]
    }

    pub fn factor(&self, m: usize) -> &Factor<T> {
        &self.factors[m]
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    /// Edge ids of factor `m`, in scope order.
    pub fn factor_edges(&self, m: usize) -> &[usize] {
        &self.factor_edges[m]
    }

    /// Edge ids incident to variable `n`, in factor declaration order.
    pub fn variable_edges(&self, n: usize) -> &[usize] {
        &self.variable_edges[n]
    }

    pub fn num_components(&self) -> usize {
        self.components
    }

    pub fn component_of(&self, n: usize) -> usize {
        self.component_of[n]
    }

    pub fn cardinality(&self, n: usize) -> usize {
        self.variables[n].cardinality
    }

    /// Cardinalities of factor `m`'s scope, in scope order.
    pub fn scope_cardinalities(&self, m: usize) -> Vec<usize> {
        self.factors[m]
            .scope
            .iter()
            .map(|&n| self.variables[n].cardinality)
            .collect()
    }

    pub fn variable_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    /// Same topology with every table entry transformed by `f(factor, index, value)`.
    pub fn map_tables<U>(&self, mut f: impl FnMut(usize, usize, &T) -> U) -> FactorGraph<U> {
        FactorGraph {
            variables: self.variables.clone(),
            factors: self
                .factors
                .iter()
                .enumerate()
                .map(|(m, fac)| Factor {
                    name: fac.name.clone(),
                    scope: fac.scope.clone(),
                    values: fac
                        .values
                        .iter()
                        .enumerate()
                        .map(|(i, v)| f(m, i, v))
                        .collect(),
                })
                .collect(),
            edges: self.edges.clone(),
            factor_edges: self.factor_edges.clone(),
            variable_edges: self.variable_edges.clone(),
            component_of: self.component_of.clone(),
            components: self.components,
        }
    }

    /// Same topology with new tables; each table must keep its length.
    pub fn with_tables<U>(&self, tables: Vec<Vec<U>>) -> Result<FactorGraph<U>> {
        if tables.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                found: tables.len(),
            });
        }
        for (f, t) in self.factors.iter().zip(&tables) {
            if f.values.len() != t.len() {
                return Err(Error::ScopeMismatch {
                    factor: f.name.clone(),
                    expected: f.values.len(),
                    found: t.len(),
                });
            }
        }
        let mut tables = tables.into_iter();
        Ok(self.map_tables_owned(|_| tables.next().unwrap()))
    }

    fn map_tables_owned<U>(&self, mut next: impl FnMut(usize) -> Vec<U>) -> FactorGraph<U> {
        FactorGraph {
            variables: self.variables.clone(),
            factors: self
                .factors
                .iter()
                .enumerate()
                .map(|(m, fac)| Factor {
                    name: fac.name.clone(),
                    scope: fac.scope.clone(),
                    values: next(m),
                })
                .collect(),
            edges: self.edges.clone(),
            factor_edges: self.factor_edges.clone(),
            variable_edges: self.variable_edges.clone(),
            component_of: self.component_of.clone(),
            components: self.components,
        }
    }
}

impl FactorGraph<f64> {
    /// Rejects negative or non-finite entries; required wherever the graph is
    /// read as an unnormalized probability distribution.
    pub fn ensure_nonnegative(&self) -> Result<()> {
        for f in &self.factors {
            if let Some((index, &value)) = f
                .values
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(Error::NegativeValue {
                    factor: f.name.clone(),
                    index,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Number of entries of a dense table over the given cardinalities.
pub fn table_len(cards: impl IntoIterator<Item = usize>) -> usize {
    cards.into_iter().product()
}

/// Mixed-radix index of an assignment, first position most significant.
pub fn assignment_index(cards: &[usize], assignment: &[usize]) -> Result<usize> {
    if cards.len() != assignment.len() {
        return Err(Error::DimensionMismatch {
            expected: cards.len(),
            found: assignment.len(),
        });
    }
    let mut index = 0;
    for (position, (&card, &value)) in cards.iter().zip(assignment).enumerate() {
        if value >= card {
            return Err(Error::OutOfDomain {
                position,
                value,
                cardinality: card,
            });
        }
        index = index * card + value;
    }
    Ok(index)
}

/// Inverse of [`assignment_index`].
pub fn decode_index(cards: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (slot, &card) in out.iter_mut().zip(cards).rev() {
        *slot = index % card;
        index /= card;
    }
    out
}

/// A directed message along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Message {
    /// `q`: variable to factor.
    ToFactor(usize),
    /// `r`: factor to variable.
    ToVariable(usize),
}

impl Message {
    pub fn edge(&self) -> usize {
        match *self {
            Message::ToFactor(e) | Message::ToVariable(e) => e,
        }
    }
}

/// Message order for one or two passes over a forest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    /// One root per connected component; `roots[0]` is the requested root.
    pub roots: Vec<usize>,
    /// Leaf-to-root messages; every message follows the messages feeding it.
    pub inward: Vec<Message>,
    /// Root-to-leaf messages; empty for a one-pass schedule.
    pub outward: Vec<Message>,
}

impl Schedule {
    pub fn root(&self) -> usize {
        self.roots[0]
    }

    pub fn len(&self) -> usize {
        self.inward.len() + self.outward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Message> {
        self.inward.iter().chain(self.outward.iter())
    }
}

#[derive(Clone, Copy)]
enum Node {
    Var(usize),
    Fac(usize),
}

/// Builds the inward (and optionally outward) message order rooted at `root`.
///
/// Components not containing `root` are rooted at their first declared
/// variable.
pub fn make_schedule<T>(g: &FactorGraph<T>, root: usize, two_pass: bool) -> Result<Schedule> {
    if root >= g.num_variables() {
        return Err(Error::UnknownVariable(format!("#{root}")));
    }
    let mut roots = vec![root];
    let mut rooted = vec![false; g.num_components()];
    rooted[g.component_of(root)] = true;
    for n in 0..g.num_variables() {
        let c = g.component_of(n);
        if !rooted[c] {
            rooted[c] = true;
            roots.push(n);
        }
    }

    let mut inward = Vec::with_capacity(g.edges().len());
    let mut outward = Vec::new();
    for &r in &roots {
        // Preorder DFS; each visited node records the edge to its parent.
        let mut order: Vec<(Node, Option<usize>)> = Vec::new();
        let mut stack = vec![(Node::Var(r), None::<usize>)];
        while let Some((node, via)) = stack.pop() {
            order.push((node, via));
            match node {
                Node::Var(n) => {
                    for &e in g.variable_edges(n).iter().rev() {
                        if Some(e) != via {
                            stack.push((Node::Fac(g.edge(e).factor), Some(e)));
                        }
                    }
                }
                Node::Fac(m) => {
                    for &e in g.factor_edges(m).iter().rev() {
                        if Some(e) != via {
                            stack.push((Node::Var(g.edge(e).variable), Some(e)));
                        }
                    }
                }
            }
        }
        // Reverse preorder puts every node after all of its descendants.
        for &(node, via) in order.iter().rev() {
            if let Some(e) = via {
                inward.push(match node {
                    Node::Var(_) => Message::ToFactor(e),
                    Node::Fac(_) => Message::ToVariable(e),
                });
            }
        }
        if two_pass {
            for &(node, via) in &order {
                if let Some(e) = via {
                    outward.push(match node {
                        Node::Var(_) => Message::ToVariable(e),
                        Node::Fac(_) => Message::ToFactor(e),
                    });
                }
            }
        }
    }
    Ok(Schedule {
        roots,
        inward,
        outward,
    })
}
