//! JSON documents for graphs, parametric models and HMMs.
//!
//! Tables are flat lists in mixed-radix order: the first scope variable is
//! the most significant digit, the last one varies fastest.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::applications::{GradientSet, HmmSpec, LinearSet, ParametricFamily, PolyTable, PolynomialFamily};
use crate::emp::{Companion, WeightedGraph};
use crate::error::{Error, Result};
use crate::graph::{Factor, FactorGraph, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDocument {
    pub id: String,
    pub cardinality: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDocument {
    pub id: String,
    pub scope: Vec<String>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolyDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<Vec<Vec<f64>>>,
}

/// Parameter dependence of one factor. Exactly one style is used across a
/// document: `u`/`v` (linear log-gradient), `grad`, or `poly`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricFactorDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    /// `grad[j][i] = ∂p/∂Θ_j` at entry `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<PolyDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricDocument {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default)]
    pub factors: Vec<ParametricFactorDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub variables: Vec<VariableDocument>,
    pub factors: Vec<FactorDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parametric: Option<ParametricDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmDocument {
    pub states: usize,
    pub alphabet: usize,
    pub pi: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub observations: Vec<usize>,
}

/// Parameter dependence attached to a graph.
#[derive(Debug, Clone, PartialEq)]
pub enum ParametricSpec {
    Linear(LinearSet),
    Gradient(GradientSet),
    Polynomial(PolynomialFamily),
}

/// A parsed and validated graph document.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub graph: FactorGraph<f64>,
    pub companions: Option<Vec<Companion>>,
    pub parametric: Option<ParametricSpec>,
}

impl Model {
    /// The graph with its companions, or `NotEvaluable` when none were given.
    pub fn weighted(&self) -> Result<WeightedGraph> {
        match &self.companions {
            Some(c) => WeightedGraph::new(self.graph.clone(), c.clone()),
            None => Err(Error::NotEvaluable("graph has no \"g\" tables".into())),
        }
    }

    pub fn to_document(&self) -> GraphDocument {
        let g = &self.graph;
        let names = |scope: &[usize]| scope.iter().map(|&n| g.variable(n).name.clone()).collect();
        GraphDocument {
            variables: g
                .variables()
                .iter()
                .map(|v| VariableDocument {
                    id: v.name.clone(),
                    cardinality: v.cardinality,
                })
                .collect(),
            factors: g
                .factors()
                .iter()
                .enumerate()
                .map(|(m, f)| FactorDocument {
                    id: f.name.clone(),
                    scope: names(&f.scope),
                    values: f.values.clone(),
                    g: self.companions.as_ref().map(|c| c[m].clone()),
                })
                .collect(),
            parametric: self.parametric.as_ref().map(|p| parametric_document(g, p)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("documents always serialize")
    }
}

fn parametric_document(g: &FactorGraph<f64>, p: &ParametricSpec) -> ParametricDocument {
    let blank = |id: &str| ParametricFactorDocument {
        id: id.to_string(),
        u: None,
        v: None,
        grad: None,
        poly: None,
    };
    let factors = g.factors().iter().enumerate().map(|(m, f)| {
        let mut d = blank(&f.name);
        match p {
            ParametricSpec::Linear(set) => {
                d.u = Some(set.u()[m].clone());
                d.v = Some(set.v()[m].clone());
            }
            ParametricSpec::Gradient(set) => {
                d.grad = Some((0..set.dim()).map(|j| set.gradient(m, j).to_vec()).collect());
            }
            ParametricSpec::Polynomial(family) => {
                let t = &family.tables()[m];
                d.poly = Some(PolyDocument {
                    constant: Some(t.constant.clone()),
                    linear: Some(t.linear.clone()),
                    quadratic: Some(t.quadratic.clone()),
                });
            }
        }
        d
    });
    let (dim, lambda) = match p {
        ParametricSpec::Linear(set) => (set.dim(), Some(set.lambda().to_vec())),
        ParametricSpec::Gradient(set) => (set.dim(), None),
        ParametricSpec::Polynomial(family) => (family.dim(), None),
    };
    ParametricDocument {
        dim,
        lambda,
        factors: factors.collect(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(e).at(path.display().to_string()))
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_graph(path: impl AsRef<Path>) -> Result<Model> {
    parse_graph_str(&read(path.as_ref())?)
}

pub fn parse_graph_str(text: &str) -> Result<Model> {
    model_from_document(parse_json(text)?)
}

/// Where a structural error from graph construction points in the document.
fn locate(doc: &GraphDocument, err: &Error) -> String {
    let factor = |name: &str| doc.factors.iter().position(|f| f.id == name);
    let variable = |name: &str| doc.variables.iter().position(|v| v.id == name);
    match err {
        Error::CycleDetected { factor: f } => factor(f).map(|m| format!("factors[{m}]")),
        Error::ScopeMismatch { factor: f, .. } => factor(f).map(|m| format!("factors[{m}].values")),
        Error::EmptyScope(f) => factor(f).map(|m| format!("factors[{m}].scope")),
        Error::DuplicateScopeVariable { factor: f, variable: v } => factor(f).map(|m| {
            let j = doc.factors[m].scope.iter().rposition(|s| s == v).unwrap_or(0);
            format!("factors[{m}].scope[{j}]")
        }),
        Error::ZeroCardinality(v) => variable(v).map(|n| format!("variables[{n}].cardinality")),
        Error::UncoveredVariable(v) => variable(v).map(|n| format!("variables[{n}]")),
        _ => None,
    }
    .unwrap_or_else(|| "$".into())
}

pub fn model_from_document(doc: GraphDocument) -> Result<Model> {
    let mut index = HashMap::new();
    for (n, v) in doc.variables.iter().enumerate() {
        if index.insert(v.id.as_str(), n).is_some() {
            return Err(Error::Parse(format!("duplicate variable id {:?}", v.id)).at(format!("variables[{n}].id")));
        }
    }
    let mut seen = HashMap::new();
    let mut factors = Vec::with_capacity(doc.factors.len());
    for (m, f) in doc.factors.iter().enumerate() {
        if seen.insert(f.id.as_str(), m).is_some() {
            return Err(Error::Parse(format!("duplicate factor id {:?}", f.id)).at(format!("factors[{m}].id")));
        }
        let scope = f
            .scope
            .iter()
            .enumerate()
            .map(|(j, name)| {
                index
                    .get(name.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownVariable(name.clone()).at(format!("factors[{m}].scope[{j}]")))
            })
            .collect::<Result<Vec<_>>>()?;
        factors.push(Factor::new(f.id.clone(), scope, f.values.clone()));
    }
    let variables = doc
        .variables
        .iter()
        .map(|v| Variable::new(v.id.clone(), v.cardinality))
        .collect();
    let graph = FactorGraph::new(variables, factors).map_err(|e| {
        let path = locate(&doc, &e);
        e.at(path)
    })?;
    for (m, f) in doc.factors.iter().enumerate() {
        if let Some((i, &value)) = f.values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NegativeValue {
                factor: f.id.clone(),
                index: i,
                value,
            }
            .at(format!("factors[{m}].values[{i}]")));
        }
    }

    let companions = companions_of(&doc)?;
    let parametric = match &doc.parametric {
        Some(p) => Some(parametric_of(&graph, p).map_err(|e| match e {
            e @ Error::AtPath { .. } => e,
            e => e.at("parametric"),
        })?),
        None => None,
    };
    Ok(Model {
        graph,
        companions,
        parametric,
    })
}

fn companions_of(doc: &GraphDocument) -> Result<Option<Vec<Companion>>> {
    let with_g = doc.factors.iter().filter(|f| f.g.is_some()).count();
    if with_g == 0 {
        return Ok(None);
    }
    if with_g != doc.factors.len() {
        let m = doc.factors.iter().position(|f| f.g.is_none()).unwrap_or(0);
        return Err(Error::Parse("\"g\" must be given for every factor or for none".into()).at(format!("factors[{m}].g")));
    }
    let mut out = Vec::with_capacity(doc.factors.len());
    for (m, f) in doc.factors.iter().enumerate() {
        let g = f.g.clone().unwrap_or_default();
        if g.len() != f.values.len() {
            return Err(Error::CompanionMismatch {
                factor: f.id.clone(),
                expected: f.values.len(),
                found: g.len(),
            }
            .at(format!("factors[{m}].g")));
        }
        for (i, (entry, &value)) in g.iter().zip(&f.values).enumerate() {
            if value != 0.0 && !entry.is_some_and(f64::is_finite) {
                return Err(Error::UndefinedCompanion {
                    factor: f.id.clone(),
                    index: i,
                }
                .at(format!("factors[{m}].g[{i}]")));
            }
        }
        out.push(g);
    }
    Ok(Some(out))
}

fn table(found: Option<&Vec<f64>>, len: usize, path: &str, name: &str) -> Result<Vec<f64>> {
    match found {
        None => Ok(vec![0.0; len]),
        Some(t) if t.len() == len => Ok(t.clone()),
        Some(t) => Err(Error::ScopeMismatch {
            factor: name.to_string(),
            expected: len,
            found: t.len(),
        }
        .at(path)),
    }
}

fn rows(found: Option<&Vec<Vec<f64>>>, dim: usize, len: usize, path: &str, name: &str) -> Result<Vec<Vec<f64>>> {
    match found {
        None => Ok(vec![vec![0.0; len]; dim]),
        Some(r) if r.len() != dim => Err(Error::DimensionMismatch {
            expected: dim,
            found: r.len(),
        }
        .at(path)),
        Some(r) => r
            .iter()
            .enumerate()
            .map(|(j, row)| table(Some(row), len, &format!("{path}[{j}]"), name))
            .collect(),
    }
}

#[derive(PartialEq, Clone, Copy)]
enum Style {
    Linear,
    Gradient,
    Polynomial,
}

fn parametric_of(graph: &FactorGraph<f64>, doc: &ParametricDocument) -> Result<ParametricSpec> {
    if doc.dim == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 }.at("parametric.dim"));
    }
    let mut style = None;
    let mut entries: Vec<Option<&ParametricFactorDocument>> = vec![None; graph.num_factors()];
    for (k, entry) in doc.factors.iter().enumerate() {
        let path = format!("parametric.factors[{k}]");
        let m = graph
            .factor_index(&entry.id)
            .ok_or_else(|| Error::Parse(format!("unknown factor {:?}", entry.id)).at(format!("{path}.id")))?;
        if entries[m].is_some() {
            return Err(Error::Parse(format!("factor {:?} listed twice", entry.id)).at(format!("{path}.id")));
        }
        entries[m] = Some(entry);
        let styles = [
            (entry.u.is_some() || entry.v.is_some(), Style::Linear),
            (entry.grad.is_some(), Style::Gradient),
            (entry.poly.is_some(), Style::Polynomial),
        ];
        for (present, s) in styles {
            if !present {
                continue;
            }
            match style {
                Some(existing) if existing != s => {
                    return Err(Error::Parse("parametric entries mix \"u\"/\"v\", \"grad\" and \"poly\" styles".into()).at(path));
                }
                _ => style = Some(s),
            }
        }
    }
    let dim = doc.dim;
    let factor_path = |m: usize, key: &str| {
        let k = doc.factors.iter().position(|e| e.id == graph.factor(m).name).unwrap_or(0);
        format!("parametric.factors[{k}].{key}")
    };
    match style.unwrap_or(Style::Gradient) {
        Style::Linear => {
            let lambda = doc
                .lambda
                .clone()
                .ok_or_else(|| Error::Parse("\"lambda\" is required with \"u\"/\"v\" tables".into()).at("parametric.lambda"))?;
            if lambda.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: lambda.len(),
                }
                .at("parametric.lambda"));
            }
            let mut u = Vec::new();
            let mut v = Vec::new();
            for (m, f) in graph.factors().iter().enumerate() {
                let e = entries[m];
                let len = f.values.len();
                u.push(table(e.and_then(|e| e.u.as_ref()), len, &factor_path(m, "u"), &f.name)?);
                v.push(table(e.and_then(|e| e.v.as_ref()), len, &factor_path(m, "v"), &f.name)?);
            }
            Ok(ParametricSpec::Linear(LinearSet::new(graph.clone(), u, v, lambda)?))
        }
        Style::Gradient => {
            let gradients = graph
                .factors()
                .iter()
                .enumerate()
                .map(|(m, f)| {
                    rows(
                        entries[m].and_then(|e| e.grad.as_ref()),
                        dim,
                        f.values.len(),
                        &factor_path(m, "grad"),
                        &f.name,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ParametricSpec::Gradient(GradientSet::new(graph.clone(), dim, gradients)?))
        }
        Style::Polynomial => {
            let tables = graph
                .factors()
                .iter()
                .enumerate()
                .map(|(m, f)| {
                    let len = f.values.len();
                    match entries[m].and_then(|e| e.poly.as_ref()) {
                        None => Ok(PolyTable::constant(f.values.clone(), dim)),
                        Some(p) => Ok(PolyTable {
                            constant: match &p.constant {
                                None => f.values.clone(),
                                Some(c) => table(Some(c), len, &factor_path(m, "poly.constant"), &f.name)?,
                            },
                            linear: rows(p.linear.as_ref(), dim, len, &factor_path(m, "poly.linear"), &f.name)?,
                            quadratic: rows(p.quadratic.as_ref(), dim, len, &factor_path(m, "poly.quadratic"), &f.name)?,
                        }),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ParametricSpec::Polynomial(PolynomialFamily::new(graph.clone(), dim, tables)?))
        }
    }
}

pub fn parse_hmm(path: impl AsRef<Path>) -> Result<HmmSpec> {
    parse_hmm_str(&read(path.as_ref())?)
}

pub fn parse_hmm_str(text: &str) -> Result<HmmSpec> {
    hmm_from_document(parse_json(text)?)
}

pub fn hmm_from_document(doc: HmmDocument) -> Result<HmmSpec> {
    let mismatch = |what: &str, found: usize, expected: usize, path: &str| {
        Error::InvalidHmm(format!("{what} has length {found}, expected {expected}")).at(path)
    };
    if doc.pi.len() != doc.states {
        return Err(mismatch("pi", doc.pi.len(), doc.states, "pi"));
    }
    if doc.a.len() != doc.states {
        return Err(mismatch("A", doc.a.len(), doc.states, "A"));
    }
    if doc.b.len() != doc.states {
        return Err(mismatch("B", doc.b.len(), doc.states, "B"));
    }
    for (i, row) in doc.b.iter().enumerate() {
        if row.len() != doc.alphabet {
            return Err(mismatch("emission row", row.len(), doc.alphabet, &format!("B[{i}]")));
        }
    }
    let hmm = HmmSpec {
        initial: doc.pi,
        transition: doc.a,
        emission: doc.b,
        observations: doc.observations,
    };
    hmm.validate()?;
    Ok(hmm)
}

pub fn hmm_to_document(h: &HmmSpec) -> HmmDocument {
    HmmDocument {
        states: h.num_states(),
        alphabet: h.alphabet_size(),
        pi: h.initial.clone(),
        a: h.transition.clone(),
        b: h.emission.clone(),
        observations: h.observations.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIVE_VARIABLE: &str = r#"{
        "variables": [
            {"id": "x1", "cardinality": 2}, {"id": "x2", "cardinality": 2},
            {"id": "x3", "cardinality": 2}, {"id": "x4", "cardinality": 2},
            {"id": "x5", "cardinality": 2}
        ],
        "factors": [
            {"id": "A", "scope": ["x1"], "values": [1, 1]},
            {"id": "B", "scope": ["x2"], "values": [1, 1]},
            {"id": "C", "scope": ["x1", "x2", "x3"], "values": [1, 1, 1, 1, 1, 1, 1, 1]},
            {"id": "D", "scope": ["x1", "x4"], "values": [1, 1, 1, 1]},
            {"id": "E", "scope": ["x2", "x5"], "values": [1, 1, 1, 1]}
        ]
    }"#;

    fn err(text: &str) -> Error {
        parse_graph_str(text).unwrap_err()
    }

    #[test]
    fn parses_five_variable_tree() {
        let m = parse_graph_str(FIVE_VARIABLE).unwrap();
        assert_eq!(m.graph.num_variables(), 5);
        assert_eq!(m.graph.num_factors(), 5);
        assert_eq!(m.graph.factor(2).scope, vec![0, 1, 2]);
        assert!(m.companions.is_none());
        assert!(m.parametric.is_none());
    }

    #[test]
    fn errors_carry_paths() {
        let e = err(r#"{"variables":[{"id":"a","cardinality":2}],
            "factors":[{"id":"f","scope":["a"],"values":[1,2,3]}]}"#);
        assert_eq!(e.kind(), "ScopeMismatch");
        assert_eq!(e.path(), Some("factors[0].values"));

        let e = err(r#"{"variables":[{"id":"a","cardinality":2}],
            "factors":[{"id":"f","scope":["a","b"],"values":[1,2]}]}"#);
        assert_eq!((e.kind(), e.path()), ("UnknownVariable", Some("factors[0].scope[1]")));

        let e = err(r#"{"variables":[{"id":"a","cardinality":2},{"id":"b","cardinality":2}],
            "factors":[{"id":"f","scope":["a","b"],"values":[1,1,1,1]},
                       {"id":"g","scope":["b","a"],"values":[1,1,1,1]}]}"#);
        assert_eq!((e.kind(), e.path()), ("CycleDetected", Some("factors[1]")));

        let e = err(r#"{"variables":[{"id":"a","cardinality":2}],
            "factors":[{"id":"f","scope":["a"],"values":[1,-1]}]}"#);
        assert_eq!((e.kind(), e.path()), ("NegativeValue", Some("factors[0].values[1]")));

        let e = err(r#"{"variables":[{"id":"a","cardinality":2}],
            "factors":[{"id":"f","scope":["a"],"values":[1,1],"g":[0,null]}]}"#);
        assert_eq!((e.kind(), e.path()), ("UndefinedCompanion", Some("factors[0].g[1]")));

        assert_eq!(err("{\"variables\": [").kind(), "ParseError");
        assert_eq!(err(r#"{"variables": 3, "factors": []}"#).kind(), "ParseError");
    }

    #[test]
    fn null_companion_with_zero_value() {
        let m = parse_graph_str(
            r#"{"variables":[{"id":"a","cardinality":2}],
            "factors":[{"id":"f","scope":["a"],"values":[0,1],"g":[null,0]}]}"#,
        )
        .unwrap();
        assert_eq!(m.companions.unwrap(), vec![vec![None, Some(0.0)]]);
    }

    #[test]
    fn parametric_styles() {
        let base = r#""variables":[{"id":"a","cardinality":2}],
            "factors":[{"id":"f","scope":["a"],"values":[0.5,0.5]}]"#;
        let m = parse_graph_str(&format!(
            r#"{{{base},"parametric":{{"dim":1,"lambda":[1],"factors":[{{"id":"f","u":[2,4],"v":[1,1]}}]}}}}"#
        ))
        .unwrap();
        assert!(matches!(m.parametric, Some(ParametricSpec::Linear(_))));
        let m = parse_graph_str(&format!(
            r#"{{{base},"parametric":{{"dim":1,"factors":[{{"id":"f","grad":[[1,-1]]}}]}}}}"#
        ))
        .unwrap();
        assert!(matches!(m.parametric, Some(ParametricSpec::Gradient(_))));
        let m = parse_graph_str(&format!(
            r#"{{{base},"parametric":{{"dim":1,"factors":[{{"id":"f","poly":{{"quadratic":[[1,0]]}}}}]}}}}"#
        ))
        .unwrap();
        assert!(matches!(m.parametric, Some(ParametricSpec::Polynomial(_))));

        let e = err(&format!(
            r#"{{{base},"parametric":{{"dim":1,"factors":[{{"id":"f","grad":[[1,-1,0]]}}]}}}}"#
        ));
        assert_eq!(e.path(), Some("parametric.factors[0].grad[0]"));
        let e = err(&format!(
            r#"{{{base},"parametric":{{"dim":1,"factors":[{{"id":"f","u":[1,1],"grad":[[1,1]]}}]}}}}"#
        ));
        assert_eq!(e.kind(), "ParseError");
    }

    #[test]
    fn hmm_document() {
        let h = parse_hmm_str(
            r#"{"states":2,"alphabet":2,"pi":[0.5,0.5],"A":[[0.5,0.5],[0.5,0.5]],
                "B":[[0.5,0.5],[0.5,0.5]],"observations":[0,1,0,1,1]}"#,
        )
        .unwrap();
        assert_eq!(h.len(), 5);
        assert_eq!(parse_hmm_str(&serde_json::to_string(&hmm_to_document(&h)).unwrap()).unwrap(), h);
        let e = parse_hmm_str(
            r#"{"states":2,"alphabet":2,"pi":[0.5,0.5],"A":[[0.5,0.5],[0.5,0.6]],
                "B":[[0.5,0.5],[0.5,0.5]],"observations":[0]}"#,
        )
        .unwrap_err();
        assert_eq!(e.kind(), "InvalidHmm");
    }

    #[test]
    fn round_trip_keeps_parametric_block() {
        let text = r#"{"variables":[{"id":"a","cardinality":2}],
            "factors":[{"id":"f","scope":["a"],"values":[0.1,0.30000000000000004],"g":[1e-300,-2.5]}],
            "parametric":{"dim":2,"lambda":[1,2],"factors":[{"id":"f","u":[2,4],"v":[1,1]}]}}"#;
        let m = parse_graph_str(text).unwrap();
        assert_eq!(parse_graph_str(&m.to_json()).unwrap(), m);
    }
}
