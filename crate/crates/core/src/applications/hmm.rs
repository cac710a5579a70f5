//! Posterior state-sequence entropy of a hidden Markov model.

use serde::{Deserialize, Serialize};

use crate::emp::{posterior_entropy, EntropyResult, WeightedGraph};
use crate::error::{Error, Result};
use crate::graph::{Factor, FactorGraph, Variable};

const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// A discrete HMM together with one observed symbol sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmSpec {
    /// Initial state distribution, length S.
    pub initial: Vec<f64>,
    /// Row-stochastic S×S transition matrix, `transition[from][to]`.
    pub transition: Vec<Vec<f64>>,
    /// Row-stochastic S×O emission matrix, `emission[state][symbol]`.
    pub emission: Vec<Vec<f64>>,
    pub observations: Vec<usize>,
}

fn check_distribution(name: &str, row: &[f64], len: usize) -> Result<()> {
    if row.len() != len {
        return Err(Error::InvalidHmm(format!(
            "{name} has length {}, expected {len}",
            row.len()
        )));
    }
    if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidHmm(format!("{name} has invalid entry {v}")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::InvalidHmm(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

impl HmmSpec {
    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.emission.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.num_states();
        if s == 0 {
            return Err(Error::InvalidHmm("no states".into()));
        }
        check_distribution("initial distribution", &self.initial, s)?;
        if self.transition.len() != s {
            return Err(Error::InvalidHmm(format!(
                "transition matrix has {} rows, expected {s}",
                self.transition.len()
            )));
        }
        for (i, row) in self.transition.iter().enumerate() {
            check_distribution(&format!("transition row {i}"), row, s)?;
        }
        if self.emission.len() != s {
            return Err(Error::InvalidHmm(format!(
                "emission matrix has {} rows, expected {s}",
                self.emission.len()
            )));
        }
        let alphabet = self.alphabet_size();
        if alphabet == 0 {
            return Err(Error::InvalidHmm("empty observation alphabet".into()));
        }
        for (i, row) in self.emission.iter().enumerate() {
            check_distribution(&format!("emission row {i}"), row, alphabet)?;
        }
        if self.observations.is_empty() {
            return Err(Error::InvalidHmm("observation sequence is empty".into()));
        }
        if let Some((t, &y)) = self
            .observations
            .iter()
            .enumerate()
            .find(|(_, &y)| y >= alphabet)
        {
            return Err(Error::InvalidHmm(format!(
                "observation {t} is symbol {y}, alphabet has {alphabet} symbols"
            )));
        }
        Ok(())
    }
}

/// Builds the hidden-state chain with `g = log₂ f` companions.
///
/// Variables `x1..xT` have S states. The first factor is `π(x₁)·B(x₁, y₁)`;
/// factor `t` is `A(x_{t−1}, x_t)·B(x_t, y_t)` over `(x_{t−1}, x_t)`.
pub fn hmm_to_weighted_graph(h: &HmmSpec) -> Result<WeightedGraph> {
    h.validate()?;
    let s = h.num_states();
    let t_len = h.len();
    let variables = (1..=t_len).map(|t| Variable::new(format!("x{t}"), s)).collect();
    let mut factors = Vec::with_capacity(t_len);
    let y0 = h.observations[0];
    factors.push(Factor::new(
        "init",
        vec![0],
        (0..s).map(|i| h.initial[i] * h.emission[i][y0]).collect(),
    ));
    for (t, &y) in h.observations.iter().enumerate().skip(1) {
        let mut table = Vec::with_capacity(s * s);
        for prev in 0..s {
            for cur in 0..s {
                table.push(h.transition[prev][cur] * h.emission[cur][y]);
            }
        }
        factors.push(Factor::new(format!("step{}", t + 1), vec![t - 1, t], table));
    }
    WeightedGraph::with_log2(FactorGraph::new(variables, factors)?)
}

/// `H(X | Y = y)` in bits for the HMM's observation sequence.
pub fn hmm_entropy(h: &HmmSpec, rescale: bool) -> Result<EntropyResult> {
    let w = hmm_to_weighted_graph(h)?;
    posterior_entropy(&w, None, rescale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(len: usize) -> HmmSpec {
        HmmSpec {
            initial: vec![0.5, 0.5],
            transition: vec![vec![0.5, 0.5]; 2],
            emission: vec![vec![0.5, 0.5]; 2],
            observations: (0..len).map(|t| t % 2).collect(),
        }
    }

    fn deterministic() -> HmmSpec {
        HmmSpec {
            initial: vec![1.0, 0.0],
            transition: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            emission: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            observations: vec![0, 0, 0],
        }
    }

    #[test]
    fn uniform_chain_tables() {
        let w = hmm_to_weighted_graph(&uniform(5)).unwrap();
        assert_eq!(w.graph().num_variables(), 5);
        for f in w.graph().factors() {
            assert!(f.values.iter().all(|&v| v == 0.25));
        }
        let r = hmm_entropy(&uniform(5), false).unwrap();
        assert!((r.entropy_bits.unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn single_state_has_zero_entropy() {
        let h = HmmSpec {
            initial: vec![1.0],
            transition: vec![vec![1.0]],
            emission: vec![vec![0.3, 0.7]],
            observations: vec![1, 0, 1, 1],
        };
        let w = hmm_to_weighted_graph(&h).unwrap();
        assert!(w.graph().factors().iter().all(|f| f.values.len() == 1));
        assert_eq!(hmm_entropy(&h, false).unwrap().entropy_bits, Some(0.0));
    }

    #[test]
    fn deterministic_chain() {
        let w = hmm_to_weighted_graph(&deterministic()).unwrap();
        assert_eq!(w.graph().factor(0).values, vec![1.0, 0.0]);
        assert_eq!(w.graph().factor(1).values, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(hmm_entropy(&deterministic(), false).unwrap().entropy_bits, Some(0.0));
    }

    #[test]
    fn impossible_observations() {
        let mut h = deterministic();
        h.observations = vec![0, 1];
        assert_eq!(hmm_entropy(&h, false).unwrap_err().kind(), "ZeroEvidence");
    }

    #[test]
    fn invalid_models() {
        let mut h = uniform(3);
        h.observations[1] = 2;
        assert_eq!(hmm_to_weighted_graph(&h).unwrap_err().kind(), "InvalidHmm");
        let mut h = uniform(3);
        h.transition[0] = vec![0.6, 0.6];
        assert!(h.validate().is_err());
        let mut h = uniform(3);
        h.observations.clear();
        assert!(h.validate().is_err());
    }
}
