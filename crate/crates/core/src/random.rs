//! Seeded random instances for cross-checks and tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::applications::HmmSpec;
use crate::emp::Companion;
use crate::graph::{Factor, FactorGraph, Variable};

/// Shape limits for [`random_tree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub max_variables: usize,
    pub max_cardinality: usize,
    pub max_scope: usize,
    /// Cardinalities are shrunk until the joint assignment count fits.
    pub max_assignments: usize,
    /// Chance that a variable gets an extra unary factor.
    pub unary_probability: f64,
    /// Chance that a variable starts a new connected component.
    pub split_probability: f64,
    /// Range of table entries.
    pub value_range: (f64, f64),
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_variables: 10,
            max_cardinality: 4,
            max_scope: 3,
            max_assignments: 1 << 16,
            unary_probability: 0.5,
            split_probability: 0.0,
            value_range: (0.05, 1.0),
        }
    }
}

/// A random acyclic factor graph (a forest when `split_probability > 0`).
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, cfg: &TreeConfig) -> FactorGraph<f64> {
    let n = rng.gen_range(1..=cfg.max_variables.max(1));
    let mut cards: Vec<usize> = (0..n)
        .map(|_| rng.gen_range(1..=cfg.max_cardinality.max(1)))
        .collect();
    while cards.iter().product::<usize>() > cfg.max_assignments {
        let (i, _) = cards
            .iter()
            .enumerate()
            .max_by_key(|(_, &c)| c)
            .expect("non-empty");
        cards[i] -= 1;
    }

    let mut scopes: Vec<Vec<usize>> = Vec::new();
    let mut covered = vec![false; n];
    for i in 1..n {
        if rng.gen_bool(cfg.split_probability) {
            continue;
        }
        let growable: Vec<usize> = (0..scopes.len())
            .filter(|&s| scopes[s].len() >= 2 && scopes[s].len() < cfg.max_scope)
            .collect();
        if !growable.is_empty() && rng.gen_bool(0.3) {
            let s = *growable.choose(rng).unwrap();
            scopes[s].push(i);
        } else {
            let parent = rng.gen_range(0..i);
            scopes.push(vec![parent, i]);
            covered[parent] = true;
        }
        covered[i] = true;
    }
    for (i, c) in covered.iter().enumerate() {
        if !c || rng.gen_bool(cfg.unary_probability) {
            scopes.push(vec![i]);
        }
    }
    scopes.shuffle(rng);
    for s in scopes.iter_mut() {
        s.shuffle(rng);
    }

    let (lo, hi) = cfg.value_range;
    let factors = scopes
        .into_iter()
        .enumerate()
        .map(|(m, scope)| {
            let len: usize = scope.iter().map(|&v| cards[v]).product();
            let values = (0..len).map(|_| rng.gen_range(lo..=hi)).collect();
            Factor::new(format!("f{m}"), scope, values)
        })
        .collect();
    let variables = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| Variable::new(format!("x{i}"), c))
        .collect();
    FactorGraph::new(variables, factors).expect("generator builds valid forests")
}

/// Same topology as `g` with fresh uniform tables in `[lo, hi]`.
pub fn random_tables<R: Rng + ?Sized>(rng: &mut R, g: &FactorGraph<f64>, lo: f64, hi: f64) -> FactorGraph<f64> {
    g.map_tables(|_, _, _| rng.gen_range(lo..=hi))
}

/// Companion tables with entries uniform in `[lo, hi]`.
pub fn random_companions<R: Rng + ?Sized>(rng: &mut R, g: &FactorGraph<f64>, lo: f64, hi: f64) -> Vec<Companion> {
    g.factors()
        .iter()
        .map(|f| f.values.iter().map(|_| Some(rng.gen_range(lo..=hi))).collect())
        .collect()
}

fn random_distribution<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// An HMM with random strictly positive parameters and random observations.
pub fn random_hmm<R: Rng + ?Sized>(rng: &mut R, states: usize, alphabet: usize, len: usize) -> HmmSpec {
    HmmSpec {
        initial: random_distribution(rng, states),
        transition: (0..states).map(|_| random_distribution(rng, states)).collect(),
        emission: (0..states).map(|_| random_distribution(rng, alphabet)).collect(),
        observations: (0..len).map(|_| rng.gen_range(0..alphabet)).collect(),
    }
}
