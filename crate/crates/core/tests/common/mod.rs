#![allow(dead_code)]

use entropy_mp::applications::{LinearSet, PolyTable, PolynomialFamily};
use entropy_mp::emp::WeightedGraph;
use entropy_mp::graph::FactorGraph;
use entropy_mp::random::{random_companions, random_tree, TreeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree with random positive companions.
pub fn weighted_tree(seed: u64) -> WeightedGraph {
    let mut r = rng(seed);
    let g = random_tree(&mut r, &TreeConfig::default());
    let c = random_companions(&mut r, &g, 0.1, 2.0);
    WeightedGraph::new(g, c).unwrap()
}

pub fn forest(seed: u64) -> FactorGraph {
    let cfg = TreeConfig {
        split_probability: 0.3,
        ..TreeConfig::default()
    };
    random_tree(&mut rng(seed), &cfg)
}

/// Copy of `g` with every entry of factor `m` multiplied by `c`.
pub fn scale_factor(g: &FactorGraph, m: usize, c: f64) -> FactorGraph {
    g.map_tables(|k, _, &v| if k == m { v * c } else { v })
}

fn table<R: Rng>(r: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| r.gen_range(lo..=hi)).collect()
}

/// Polynomial-entry family on a random tree with nonnegative coefficients,
/// plus a parameter point in its interior.
pub fn polynomial_instance(seed: u64) -> (PolynomialFamily, Vec<f64>) {
    let mut r = rng(seed);
    let g = random_tree(&mut r, &TreeConfig::default());
    let dim = r.gen_range(1..=3);
    let tables = g
        .factors()
        .iter()
        .map(|f| {
            let len = f.values.len();
            PolyTable {
                constant: table(&mut r, len, 0.05, 0.5),
                linear: (0..dim).map(|_| table(&mut r, len, 0.0, 0.3)).collect(),
                quadratic: (0..dim).map(|_| table(&mut r, len, 0.0, 0.3)).collect(),
            }
        })
        .collect();
    let theta = table(&mut r, dim, 0.1, 0.5);
    (PolynomialFamily::new(g, dim, tables).unwrap(), theta)
}

/// Frozen linear-form tables on a random tree.
pub fn linear_instance(seed: u64) -> LinearSet {
    let mut r = rng(seed);
    let g = random_tree(&mut r, &TreeConfig::default());
    let dim = r.gen_range(1..=3);
    let u = g.factors().iter().map(|f| table(&mut r, f.values.len(), -1.0, 1.0)).collect();
    let v = g.factors().iter().map(|f| table(&mut r, f.values.len(), 0.1, 1.0)).collect();
    let lambda = table(&mut r, dim, -2.0, 2.0);
    LinearSet::new(g, u, v, lambda).unwrap()
}

/// Random tree whose linear-form tables are all ones.
pub fn unit_linear_instance(seed: u64) -> LinearSet {
    let mut r = rng(seed);
    let g = random_tree(&mut r, &TreeConfig::default());
    let ones: Vec<Vec<f64>> = g.factors().iter().map(|f| vec![1.0; f.values.len()]).collect();
    let lambda = table(&mut r, 3, -2.0, 2.0);
    LinearSet::new(g, ones.clone(), ones, lambda).unwrap()
}
