mod common;

use entropy_mp::emp::{compute_zh, lift_graph, posterior_entropy, WeightedGraph};
use entropy_mp::graph::make_schedule;
use entropy_mp::oracle::{
    enumerate_entropy, enumerate_h, enumerate_marginal, enumerate_z, floored_relative_error, relative_error,
};
use entropy_mp::propagation::{run, RunOptions};
use entropy_mp::semiring::{Boolean, Entropy, MaxProduct, SumProduct};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn two_pass() -> RunOptions {
    RunOptions {
        two_pass: true,
        rescale: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn z_h_and_marginals_match_enumeration(seed in any::<u64>()) {
        let w = common::weighted_tree(seed);
        let g = w.graph();
        let zh = compute_zh(&w, None, false).unwrap();
        prop_assert!(relative_error(zh.z, enumerate_z(g).unwrap()) <= TOL);
        prop_assert!(relative_error(zh.h, enumerate_h(g, w.companions()).unwrap()) <= TOL);

        let p = run(g, &SumProduct, 0, two_pass()).unwrap();
        for n in 0..g.num_variables() {
            let exact = enumerate_marginal(g, n).unwrap();
            for (a, b) in p.marginal(n).unwrap().values.iter().zip(&exact) {
                prop_assert!(relative_error(*a, *b) <= TOL);
            }
        }

        let logged = WeightedGraph::with_log2(g.clone()).unwrap();
        let bits = posterior_entropy(&logged, None, false).unwrap().entropy_bits.unwrap();
        prop_assert!(floored_relative_error(bits, enumerate_entropy(g).unwrap()) <= TOL);
        let bound: f64 = g.variables().iter().map(|v| (v.cardinality as f64).log2()).sum();
        prop_assert!(bits >= 0.0 && bits <= bound + 1e-9);
    }

    #[test]
    fn every_root_gives_the_same_totals(seed in any::<u64>()) {
        let w = common::weighted_tree(seed);
        let base = compute_zh(&w, Some(0), false).unwrap();
        for root in 1..w.graph().num_variables() {
            let r = compute_zh(&w, Some(root), false).unwrap();
            prop_assert!(relative_error(r.z, base.z) <= TOL);
            prop_assert!(relative_error(r.h, base.h) <= TOL);
        }
        let g = w.graph();
        let mp0 = run(g, &MaxProduct, 0, RunOptions::default()).unwrap().total(&MaxProduct).weight;
        let mp_last = run(g, &MaxProduct, g.num_variables() - 1, RunOptions::default()).unwrap().total(&MaxProduct).weight;
        prop_assert!(relative_error(mp0, mp_last) <= TOL);
    }

    #[test]
    fn score_component_shadows_sum_product(seed in any::<u64>()) {
        let w = common::weighted_tree(seed);
        let g = w.graph();
        let lifted = lift_graph(&w);
        let real = run(g, &SumProduct, 0, two_pass()).unwrap();
        let pair = run(&lifted, &Entropy, 0, two_pass()).unwrap();
        for &msg in make_schedule(g, 0, true).unwrap().iter() {
            let a = real.messages.get(msg).unwrap();
            let b = pair.messages.get(msg).unwrap();
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(x.to_bits(), y.score.to_bits());
            }
        }
    }

    #[test]
    fn rescaling_preserves_results(seed in any::<u64>()) {
        let w = common::weighted_tree(seed);
        let plain = compute_zh(&w, None, false).unwrap();
        let scaled = compute_zh(&w, None, true).unwrap();
        prop_assert!(relative_error(scaled.true_z(), plain.z) <= 1e-6);
        prop_assert!(relative_error(scaled.h_over_z(), plain.h_over_z()) <= TOL);
    }

    #[test]
    fn scaling_a_factor_leaves_entropy_unchanged(seed in any::<u64>(), which in any::<prop::sample::Index>(), up in any::<bool>()) {
        let w = common::weighted_tree(seed);
        let g = w.graph();
        let m = which.index(g.num_factors());
        let c = if up { 1e6 } else { 1e-6 };
        let scaled = common::scale_factor(g, m, c);

        // Companions held fixed: Z and H both pick up the factor c.
        let fixed = WeightedGraph::new(scaled.clone(), w.companions().to_vec()).unwrap();
        let a = compute_zh(&w, None, false).unwrap();
        let b = compute_zh(&fixed, None, false).unwrap();
        prop_assert!(relative_error(b.z, c * a.z) <= TOL);
        prop_assert!(relative_error(b.h, c * a.h) <= TOL);
        prop_assert!(relative_error(b.h_over_z(), a.h_over_z()) <= TOL);

        let before = posterior_entropy(&WeightedGraph::with_log2(g.clone()).unwrap(), None, false).unwrap();
        let after = posterior_entropy(&WeightedGraph::with_log2(scaled).unwrap(), None, false).unwrap();
        prop_assert!((before.entropy_bits.unwrap() - after.entropy_bits.unwrap()).abs() <= TOL);
    }

    #[test]
    fn forests_match_enumeration(seed in any::<u64>()) {
        let g = common::forest(seed);
        let p = run(&g, &SumProduct, g.num_variables() - 1, two_pass()).unwrap();
        prop_assert!(relative_error(p.total(&SumProduct).weight, enumerate_z(&g).unwrap()) <= TOL);
        for n in 0..g.num_variables() {
            let exact = enumerate_marginal(&g, n).unwrap();
            for (a, b) in p.marginal(n).unwrap().values.iter().zip(&exact) {
                prop_assert!(relative_error(*a, *b) <= TOL);
            }
        }
        let b = g.map_tables(|_, _, &v| v != 0.0);
        prop_assert!(run(&b, &Boolean, 0, RunOptions::default()).unwrap().total(&Boolean).weight);
    }
}

#[test]
fn zero_entries_are_absorbed() {
    use entropy_mp::graph::{Factor, FactorGraph, Variable};
    let g = FactorGraph::new(
        vec![Variable::new("a", 3), Variable::new("b", 2)],
        vec![
            Factor::new("p", vec![0], vec![0.0, 0.4, 0.6]),
            Factor::new("q", vec![0, 1], vec![0.3, 0.0, 1.0, 0.0, 0.5, 0.5]),
        ],
    )
    .unwrap();
    let w = WeightedGraph::with_log2(g.clone()).unwrap();
    let zh = compute_zh(&w, Some(1), false).unwrap();
    assert!(relative_error(zh.z, enumerate_z(&g).unwrap()) <= TOL);
    assert!(relative_error(zh.h, enumerate_h(&g, w.companions()).unwrap()) <= TOL);
    let bits = posterior_entropy(&w, None, false).unwrap().entropy_bits.unwrap();
    assert!((bits - enumerate_entropy(&g).unwrap()).abs() <= TOL);
}
