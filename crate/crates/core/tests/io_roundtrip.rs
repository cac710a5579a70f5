mod common;

use entropy_mp::io::{parse_graph_str, Model, ParametricSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_documents_round_trip(seed in any::<u64>(), exponent in -300i32..300) {
        let w = common::weighted_tree(seed);
        let (graph, companions) = w.into_parts();
        // Exercise values far from 1 and with long mantissas.
        let graph = graph.map_tables(|m, i, &v| v * 10f64.powi(exponent) / (1.0 + (m + i) as f64 / 7.0));
        let model = Model { graph, companions: Some(companions), parametric: None };
        let back = parse_graph_str(&model.to_json()).unwrap();
        prop_assert_eq!(&back, &model);
        for (a, b) in back.graph.factors().iter().zip(model.graph.factors()) {
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn parametric_blocks_round_trip(seed in any::<u64>()) {
        let (family, _) = common::polynomial_instance(seed);
        let model = Model {
            graph: family.structure().clone(),
            companions: None,
            parametric: Some(ParametricSpec::Polynomial(family)),
        };
        prop_assert_eq!(parse_graph_str(&model.to_json()).unwrap(), model);

        let set = common::linear_instance(seed);
        let model = Model {
            graph: set.graph().clone(),
            companions: None,
            parametric: Some(ParametricSpec::Linear(set)),
        };
        prop_assert_eq!(parse_graph_str(&model.to_json()).unwrap(), model);
    }
}
