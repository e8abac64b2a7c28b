use neat_core::export::{build_formula, load_genome, parse_formula, save_genome, to_dot, FormulaStyle, Precision};
use neat_core::genome::{decode_genome, GenomeLimits};
use neat_core::inference::transform;
use neat_core::random::{random_genome, RandomGenomeSpec};
use neat_core::{Activation, Aggregation, AttributeSchema, RngKey};
use proptest::prelude::*;

fn schema() -> AttributeSchema {
    AttributeSchema::new(Activation::ALL.to_vec(), Aggregation::ALL.to_vec())
}

fn spec() -> RandomGenomeSpec {
    RandomGenomeSpec {
        num_inputs: 2,
        num_outputs: 2,
        max_hidden: 10,
        max_conns: 25,
        disabled_rate: 0.2,
        limits: GenomeLimits::new(16, 30),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn document_roundtrip(seed in any::<u64>()) {
        let s = schema();
        let g = random_genome(&spec(), &s, RngKey::from_seed(seed));
        let text = save_genome(&g, &s);
        let doc = load_genome(&text).unwrap();
        prop_assert_eq!(&doc.genome, &g);
        prop_assert_eq!(decode_genome(&doc.genome, &doc.schema).unwrap(), decode_genome(&g, &s).unwrap());
        prop_assert_eq!(save_genome(&doc.genome, &doc.schema), text);
    }

    #[test]
    fn formula_matches_forward(seed in any::<u64>(), x0 in -3.0..3.0f64, x1 in -3.0..3.0f64) {
        let s = schema();
        let g = random_genome(&spec(), &s, RngKey::from_seed(seed));
        let tree = build_formula(&g, &s).unwrap();
        let parsed = parse_formula(&tree.render(FormulaStyle::Plain, Precision::Exact), 2, 2).unwrap();
        let want = transform(&g).unwrap().forward(&[x0, x1], &s).unwrap();
        let direct = tree.evaluate(&[x0, x1]).unwrap();
        let reparsed = parsed.evaluate(&[x0, x1]).unwrap();
        for o in 0..2 {
            prop_assert!((direct[o] - want[o]).abs() < 1e-9);
            prop_assert!((reparsed[o] - want[o]).abs() < 1e-9);
        }
        let non_input = g.node_count() - 2;
        prop_assert_eq!(tree.assignments.len(), non_input);
    }

    #[test]
    fn dot_is_deterministic(seed in any::<u64>()) {
        let g = random_genome(&spec(), &schema(), RngKey::from_seed(seed));
        let d = to_dot(&g);
        prop_assert_eq!(&d, &to_dot(&g));
        prop_assert_eq!(d.lines().filter(|l| l.contains("->")).count(), g.conn_count());
    }
}
