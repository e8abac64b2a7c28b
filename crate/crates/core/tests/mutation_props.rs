use neat_core::genome::GenomeLimits;
use neat_core::ops::{crossover, distance, mutate, DistanceConfig, InnovationTable, MutationConfig};
use neat_core::random::{random_genome, RandomGenomeSpec};
use neat_core::validate::validate;
use neat_core::{Activation, Aggregation, AttributeSchema, RngKey};
use proptest::prelude::*;

fn schema() -> AttributeSchema {
    AttributeSchema::new(vec![Activation::Tanh, Activation::Sigmoid, Activation::Relu], vec![Aggregation::Sum, Aggregation::Mean])
}

fn spec() -> RandomGenomeSpec {
    RandomGenomeSpec { num_inputs: 3, num_outputs: 1, max_hidden: 8, max_conns: 20, disabled_rate: 0.1, limits: GenomeLimits::new(14, 24) }
}

fn busy() -> MutationConfig {
    MutationConfig {
        node_add: 0.5,
        node_delete: 0.3,
        conn_add: 0.7,
        conn_delete: 0.3,
        activation_options: vec![Activation::Tanh, Activation::Relu],
        activation_replace_rate: 0.3,
        aggregation_options: vec![Aggregation::Sum, Aggregation::Mean],
        aggregation_replace_rate: 0.3,
        ..MutationConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mutation_chains_stay_valid(seed in any::<u64>()) {
        let s = schema();
        let mut g = random_genome(&spec(), &s, RngKey::from_seed(seed));
        let mut innov = InnovationTable::new(100);
        for step in 0..20 {
            g = mutate(&g, RngKey::from_seed(seed).split(step), &busy(), &s, &mut innov);
            let issues = validate(&g, &s);
            prop_assert!(issues.is_empty(), "{:?}", issues);
            prop_assert!(g.node_count() <= 14 && g.conn_count() <= 24);
        }
    }

    #[test]
    fn crossover_keeps_fit_topology(a in any::<u64>(), b in any::<u64>()) {
        let s = schema();
        let ga = random_genome(&spec(), &s, RngKey::from_seed(a));
        let gb = random_genome(&spec(), &s, RngKey::from_seed(b));
        let child = crossover(&ga, &gb, RngKey::from_seed(a ^ b)).unwrap();
        prop_assert!(validate(&child, &s).is_empty());
        for r in 0..ga.nodes.nrows() {
            prop_assert_eq!(ga.node_row_empty(r), child.node_row_empty(r));
        }
        for r in ga.conn_rows() {
            prop_assert_eq!(ga.conn_pair(r), child.conn_pair(r));
            prop_assert_eq!(ga.conn_enabled(r), child.conn_enabled(r));
        }
    }

    #[test]
    fn distance_is_a_semimetric(a in any::<u64>(), b in any::<u64>()) {
        let s = schema();
        let c = DistanceConfig::default();
        let ga = random_genome(&spec(), &s, RngKey::from_seed(a));
        let gb = random_genome(&spec(), &s, RngKey::from_seed(b));
        prop_assert_eq!(distance(&ga, &ga, &c).unwrap(), 0.0);
        let d1 = distance(&ga, &gb, &c).unwrap();
        prop_assert!(d1 >= 0.0);
        prop_assert_eq!(d1, distance(&gb, &ga, &c).unwrap());
    }
}

#[test]
fn frozen_mutation_is_identity() {
    let s = schema();
    let g = random_genome(&spec(), &s, RngKey::from_seed(3));
    let mut innov = InnovationTable::new(100);
    assert_eq!(mutate(&g, RngKey::from_seed(4), &MutationConfig::frozen(), &s, &mut innov), g);
}
