use neat_core::genome::{decode_genome, GenomeLimits};
use neat_core::inference::{batch_forward, transform};
use neat_core::oracle::OracleGenome;
use neat_core::random::{random_genome, repad, RandomGenomeSpec};
use neat_core::{Activation, Aggregation, AttributeSchema, RngKey};
use ndarray::Array2;
use proptest::prelude::*;

fn schema() -> AttributeSchema {
    AttributeSchema::new(Activation::ALL.to_vec(), Aggregation::ALL.to_vec())
}

fn spec(limits: GenomeLimits) -> RandomGenomeSpec {
    RandomGenomeSpec { num_inputs: 3, num_outputs: 2, max_hidden: 15, max_conns: 40, disabled_rate: 0.15, limits }
}

fn inputs(seed: u64, n: usize) -> Vec<f64> {
    let mut s = RngKey::from_seed(seed).split(99).stream();
    (0..n).map(|_| s.normal(0.0, 2.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn forward_matches_oracle(seed in any::<u64>()) {
        let s = schema();
        let g = random_genome(&spec(GenomeLimits::new(20, 40)), &s, RngKey::from_seed(seed));
        let net = transform(&g).unwrap();
        let oracle = OracleGenome::from_tensors(&g, &s).unwrap();
        let x = inputs(seed, 3);
        let fast = net.forward(&x, &s).unwrap();
        let want = oracle.forward(&x).unwrap();
        for (a, b) in fast.iter().zip(&want) {
            prop_assert!(a.is_finite());
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
        let dense = net.forward_dense(&x, &s).unwrap();
        prop_assert_eq!(
            fast.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            dense.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn padding_invariance(seed in any::<u64>()) {
        let s = schema();
        let g = random_genome(&spec(GenomeLimits::new(50, 100)), &s, RngKey::from_seed(seed));
        let big = repad(&g, GenomeLimits::new(200, 400)).unwrap();
        let x = inputs(seed, 3);
        let a = transform(&g).unwrap().forward(&x, &s).unwrap();
        let b = transform(&big).unwrap().forward(&x, &s).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        let mut da = decode_genome(&g, &s).unwrap();
        let mut db = decode_genome(&big, &s).unwrap();
        da.nodes.sort_by_key(|n| n.key);
        db.nodes.sort_by_key(|n| n.key);
        prop_assert_eq!(da.nodes, db.nodes);
    }

    #[test]
    fn order_respects_edges(seed in any::<u64>()) {
        let s = schema();
        let g = random_genome(&spec(GenomeLimits::new(20, 40)), &s, RngKey::from_seed(seed));
        let t = transform(&g).unwrap();
        let order = t.order_keys();
        prop_assert_eq!(order.len(), g.node_count());
        prop_assert!(order[..3].iter().copied().eq(0..3));
        let pos = |k: u64| order.iter().position(|&x| x == k).unwrap();
        for r in g.conn_rows().filter(|&r| g.conn_enabled(r)) {
            let (a, b) = g.conn_pair(r);
            prop_assert!(pos(a) < pos(b));
        }
        let finite = t.expanded.iter().filter(|v| v.is_finite()).count();
        prop_assert_eq!(finite, g.conn_rows().filter(|&r| g.conn_enabled(r)).count());
    }

    #[test]
    fn oracle_roundtrip(seed in any::<u64>()) {
        let s = schema();
        let g = random_genome(&spec(GenomeLimits::new(20, 40)), &s, RngKey::from_seed(seed));
        let o = OracleGenome::from_tensors(&g, &s).unwrap();
        let back = o.to_tensors(g.limits(), &s).unwrap();
        prop_assert_eq!(OracleGenome::from_tensors(&back, &s).unwrap(), o);
    }
}

#[test]
fn batch_matches_sequential_loop() {
    let s = schema();
    let pop: Vec<_> = (0..64)
        .map(|i| transform(&random_genome(&spec(GenomeLimits::new(20, 40)), &s, RngKey::from_seed(i))).unwrap())
        .collect();
    let x = Array2::from_shape_vec((16, 3), inputs(7, 48)).unwrap();
    let out = batch_forward(&pop, x.view(), &s).unwrap();
    assert_eq!(out.shape(), &[64, 16, 2]);
    for (p, net) in pop.iter().enumerate() {
        for b in 0..16 {
            let y = net.forward(&x.row(b).to_vec(), &s).unwrap();
            for o in 0..2 {
                assert_eq!(out[[p, b, o]].to_bits(), y[o].to_bits());
            }
        }
    }
}

#[test]
fn batch_shape_mismatch() {
    let s = schema();
    let net = transform(&random_genome(&spec(GenomeLimits::new(20, 40)), &s, RngKey::from_seed(1))).unwrap();
    let x = Array2::zeros((2, 4));
    assert!(batch_forward(&[net], x.view(), &s).is_err());
}
