use neat_core::evolution::evaluate_population;
use neat_core::genome::GenomeLimits;
use neat_core::inference::transform;
use neat_core::problems::{eval_xor, CartPole, FuncFit, Problem, Xor};
use neat_core::random::{random_genome, RandomGenomeSpec};
use neat_core::{Activation, Aggregation, AttributeSchema, GenomeTensors, RngKey};

fn schema() -> AttributeSchema {
    AttributeSchema::new(vec![Activation::Tanh, Activation::Sigmoid, Activation::Identity], vec![Aggregation::Sum])
}

fn genomes(inputs: usize, n: u64) -> Vec<GenomeTensors> {
    let spec = RandomGenomeSpec {
        num_inputs: inputs,
        num_outputs: 1,
        max_hidden: 5,
        max_conns: 15,
        disabled_rate: 0.1,
        limits: GenomeLimits::new(12, 20),
    };
    (0..n).map(|i| random_genome(&spec, &schema(), RngKey::from_seed(i))).collect()
}

fn single(problem: &dyn Problem, g: &GenomeTensors, key: RngKey) -> f64 {
    let net = transform(g).unwrap();
    let s = schema();
    problem.evaluate(key, &mut |x: &[f64]| net.forward(x, &s)).unwrap()
}

#[test]
fn population_eval_equals_sequential_map() {
    let s = schema();
    let pop = genomes(4, 40);
    let key = RngKey::from_seed(9);
    let batch = evaluate_population(&CartPole::default(), &pop, &s, key, 0).unwrap();
    for (g, f) in pop.iter().zip(&batch) {
        assert_eq!(single(&CartPole::default(), g, key).to_bits(), f.to_bits());
    }
}

#[test]
fn fitness_ranges_and_repeatability() {
    for g in genomes(3, 50) {
        let f = single(&Xor, &g, RngKey::from_seed(0));
        assert!((0.0..=4.0).contains(&f));
    }
    for g in genomes(4, 50) {
        let a = single(&CartPole::default(), &g, RngKey::from_seed(1));
        let b = single(&CartPole::default(), &g, RngKey::from_seed(1));
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((0.0..=500.0).contains(&a));
    }
}

#[test]
fn func_fit_self_fit_is_zero() {
    let s = schema();
    let g = &genomes(2, 1)[0];
    let net = transform(g).unwrap();
    let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 10.0, 1.0 - i as f64 / 10.0]).collect();
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| net.forward(x, &s).unwrap()).collect();
    let p = FuncFit::new(xs, ys).unwrap();
    assert_eq!(single(&p, g, RngKey::from_seed(0)), 0.0);
}

#[test]
fn xor_clamps_outputs() {
    let mut big = |_: &[f64]| Ok(vec![7.0]);
    // clamped to 1: two cases right, two wrong
    assert_eq!(eval_xor(&mut big).unwrap(), 2.0);
}
