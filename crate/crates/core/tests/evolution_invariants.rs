use neat_core::evolution::{
    compute_spawn_counts, evaluate_population, evolve, initial_genomes, reproduce, speciate, update_stagnation, NeatConfig,
    SpeciesState,
};
use neat_core::export::save_genome;
use neat_core::ops::InnovationTable;
use neat_core::problems::{Act, CartPole, Problem, Xor};
use neat_core::validate::validate;
use neat_core::{Activation, Result, RngKey};
use proptest::prelude::*;

fn xor_cfg(pop: usize, gens: usize) -> NeatConfig {
    NeatConfig { pop_size: pop, generation_limit: gens, num_inputs: 3, num_outputs: 1, ..NeatConfig::default() }
}

/// The loop of `evolve`, unrolled so every generation can be inspected.
#[test]
fn every_generation_is_valid_and_partitioned() {
    let cfg = NeatConfig {
        compatibility_threshold: 1.0,
        mutation: neat_core::ops::MutationConfig { node_delete: 0.1, conn_delete: 0.1, ..Default::default() },
        ..xor_cfg(60, 40)
    };
    let schema = cfg.schema(Activation::Sigmoid);
    let key = RngKey::from_seed(11);
    let mut pop = initial_genomes(&cfg, &schema, Activation::Sigmoid, key.split(0)).unwrap();
    let mut species = SpeciesState::default();
    let mut innov = InnovationTable::new(5);
    let mut best_so_far = f64::NEG_INFINITY;
    for gen in 0..cfg.generation_limit {
        assert_eq!(pop.len(), cfg.pop_size);
        for g in &pop {
            assert!(validate(g, &schema).is_empty());
        }
        let gk = key.split(1).split(gen as u64);
        let fit = evaluate_population(&Xor, &pop, &schema, gk.split(0), gen).unwrap();
        let best = fit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(best >= best_so_far, "elitism keeps the best genome");
        best_so_far = best;

        species = speciate(&pop, &species, &cfg);
        assert!(species.len() <= cfg.max_species);
        let mut seen: Vec<usize> = species.species.iter().flat_map(|s| s.members.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..cfg.pop_size).collect::<Vec<_>>());

        species = update_stagnation(&species, &fit, &cfg);
        let spawn = compute_spawn_counts(&species, &fit, &cfg);
        assert_eq!(spawn.iter().sum::<usize>(), cfg.pop_size);
        innov.start_generation();
        pop = reproduce(&pop, &species, &spawn, &fit, &cfg, &schema, gk.split(1), &mut innov).unwrap();
    }
}

#[test]
fn fixed_generation_count() {
    let out = evolve(&Xor, &xor_cfg(30, 5), RngKey::from_seed(0)).unwrap();
    assert_eq!(out.stats.len(), 5);
    assert_eq!(out.stats.iter().map(|s| s.generation).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    assert!(!out.solved);
}

#[test]
fn stops_at_target() {
    let cfg = NeatConfig { fitness_target: 2.5, ..xor_cfg(50, 100) };
    let out = evolve(&Xor, &cfg, RngKey::from_seed(0)).unwrap();
    assert!(out.solved);
    assert!(out.best_fitness >= 2.5);
    assert!(out.stats.len() < 100);
}

struct Constant;

impl Problem for Constant {
    fn name(&self) -> &str {
        "constant"
    }
    fn input_shape(&self) -> usize {
        3
    }
    fn output_shape(&self) -> usize {
        1
    }
    fn output_activation(&self) -> Activation {
        Activation::Tanh
    }
    fn evaluate(&self, _key: RngKey, _act: &mut Act<'_>) -> Result<f64> {
        Ok(1.0)
    }
}

#[test]
fn constant_fitness_picks_lowest_index() {
    let cfg = xor_cfg(20, 1);
    let out = evolve(&Constant, &cfg, RngKey::from_seed(5)).unwrap();
    let schema = cfg.schema(Activation::Tanh);
    let pop = initial_genomes(&cfg, &schema, Activation::Tanh, RngKey::from_seed(5).split(0)).unwrap();
    assert_eq!(out.best, pop[0]);
}

fn run_with_threads(threads: usize, seed: u64) -> (Vec<(f64, f64, f64, usize)>, String) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let cfg = NeatConfig { compatibility_threshold: 1.5, ..xor_cfg(80, 15) };
        let out = evolve(&Xor, &cfg, RngKey::from_seed(seed)).unwrap();
        let stats = out.stats.iter().map(|s| (s.best, s.mean, s.std, s.species_count)).collect();
        (stats, save_genome(&out.best, &out.schema))
    })
}

#[test]
fn thread_count_does_not_change_results() {
    let a = run_with_threads(1, 3);
    let b = run_with_threads(4, 3);
    assert_eq!(a.0.iter().map(|s| (s.0.to_bits(), s.1.to_bits(), s.2.to_bits(), s.3)).collect::<Vec<_>>(),
               b.0.iter().map(|s| (s.0.to_bits(), s.1.to_bits(), s.2.to_bits(), s.3)).collect::<Vec<_>>());
    assert_eq!(a.1, b.1);
    assert_eq!(run_with_threads(2, 3).1, a.1);
}

#[test]
fn shape_mismatch_rejected() {
    let cfg = xor_cfg(10, 2);
    assert!(matches!(evolve(&CartPole::default(), &cfg, RngKey::from_seed(0)), Err(neat_core::Error::ShapeMismatch(_))));
}

struct Failing;

impl Problem for Failing {
    fn name(&self) -> &str {
        "failing"
    }
    fn input_shape(&self) -> usize {
        3
    }
    fn output_shape(&self) -> usize {
        1
    }
    fn output_activation(&self) -> Activation {
        Activation::Tanh
    }
    fn evaluate(&self, _key: RngKey, act: &mut Act<'_>) -> Result<f64> {
        act(&[0.0, f64::NAN, 1.0]).map(|o| o[0])
    }
}

#[test]
fn evaluation_errors_carry_context() {
    match evolve(&Failing, &xor_cfg(10, 2), RngKey::from_seed(0)) {
        Err(neat_core::Error::Evaluation { generation: 0, genome: 0, source }) => {
            assert_eq!(*source, neat_core::Error::NonFiniteInput(1));
        }
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spawn_counts_sum_to_pop_size(
        sizes in prop::collection::vec(1usize..30, 1..8),
        seed in any::<u64>(),
        elitism in 0usize..3,
    ) {
        let pop: usize = sizes.iter().sum();
        let cfg = NeatConfig { pop_size: pop.max(2), genome_elitism: elitism, ..xor_cfg(pop.max(2), 1) };
        let schema = cfg.schema(Activation::Sigmoid);
        let genomes = initial_genomes(&cfg, &schema, Activation::Sigmoid, RngKey::from_seed(seed)).unwrap();
        let mut s = SpeciesState::default();
        let mut next = 0;
        for (id, &n) in sizes.iter().enumerate() {
            s.species.push(neat_core::evolution::Species {
                id: id as u64,
                representative: genomes[0].clone(),
                members: (next..next + n).collect(),
                best_fitness: 0.0,
                stagnation: 0,
            });
            next += n;
        }
        let mut r = RngKey::from_seed(seed).stream();
        let fit: Vec<f64> = (0..cfg.pop_size).map(|_| r.normal(0.0, 1.0)).collect();
        let counts = compute_spawn_counts(&s, &fit, &cfg);
        prop_assert_eq!(counts.iter().sum::<usize>(), cfg.pop_size);
        if sizes.len() * elitism <= cfg.pop_size {
            prop_assert!(counts.iter().all(|&c| c >= elitism));
        }
    }
}
