use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_spawn_counts, initial_genomes, reproduce, speciate, update_stagnation, NeatConfig, SpeciesState};
use crate::error::{Error, Result};
use crate::genome::{AttributeSchema, GenomeTensors};
use crate::inference::{transform, ValueBuffer};
use crate::ops::InnovationTable;
use crate::problems::Problem;
use crate::rng::RngKey;

/// One record per completed generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
    pub species_count: usize,
    pub species_sizes: Vec<usize>,
    /// Wall-clock time of the whole generation.
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: GenomeTensors,
    pub best_fitness: f64,
    pub stats: Vec<RunStats>,
    pub schema: AttributeSchema,
    /// True when `fitness_target` was reached.
    pub solved: bool,
}

/// Fitness of every genome under one shared evaluation key. Errors carry
/// the generation and genome index.
pub fn evaluate_population(
    problem: &dyn Problem,
    pop: &[GenomeTensors],
    schema: &AttributeSchema,
    key: RngKey,
    generation: usize,
) -> Result<Vec<f64>> {
    pop.par_iter()
        .enumerate()
        .map(|(i, g)| {
            let ctx = |e: Error| Error::Evaluation { generation, genome: i, source: Box::new(e) };
            let net = transform(g).map_err(ctx)?;
            let mut buf = ValueBuffer::new(net.max_nodes());
            let mut act = |x: &[f64]| -> Result<Vec<f64>> {
                net.forward_into(x, schema, &mut buf)?;
                Ok(net.output_rows().iter().map(|&r| buf.values[r]).collect())
            };
            let f = problem.evaluate(key, &mut act).map_err(ctx)?;
            if f.is_nan() {
                return Err(ctx(Error::NonFiniteFitness(f)));
            }
            Ok(f)
        })
        .collect()
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn evolve(problem: &dyn Problem, cfg: &NeatConfig, key: RngKey) -> Result<EvolveOutcome> {
    evolve_with(problem, cfg, key, |_| {})
}

/// Runs the generational loop, calling `on_generation` after each one.
///
/// Key layout: `key.split(0).split(i)` initializes genome `i`;
/// `key.split(1).split(g)` drives generation `g`, whose sub-key 0 is the
/// evaluation key and sub-key 1 the reproduction key.
pub fn evolve_with(
    problem: &dyn Problem,
    cfg: &NeatConfig,
    key: RngKey,
    mut on_generation: impl FnMut(&RunStats),
) -> Result<EvolveOutcome> {
    cfg.validate()?;
    if problem.input_shape() != cfg.num_inputs || problem.output_shape() != cfg.num_outputs {
        return Err(Error::ShapeMismatch(format!(
            "problem `{}` is {}x{}, config is {}x{}",
            problem.name(),
            problem.input_shape(),
            problem.output_shape(),
            cfg.num_inputs,
            cfg.num_outputs
        )));
    }
    let out_act = problem.output_activation();
    let schema = cfg.schema(out_act);
    let mut pop = initial_genomes(cfg, &schema, out_act, key.split(0))?;
    let mut species = SpeciesState::default();
    let mut innovations = InnovationTable::new((cfg.num_inputs + cfg.num_outputs + 1) as u64);
    let mut stats = Vec::with_capacity(cfg.generation_limit);

    for generation in 0..cfg.generation_limit {
        let start = Instant::now();
        let gkey = key.split(1).split(generation as u64);
        let fitness = evaluate_population(problem, &pop, &schema, gkey.split(0), generation)?;
        let best_idx = argmax(&fitness);
        let best = fitness[best_idx];
        let n = fitness.len() as f64;
        let mean = fitness.iter().sum::<f64>() / n;
        let std = (fitness.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n).sqrt();

        species = speciate(&pop, &species, cfg);
        let mut record = RunStats {
            generation,
            best,
            mean,
            std,
            species_count: species.len(),
            species_sizes: species.sizes(),
            elapsed_ms: 0.0,
        };

        let solved = best >= cfg.fitness_target;
        let last = generation + 1 == cfg.generation_limit;
        if solved || last {
            record.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
            on_generation(&record);
            stats.push(record);
            return Ok(EvolveOutcome { best: pop.swap_remove(best_idx), best_fitness: best, stats, schema, solved });
        }

        species = update_stagnation(&species, &fitness, cfg);
        let spawn = compute_spawn_counts(&species, &fitness, cfg);
        innovations.start_generation();
        pop = reproduce(&pop, &species, &spawn, &fitness, cfg, &schema, gkey.split(1), &mut innovations)?;

        record.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        on_generation(&record);
        stats.push(record);
    }
    unreachable!("generation_limit >= 1 is validated and the last generation returns")
}
