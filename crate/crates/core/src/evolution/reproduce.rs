use rayon::prelude::*;

use super::{NeatConfig, SpeciesState};
use crate::error::Result;
use crate::genome::{concat_population, node_col, AttributeSchema, ConnRow, GenomeTensors, NodeRow, PopulationTensors};
use crate::inference::Activation;
use crate::ops::{crossover, mutate_in_place, rename_node_key, InnovationTable};
use crate::rng::RngKey;

/// Minimal genomes: inputs, outputs and one hidden node, with every input
/// wired to the hidden node and the hidden node wired to every output.
pub fn initial_genomes(cfg: &NeatConfig, schema: &AttributeSchema, output_activation: Activation, key: RngKey) -> Result<Vec<GenomeTensors>> {
    cfg.validate()?;
    let agg = schema.aggregation_id(cfg.mutation.aggregation_default)? as f64;
    let hidden_act = schema.activation_id(cfg.mutation.activation_default)? as f64;
    let out_act = schema.activation_id(output_activation)? as f64;
    let (ni, no) = (cfg.num_inputs as u64, cfg.num_outputs as u64);
    let hidden = ni + no;
    let m = &cfg.mutation;

    let genomes = (0..cfg.pop_size)
        .into_par_iter()
        .map(|i| {
            let mut s = key.split(i as u64).stream();
            let mut g = GenomeTensors::empty(cfg.num_inputs, cfg.num_outputs, cfg.limits);
            let mut row = 0;
            for k in 0..ni {
                g.write_node_row(row, &NodeRow([k as f64, 0.0, 1.0, agg, hidden_act]));
                row += 1;
            }
            for k in ni..hidden {
                let (b, r) = (m.bias.init(&mut s), m.response.init(&mut s));
                g.write_node_row(row, &NodeRow([k as f64, b, r, agg, out_act]));
                row += 1;
            }
            let (b, r) = (m.bias.init(&mut s), m.response.init(&mut s));
            g.write_node_row(row, &NodeRow([hidden as f64, b, r, agg, hidden_act]));

            let mut crow = 0;
            for k in 0..ni {
                g.write_conn_row(crow, &ConnRow([k as f64, hidden as f64, 1.0, m.weight.init(&mut s)]));
                crow += 1;
            }
            for k in ni..hidden {
                g.write_conn_row(crow, &ConnRow([hidden as f64, k as f64, 1.0, m.weight.init(&mut s)]));
                crow += 1;
            }
            g
        })
        .collect();
    Ok(genomes)
}

pub fn initialize_population(
    cfg: &NeatConfig,
    schema: &AttributeSchema,
    output_activation: Activation,
    key: RngKey,
) -> Result<PopulationTensors> {
    concat_population(&initial_genomes(cfg, schema, output_activation, key)?)
}

/// Members sorted best first; equal fitness keeps the lower index first.
fn ranked(members: &[usize], fitness: &[f64]) -> Vec<usize> {
    let mut m = members.to_vec();
    m.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    m
}

enum Job {
    Elite(usize),
    Child { pool: Vec<usize> },
}

/// Next generation, species by species in `s` order: the top
/// `genome_elitism` members copied unchanged, then children bred from the
/// top `ceil(survival_threshold * size)` members. `spawn[i]` is the slot
/// count of species `i`.
///
/// Child `slot` draws from `key.split(slot)`: sub-stream 0 for crossover,
/// 1 for parent selection, 2 for mutation. Node splits are first numbered
/// provisionally per child and then given real keys in ascending
/// `(in, out)` order, so the outcome does not depend on scheduling.
pub fn reproduce(
    pop: &[GenomeTensors],
    s: &SpeciesState,
    spawn: &[usize],
    fitness: &[f64],
    cfg: &NeatConfig,
    schema: &AttributeSchema,
    key: RngKey,
    innovations: &mut InnovationTable,
) -> Result<Vec<GenomeTensors>> {
    let mut jobs = Vec::with_capacity(cfg.pop_size);
    for (sp, &count) in s.species.iter().zip(spawn) {
        let order = ranked(&sp.members, fitness);
        let elites = cfg.genome_elitism.min(count).min(order.len());
        for &e in &order[..elites] {
            jobs.push(Job::Elite(e));
        }
        let pool_size = ((cfg.survival_threshold * order.len() as f64).ceil() as usize).clamp(1, order.len());
        let pool = order[..pool_size].to_vec();
        for _ in elites..count {
            jobs.push(Job::Child { pool: pool.clone() });
        }
    }

    let children: Vec<(GenomeTensors, Vec<((u64, u64), u64)>)> = jobs
        .par_iter()
        .enumerate()
        .map(|(slot, job)| -> Result<_> {
            match job {
                Job::Elite(e) => Ok((pop[*e].clone(), Vec::new())),
                Job::Child { pool } => {
                    let k = key.split(slot as u64);
                    let mut sel = k.split(1).stream();
                    let a = pool[sel.below(pool.len())];
                    let b = pool[sel.below(pool.len())];
                    let (fit, other) = if fitness[b] > fitness[a] || (fitness[b] == fitness[a] && b < a) {
                        (b, a)
                    } else {
                        (a, b)
                    };
                    let mut child = crossover(&pop[fit], &pop[other], k.split(0))?;
                    let mut local = InnovationTable::provisional(slot);
                    mutate_in_place(&mut child, k.split(2), &cfg.mutation, schema, &mut local);
                    let proposals = local.splits().map(|(&p, &m)| (p, m)).collect();
                    Ok((child, proposals))
                }
            }
        })
        .collect::<Result<_>>()?;

    let all_pairs: Vec<(u64, u64)> = children.iter().flat_map(|(_, p)| p.iter().map(|(pair, _)| *pair)).collect();
    let real = innovations.resolve(&all_pairs);
    let mut out = Vec::with_capacity(children.len());
    for (mut child, proposals) in children {
        for (pair, provisional) in proposals {
            if child.nodes.column(node_col::KEY).iter().any(|&k| k == provisional as f64) {
                rename_node_key(&mut child, provisional, real[&pair]);
            }
        }
        out.push(child);
    }
    Ok(out)
}
