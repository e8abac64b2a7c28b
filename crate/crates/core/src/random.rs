//! Random valid genomes for property tests, benchmarks and fuzzing.

use rand::seq::SliceRandom;

use crate::genome::{AttributeSchema, ConnRow, GenomeLimits, GenomeTensors, NodeRow};
use crate::rng::RngKey;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGenomeSpec {
    pub num_inputs: usize,
    pub num_outputs: usize,
    /// Upper bound on hidden nodes (inclusive).
    pub max_hidden: usize,
    /// Upper bound on connection rows (inclusive).
    pub max_conns: usize,
    /// Probability that a generated connection is disabled.
    pub disabled_rate: f64,
    pub limits: GenomeLimits,
}

/// Acyclic genome with scattered rows, sparse hidden keys, random
/// attributes and function ids drawn from `schema`.
///
/// Every node gets a random rank (inputs lowest); connections only run from
/// lower to higher rank and never target an input, so the full graph
/// (enabled or not) is a DAG.
pub fn random_genome(spec: &RandomGenomeSpec, schema: &AttributeSchema, key: RngKey) -> GenomeTensors {
    let mut s = key.stream();
    let io = spec.num_inputs + spec.num_outputs;
    let hidden_cap = spec.max_hidden.min(spec.limits.max_nodes.saturating_sub(io));
    let n_hidden = s.below(hidden_cap + 1);

    let mut keys: Vec<u64> = (0..io as u64).collect();
    let mut next = io as u64;
    for _ in 0..n_hidden {
        next += 1 + s.below(3) as u64;
        keys.push(next);
    }
    // Rank: inputs first, then a random interleaving of outputs and hidden.
    let mut ranked: Vec<u64> = keys[spec.num_inputs..].to_vec();
    ranked.shuffle(&mut s);
    let order: Vec<u64> = keys[..spec.num_inputs].iter().copied().chain(ranked).collect();

    let mut g = GenomeTensors::empty(spec.num_inputs, spec.num_outputs, spec.limits);
    let mut node_rows: Vec<usize> = (0..spec.limits.max_nodes).collect();
    node_rows.shuffle(&mut s);
    for (&k, &row) in keys.iter().zip(&node_rows) {
        let bias = s.normal(0.0, 1.0);
        let response = if s.coin() { 1.0 } else { s.normal(1.0, 0.5) };
        let agg = s.below(schema.aggregations.len()) as f64;
        let act = s.below(schema.activations.len()) as f64;
        g.write_node_row(row, &NodeRow([k as f64, bias, response, agg, act]));
    }

    let mut candidates = Vec::new();
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[(i + 1).max(spec.num_inputs)..] {
            candidates.push((a, b));
        }
    }
    candidates.shuffle(&mut s);
    let cap = spec.max_conns.min(spec.limits.max_conns).min(candidates.len());
    let n_conns = s.below(cap + 1);
    let mut conn_rows: Vec<usize> = (0..spec.limits.max_conns).collect();
    conn_rows.shuffle(&mut s);
    for (&(a, b), &row) in candidates[..n_conns].iter().zip(&conn_rows) {
        let enabled = if s.uniform() < spec.disabled_rate { 0.0 } else { 1.0 };
        let w = s.normal(0.0, 1.0);
        g.write_conn_row(row, &ConnRow([a as f64, b as f64, enabled, w]));
    }
    g
}

/// The same genes moved to the first rows of tensors with new limits.
pub fn repad(g: &GenomeTensors, limits: GenomeLimits) -> crate::Result<GenomeTensors> {
    let nodes: Vec<NodeRow> = g.node_rows().map(|r| g.node_row(r)).collect();
    let conns: Vec<ConnRow> = g.conn_rows().map(|r| g.conn_row(r)).collect();
    crate::genome::pad_genome(&nodes, &conns, g.num_inputs, g.num_outputs, limits)
}
