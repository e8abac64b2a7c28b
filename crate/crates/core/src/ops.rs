//! Tensor edits on single genomes: structural add/remove, attribute writes,
//! and the mutation / crossover / distance operators built from them.
//!
//! Insertion always targets the first all-NaN row; removal overwrites the row
//! with NaN in place. Public primitives are pure (they return a new genome);
//! the `*_in_place` variants are used on freshly cloned children.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{
    conn_col, node_col, AttributeSchema, ConnRow, GenomeTensors, NodeRow, CONN_ATTRS, CONN_WIDTH, NODE_ATTRS,
    NODE_WIDTH,
};
use crate::inference::{Activation, Aggregation};
use crate::rng::{RngKey, RngStream};

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

pub fn add_node(g: &GenomeTensors, row: &NodeRow) -> Result<GenomeTensors> {
    let mut out = g.clone();
    add_node_in_place(&mut out, row)?;
    Ok(out)
}

pub fn add_node_in_place(g: &mut GenomeTensors, row: &NodeRow) -> Result<usize> {
    let key = row.key();
    if g.find_node(key).is_some() {
        return Err(Error::DuplicateKey(key));
    }
    let r = g.first_free_node_row().ok_or(Error::GenomeFull("node"))?;
    g.write_node_row(r, row);
    Ok(r)
}

/// Removes a hidden node and every connection touching it.
pub fn remove_node(g: &GenomeTensors, key: u64) -> Result<GenomeTensors> {
    let mut out = g.clone();
    remove_node_in_place(&mut out, key)?;
    Ok(out)
}

pub fn remove_node_in_place(g: &mut GenomeTensors, key: u64) -> Result<()> {
    if g.is_input(key) || g.is_output(key) {
        return Err(Error::ProtectedNode(key));
    }
    let r = g.find_node(key).ok_or_else(|| Error::KeyNotFound(format!("node {key}")))?;
    g.write_node_row(r, &NodeRow::EMPTY);
    let k = key as f64;
    for c in 0..g.conns.nrows() {
        if g.conns[[c, conn_col::IN]] == k || g.conns[[c, conn_col::OUT]] == k {
            g.write_conn_row(c, &ConnRow::EMPTY);
        }
    }
    Ok(())
}

pub fn add_conn(g: &GenomeTensors, row: &ConnRow) -> Result<GenomeTensors> {
    let mut out = g.clone();
    add_conn_in_place(&mut out, row)?;
    Ok(out)
}

pub fn add_conn_in_place(g: &mut GenomeTensors, row: &ConnRow) -> Result<usize> {
    let (i, o) = row.pair();
    if g.find_node(i).is_none() || g.find_node(o).is_none() {
        return Err(Error::DanglingEndpoint(i, o));
    }
    if g.find_conn(i, o).is_some() {
        return Err(Error::DuplicateConn(i, o));
    }
    let r = g.first_free_conn_row().ok_or(Error::GenomeFull("connection"))?;
    g.write_conn_row(r, row);
    Ok(r)
}

pub fn remove_conn(g: &GenomeTensors, input: u64, output: u64) -> Result<GenomeTensors> {
    let mut out = g.clone();
    let r = out
        .find_conn(input, output)
        .ok_or_else(|| Error::KeyNotFound(format!("connection {input}->{output}")))?;
    out.write_conn_row(r, &ConnRow::EMPTY);
    Ok(out)
}

/// Writes node attribute `attr_index` (0 = bias, 1 = response,
/// 2 = aggregation id, 3 = activation id) into column `1 + attr_index`.
pub fn set_node_attr(g: &GenomeTensors, key: u64, attr_index: usize, value: f64) -> Result<GenomeTensors> {
    let r = g.find_node(key).ok_or_else(|| Error::KeyNotFound(format!("node {key}")))?;
    if attr_index >= NODE_ATTRS {
        return Err(Error::AttrOutOfRange { index: attr_index, count: NODE_ATTRS });
    }
    let mut out = g.clone();
    out.nodes[[r, 1 + attr_index]] = value;
    Ok(out)
}

/// Writes connection attribute `attr_index` (0 = weight) into column `3 + attr_index`.
pub fn set_conn_attr(g: &GenomeTensors, input: u64, output: u64, attr_index: usize, value: f64) -> Result<GenomeTensors> {
    let r = g
        .find_conn(input, output)
        .ok_or_else(|| Error::KeyNotFound(format!("connection {input}->{output}")))?;
    if attr_index >= CONN_ATTRS {
        return Err(Error::AttrOutOfRange { index: attr_index, count: CONN_ATTRS });
    }
    let mut out = g.clone();
    out.conns[[r, 3 + attr_index]] = value;
    Ok(out)
}

/// Replaces every occurrence of node key `from` with `to`.
pub(crate) fn rename_node_key(g: &mut GenomeTensors, from: u64, to: u64) {
    let (f, t) = (from as f64, to as f64);
    for r in 0..g.nodes.nrows() {
        if g.nodes[[r, node_col::KEY]] == f {
            g.nodes[[r, node_col::KEY]] = t;
        }
    }
    for r in 0..g.conns.nrows() {
        for col in [conn_col::IN, conn_col::OUT] {
            if g.conns[[r, col]] == f {
                g.conns[[r, col]] = t;
            }
        }
    }
}

/// True if `to` is reachable from `from` along enabled connections.
pub fn reaches(g: &GenomeTensors, from: u64, to: u64) -> bool {
    if from == to {
        return true;
    }
    let edges: Vec<(u64, u64)> = g.conn_rows().filter(|&r| g.conn_enabled(r)).map(|r| g.conn_pair(r)).collect();
    let mut stack = vec![from];
    let mut seen = vec![from];
    while let Some(n) = stack.pop() {
        for &(a, b) in &edges {
            if a == n && !seen.contains(&b) {
                if b == to {
                    return true;
                }
                seen.push(b);
                stack.push(b);
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Init / perturb / replace parameters of one float attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttrMutation {
    pub init_mean: f64,
    pub init_std: f64,
    pub mutate_power: f64,
    pub mutate_rate: f64,
    pub replace_rate: f64,
}

impl AttrMutation {
    pub fn init(&self, s: &mut RngStream) -> f64 {
        s.normal(self.init_mean, self.init_std)
    }

    /// Gaussian perturbation with probability `mutate_rate`, fresh init draw
    /// with probability `replace_rate`, otherwise unchanged.
    pub fn mutate(&self, value: f64, s: &mut RngStream) -> f64 {
        let r = s.uniform();
        if r < self.mutate_rate {
            value + s.normal(0.0, self.mutate_power)
        } else if r < self.mutate_rate + self.replace_rate {
            self.init(s)
        } else {
            value
        }
    }

    pub const FROZEN: AttrMutation = AttrMutation {
        init_mean: 0.0,
        init_std: 0.0,
        mutate_power: 0.0,
        mutate_rate: 0.0,
        replace_rate: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub node_add: f64,
    pub node_delete: f64,
    pub conn_add: f64,
    pub conn_delete: f64,
    pub bias: AttrMutation,
    pub response: AttrMutation,
    pub weight: AttrMutation,
    pub activation_default: Activation,
    pub activation_options: Vec<Activation>,
    pub activation_replace_rate: f64,
    pub aggregation_default: Aggregation,
    pub aggregation_options: Vec<Aggregation>,
    pub aggregation_replace_rate: f64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            node_add: 0.2,
            node_delete: 0.0,
            conn_add: 0.4,
            conn_delete: 0.0,
            bias: AttrMutation { init_mean: 0.0, init_std: 1.0, mutate_power: 0.5, mutate_rate: 0.7, replace_rate: 0.1 },
            response: AttrMutation { init_mean: 1.0, init_std: 0.0, mutate_power: 0.0, mutate_rate: 0.0, replace_rate: 0.0 },
            weight: AttrMutation { init_mean: 0.0, init_std: 1.0, mutate_power: 0.5, mutate_rate: 0.8, replace_rate: 0.1 },
            activation_default: Activation::Tanh,
            activation_options: vec![Activation::Tanh],
            activation_replace_rate: 0.0,
            aggregation_default: Aggregation::Sum,
            aggregation_options: vec![Aggregation::Sum],
            aggregation_replace_rate: 0.0,
        }
    }
}

impl MutationConfig {
    /// Every probability and scale zero: mutation is the identity.
    pub fn frozen() -> Self {
        MutationConfig {
            node_add: 0.0,
            node_delete: 0.0,
            conn_add: 0.0,
            conn_delete: 0.0,
            bias: AttrMutation::FROZEN,
            response: AttrMutation { init_mean: 1.0, ..AttrMutation::FROZEN },
            weight: AttrMutation::FROZEN,
            activation_replace_rate: 0.0,
            aggregation_replace_rate: 0.0,
            ..MutationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("node_add", self.node_add),
            ("node_delete", self.node_delete),
            ("conn_add", self.conn_add),
            ("conn_delete", self.conn_delete),
            ("bias_mutate_rate", self.bias.mutate_rate),
            ("bias_replace_rate", self.bias.replace_rate),
            ("response_mutate_rate", self.response.mutate_rate),
            ("response_replace_rate", self.response.replace_rate),
            ("weight_mutate_rate", self.weight.mutate_rate),
            ("weight_replace_rate", self.weight.replace_rate),
            ("activation_replace_rate", self.activation_replace_rate),
            ("aggregation_replace_rate", self.aggregation_replace_rate),
        ];
        for (field, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig { field: field.into(), reason: format!("{p} is not a probability") });
            }
        }
        let scales = [
            ("bias_mutate_power", self.bias.mutate_power),
            ("bias_init_std", self.bias.init_std),
            ("response_mutate_power", self.response.mutate_power),
            ("response_init_std", self.response.init_std),
            ("weight_mutate_power", self.weight.mutate_power),
            ("weight_init_std", self.weight.init_std),
        ];
        for (field, v) in scales {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig { field: field.into(), reason: format!("{v} must be finite and >= 0") });
            }
        }
        if self.activation_options.is_empty() {
            return Err(Error::InvalidConfig { field: "activation_options".into(), reason: "empty".into() });
        }
        if self.aggregation_options.is_empty() {
            return Err(Error::InvalidConfig { field: "aggregation_options".into(), reason: "empty".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    pub compatibility_disjoint: f64,
    pub compatibility_homologous: f64,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig { compatibility_disjoint: 1.0, compatibility_homologous: 0.5 }
    }
}

// ---------------------------------------------------------------------------
// Innovation numbers
// ---------------------------------------------------------------------------

/// Historical-marker allocation for node splits.
///
/// Within one generation, every genome that splits the same connection
/// `(in, out)` receives the same new node key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnovationTable {
    splits: BTreeMap<(u64, u64), u64>,
    next_key: u64,
}

/// Start of the key range used for provisional keys during parallel mutation.
/// Exactly representable in `f64` and far above any real key.
pub(crate) const PROVISIONAL_BASE: u64 = 1 << 44;

impl InnovationTable {
    pub fn new(next_key: u64) -> Self {
        InnovationTable { splits: BTreeMap::new(), next_key }
    }

    pub fn next_key(&self) -> u64 {
        self.next_key
    }

    /// Forgets the split map; `next_key` keeps increasing.
    pub fn start_generation(&mut self) {
        self.splits.clear();
    }

    pub fn key_for_split(&mut self, pair: (u64, u64)) -> u64 {
        if let Some(&k) = self.splits.get(&pair) {
            return k;
        }
        let k = self.next_key;
        self.next_key += 1;
        self.splits.insert(pair, k);
        k
    }

    pub fn splits(&self) -> impl Iterator<Item = (&(u64, u64), &u64)> {
        self.splits.iter()
    }

    /// Table handing out a single provisional key for child slot `slot`.
    pub(crate) fn provisional(slot: usize) -> Self {
        InnovationTable::new(PROVISIONAL_BASE + slot as u64)
    }

    /// Assigns real keys to split proposals gathered from independent
    /// children. Pairs already known this generation keep their key; new
    /// pairs are numbered in ascending pair order. Returns the key per pair.
    pub fn resolve<'a>(&mut self, proposals: impl IntoIterator<Item = &'a (u64, u64)>) -> BTreeMap<(u64, u64), u64> {
        let mut pairs: Vec<(u64, u64)> = proposals.into_iter().copied().collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs.into_iter().map(|p| (p, self.key_for_split(p))).collect()
    }
}

// ---------------------------------------------------------------------------
// Mutation
// ---------------------------------------------------------------------------

/// Structural then attribute mutation. Structural steps that cannot apply
/// (full tensors, no candidate) are silent no-ops.
pub fn mutate(
    g: &GenomeTensors,
    key: RngKey,
    cfg: &MutationConfig,
    schema: &AttributeSchema,
    innovations: &mut InnovationTable,
) -> GenomeTensors {
    let mut out = g.clone();
    mutate_in_place(&mut out, key, cfg, schema, innovations);
    out
}

pub fn mutate_in_place(
    g: &mut GenomeTensors,
    key: RngKey,
    cfg: &MutationConfig,
    schema: &AttributeSchema,
    innovations: &mut InnovationTable,
) {
    let mut decide = key.split(0).stream();
    let draws = [decide.uniform(), decide.uniform(), decide.uniform(), decide.uniform()];
    if draws[0] < cfg.node_add {
        mutate_add_node(g, key.split(1), cfg, schema, innovations);
    }
    if draws[1] < cfg.node_delete {
        mutate_delete_node(g, key.split(2));
    }
    if draws[2] < cfg.conn_add {
        mutate_add_conn(g, key.split(3), cfg);
    }
    if draws[3] < cfg.conn_delete {
        mutate_delete_conn(g, key.split(4));
    }
    mutate_attributes(g, key.split(5), cfg, schema);
}

/// Splits a random enabled connection `a -> b` into `a -> m` (weight 1) and
/// `m -> b` (old weight), disabling the original.
fn mutate_add_node(
    g: &mut GenomeTensors,
    key: RngKey,
    cfg: &MutationConfig,
    schema: &AttributeSchema,
    innovations: &mut InnovationTable,
) {
    let enabled: Vec<usize> = g.conn_rows().filter(|&r| g.conn_enabled(r)).collect();
    if enabled.is_empty() || g.first_free_node_row().is_none() || g.conns.nrows() - g.conn_count() < 2 {
        return;
    }
    let (Ok(agg), Ok(act)) = (
        schema.aggregation_id(cfg.aggregation_default),
        schema.activation_id(cfg.activation_default),
    ) else {
        return;
    };
    let mut s = key.stream();
    let r = enabled[s.below(enabled.len())];
    let (a, b) = g.conn_pair(r);
    let old_weight = g.conns[[r, conn_col::WEIGHT]];
    let m = innovations.key_for_split((a, b));
    if g.find_node(m).is_some() {
        return;
    }
    g.conns[[r, conn_col::ENABLED]] = 0.0;
    let node = NodeRow([m as f64, 0.0, 1.0, agg as f64, act as f64]);
    // Capacity was checked above, so these cannot fail.
    let _ = add_node_in_place(g, &node);
    let _ = add_conn_in_place(g, &ConnRow([a as f64, m as f64, 1.0, 1.0]));
    let _ = add_conn_in_place(g, &ConnRow([m as f64, b as f64, 1.0, old_weight]));
}

fn mutate_delete_node(g: &mut GenomeTensors, key: RngKey) {
    let hidden: Vec<u64> = g
        .node_rows()
        .map(|r| g.node_key(r))
        .filter(|&k| !g.is_input(k) && !g.is_output(k))
        .collect();
    if hidden.is_empty() {
        return;
    }
    let k = hidden[key.stream().below(hidden.len())];
    let _ = remove_node_in_place(g, k);
}

/// Legality of new connections for one genome: endpoints, existing pairs and
/// enabled-edge reachability, computed once.
struct ConnCandidates {
    keys: Vec<u64>,
    n: usize,
    /// `present[a * n + b]`: some row (enabled or not) already joins them.
    present: Vec<bool>,
    /// `reach[a * n + b]`: `b` is reachable from `a` over enabled edges.
    reach: Vec<bool>,
}

impl ConnCandidates {
    fn new(g: &GenomeTensors) -> Self {
        let mut keys: Vec<u64> = g.node_rows().map(|r| g.node_key(r)).collect();
        for r in g.conn_rows() {
            let (a, b) = g.conn_pair(r);
            keys.extend([a, b]);
        }
        keys.sort_unstable();
        keys.dedup();
        let n = keys.len();
        let at = |k: u64| keys.binary_search(&k).expect("collected above");
        let mut present = vec![false; n * n];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for r in g.conn_rows() {
            let (a, b) = g.conn_pair(r);
            let (ia, ib) = (at(a), at(b));
            present[ia * n + ib] = true;
            if g.conn_enabled(r) {
                adj[ia].push(ib);
            }
        }
        let mut reach = vec![false; n * n];
        let mut stack = Vec::new();
        for start in 0..n {
            let row = &mut reach[start * n..(start + 1) * n];
            row[start] = true;
            stack.push(start);
            while let Some(x) = stack.pop() {
                for &y in &adj[x] {
                    if !row[y] {
                        row[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        ConnCandidates { keys, n, present, reach }
    }

    fn legal(&self, g: &GenomeTensors, a: u64, b: u64) -> bool {
        if a == b || g.is_input(b) {
            return false;
        }
        let (Ok(ia), Ok(ib)) = (self.keys.binary_search(&a), self.keys.binary_search(&b)) else {
            return true;
        };
        !self.present[ia * self.n + ib] && !self.reach[ib * self.n + ia]
    }
}

/// Connects a uniformly chosen legal pair: target is not an input, the pair
/// is absent, and the enabled graph stays acyclic. A few rejection-sampling
/// rounds, then an exhaustive scan.
fn mutate_add_conn(g: &mut GenomeTensors, key: RngKey, cfg: &MutationConfig) {
    let Some(free) = g.first_free_conn_row() else {
        return;
    };
    let keys: Vec<u64> = g.node_rows().map(|r| g.node_key(r)).collect();
    let targets: Vec<u64> = keys.iter().copied().filter(|&k| !g.is_input(k)).collect();
    if targets.is_empty() {
        return;
    }
    let cands = ConnCandidates::new(g);
    let mut s = key.stream();
    let mut chosen = None;
    for _ in 0..8 {
        let a = keys[s.below(keys.len())];
        let b = targets[s.below(targets.len())];
        if cands.legal(g, a, b) {
            chosen = Some((a, b));
            break;
        }
    }
    if chosen.is_none() {
        let legal: Vec<(u64, u64)> = keys
            .iter()
            .flat_map(|&a| targets.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| cands.legal(g, a, b))
            .collect();
        if legal.is_empty() {
            return;
        }
        chosen = Some(legal[s.below(legal.len())]);
    }
    let (a, b) = chosen.expect("set above");
    let w = cfg.weight.init(&mut s);
    g.write_conn_row(free, &ConnRow([a as f64, b as f64, 1.0, w]));
}

fn mutate_delete_conn(g: &mut GenomeTensors, key: RngKey) {
    let rows: Vec<usize> = g.conn_rows().collect();
    if rows.is_empty() {
        return;
    }
    let r = rows[key.stream().below(rows.len())];
    g.write_conn_row(r, &ConnRow::EMPTY);
}

/// Perturbs attributes of hidden and output nodes and of every connection.
/// Activation replacement applies to hidden nodes only; output activations
/// belong to the problem.
fn mutate_attributes(g: &mut GenomeTensors, key: RngKey, cfg: &MutationConfig, schema: &AttributeSchema) {
    let mut s = key.stream();
    let act_ids: Vec<usize> = cfg.activation_options.iter().filter_map(|a| schema.activation_id(*a).ok()).collect();
    let agg_ids: Vec<usize> = cfg.aggregation_options.iter().filter_map(|a| schema.aggregation_id(*a).ok()).collect();
    for r in 0..g.nodes.nrows() {
        if g.node_row_empty(r) {
            continue;
        }
        let k = g.node_key(r);
        if g.is_input(k) {
            continue;
        }
        g.nodes[[r, node_col::BIAS]] = cfg.bias.mutate(g.nodes[[r, node_col::BIAS]], &mut s);
        g.nodes[[r, node_col::RESPONSE]] = cfg.response.mutate(g.nodes[[r, node_col::RESPONSE]], &mut s);
        if s.uniform() < cfg.aggregation_replace_rate && !agg_ids.is_empty() {
            g.nodes[[r, node_col::AGGREGATION]] = agg_ids[s.below(agg_ids.len())] as f64;
        }
        if s.uniform() < cfg.activation_replace_rate && !act_ids.is_empty() && !g.is_output(k) {
            g.nodes[[r, node_col::ACTIVATION]] = act_ids[s.below(act_ids.len())] as f64;
        }
    }
    for r in 0..g.conns.nrows() {
        if g.conn_row_empty(r) {
            continue;
        }
        g.conns[[r, conn_col::WEIGHT]] = cfg.weight.mutate(g.conns[[r, conn_col::WEIGHT]], &mut s);
    }
}

// ---------------------------------------------------------------------------
// Crossover and distance
// ---------------------------------------------------------------------------

fn check_same_shape(a: &GenomeTensors, b: &GenomeTensors) -> Result<()> {
    if a.limits() != b.limits() || a.num_inputs != b.num_inputs || a.num_outputs != b.num_outputs {
        return Err(Error::ShapeMismatch(format!(
            "genomes differ in limits or io: {:?}/{}x{} vs {:?}/{}x{}",
            a.limits(),
            a.num_inputs,
            a.num_outputs,
            b.limits(),
            b.num_inputs,
            b.num_outputs
        )));
    }
    Ok(())
}

/// Child with `fit`'s topology. Genes whose marker also exists in `other`
/// take each attribute from a parent chosen by a fair coin.
pub fn crossover(fit: &GenomeTensors, other: &GenomeTensors, key: RngKey) -> Result<GenomeTensors> {
    check_same_shape(fit, other)?;
    let mut child = fit.clone();
    let mut s = key.stream();

    let mut other_nodes: Vec<(u64, usize)> = other.node_rows().map(|r| (other.node_key(r), r)).collect();
    other_nodes.sort_unstable();
    for r in 0..child.nodes.nrows() {
        if child.node_row_empty(r) {
            continue;
        }
        let key = child.node_key(r);
        if let Ok(i) = other_nodes.binary_search_by_key(&key, |e| e.0) {
            let or = other_nodes[i].1;
            for col in 1..NODE_WIDTH {
                if s.coin() {
                    child.nodes[[r, col]] = other.nodes[[or, col]];
                }
            }
        }
    }

    let mut other_conns: Vec<((u64, u64), usize)> = other.conn_rows().map(|r| (other.conn_pair(r), r)).collect();
    other_conns.sort_unstable();
    for r in 0..child.conns.nrows() {
        if child.conn_row_empty(r) {
            continue;
        }
        let pair = child.conn_pair(r);
        if let Ok(i) = other_conns.binary_search_by_key(&pair, |e| e.0) {
            let or = other_conns[i].1;
            for col in 3..CONN_WIDTH {
                if s.coin() {
                    child.conns[[r, col]] = other.conns[[or, col]];
                }
            }
        }
    }
    Ok(child)
}

fn node_attr_diff(a: &GenomeTensors, ra: usize, b: &GenomeTensors, rb: usize) -> f64 {
    let bias = (a.nodes[[ra, node_col::BIAS]] - b.nodes[[rb, node_col::BIAS]]).abs();
    let resp = (a.nodes[[ra, node_col::RESPONSE]] - b.nodes[[rb, node_col::RESPONSE]]).abs();
    let agg = f64::from(a.nodes[[ra, node_col::AGGREGATION]] != b.nodes[[rb, node_col::AGGREGATION]]);
    let act = f64::from(a.nodes[[ra, node_col::ACTIVATION]] != b.nodes[[rb, node_col::ACTIVATION]]);
    (bias + resp + agg + act) / NODE_ATTRS as f64
}

fn conn_attr_diff(a: &GenomeTensors, ra: usize, b: &GenomeTensors, rb: usize) -> f64 {
    (a.conns[[ra, conn_col::WEIGHT]] - b.conns[[rb, conn_col::WEIGHT]]).abs() / CONN_ATTRS as f64
}

/// Distance contribution of one gene class, given both genomes' genes as
/// `(marker, row)` sorted by marker.
fn gene_class_distance<M: Ord + Copy>(
    left: &[(M, usize)],
    right: &[(M, usize)],
    attr_diff: impl Fn(usize, usize) -> f64,
    cfg: &DistanceConfig,
) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut disjoint, mut matching, mut diff_sum) = (0usize, 0usize, 0.0);
    while i < left.len() && j < right.len() {
        match left[i].0.cmp(&right[j].0) {
            std::cmp::Ordering::Less => {
                disjoint += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                disjoint += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                matching += 1;
                diff_sum += attr_diff(left[i].1, right[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    disjoint += (left.len() - i) + (right.len() - j);
    let norm = left.len().max(right.len()).max(1) as f64;
    let homologous = if matching == 0 { 0.0 } else { diff_sum / matching as f64 };
    cfg.compatibility_disjoint * disjoint as f64 / norm + cfg.compatibility_homologous * homologous
}

/// Compatibility distance: a disjoint-count term normalized by the larger
/// genome plus a mean attribute-difference term over matching genes, summed
/// over nodes and connections.
pub fn distance(g1: &GenomeTensors, g2: &GenomeTensors, cfg: &DistanceConfig) -> Result<f64> {
    check_same_shape(g1, g2)?;
    Ok(distance_unchecked(g1, g2, cfg))
}

pub(crate) fn distance_unchecked(g1: &GenomeTensors, g2: &GenomeTensors, cfg: &DistanceConfig) -> f64 {
    distance_indexed(g1, &GeneIndex::new(g1), g2, &GeneIndex::new(g2), cfg)
}

/// Genes of one genome sorted by historical marker, reusable across many
/// distance computations against the same genome.
#[derive(Debug, Clone, Default)]
pub struct GeneIndex {
    nodes: Vec<(u64, usize)>,
    conns: Vec<((u64, u64), usize)>,
}

impl GeneIndex {
    pub fn new(g: &GenomeTensors) -> Self {
        let mut nodes: Vec<(u64, usize)> = g.node_rows().map(|r| (g.node_key(r), r)).collect();
        nodes.sort_unstable();
        let mut conns: Vec<((u64, u64), usize)> = g.conn_rows().map(|r| (g.conn_pair(r), r)).collect();
        conns.sort_unstable();
        GeneIndex { nodes, conns }
    }
}

/// [`distance`] with precomputed indexes; shapes are not checked.
pub fn distance_indexed(g1: &GenomeTensors, i1: &GeneIndex, g2: &GenomeTensors, i2: &GeneIndex, cfg: &DistanceConfig) -> f64 {
    let d_nodes = gene_class_distance(&i1.nodes, &i2.nodes, |a, b| node_attr_diff(g1, a, g2, b), cfg);
    let d_conns = gene_class_distance(&i1.conns, &i2.conns, |a, b| conn_attr_diff(g1, a, g2, b), cfg);
    d_nodes + d_conns
}
