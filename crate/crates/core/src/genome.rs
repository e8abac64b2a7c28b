//! Fixed-shape tensor encoding of genomes and populations.
//!
//! A node row is `[key, bias, response, aggregation_id, activation_id]` and a
//! connection row is `[in_key, out_key, enabled, weight]`. Unused rows are NaN
//! in every cell; the first cell is the canonical emptiness test. Function
//! attributes are stored as indices into the [`AttributeSchema`] registries,
//! which belong to the run rather than to individual genomes.

use ndarray::{s, Array2, Array3, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{Activation, Aggregation};

/// Number of node attributes (bias, response, aggregation, activation).
pub const NODE_ATTRS: usize = 4;
/// Number of connection attributes (weight).
pub const CONN_ATTRS: usize = 1;
pub const NODE_WIDTH: usize = 1 + NODE_ATTRS;
pub const CONN_WIDTH: usize = 3 + CONN_ATTRS;

/// Column indices of a node row.
pub mod node_col {
    pub const KEY: usize = 0;
    pub const BIAS: usize = 1;
    pub const RESPONSE: usize = 2;
    pub const AGGREGATION: usize = 3;
    pub const ACTIVATION: usize = 4;
}

/// Column indices of a connection row.
pub mod conn_col {
    pub const IN: usize = 0;
    pub const OUT: usize = 1;
    pub const ENABLED: usize = 2;
    pub const WEIGHT: usize = 3;
}

/// Function registries shared by every genome of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub activations: Vec<Activation>,
    pub aggregations: Vec<Aggregation>,
}

impl AttributeSchema {
    pub fn new(activations: Vec<Activation>, aggregations: Vec<Aggregation>) -> Self {
        AttributeSchema { activations, aggregations }
    }

    pub fn node_attr_count(&self) -> usize {
        NODE_ATTRS
    }

    pub fn conn_attr_count(&self) -> usize {
        CONN_ATTRS
    }

    pub fn activation_id(&self, act: Activation) -> Result<usize> {
        self.activations
            .iter()
            .position(|a| *a == act)
            .ok_or_else(|| Error::UnknownFunction(act.name().to_string()))
    }

    pub fn aggregation_id(&self, agg: Aggregation) -> Result<usize> {
        self.aggregations
            .iter()
            .position(|a| *a == agg)
            .ok_or_else(|| Error::UnknownFunction(agg.name().to_string()))
    }

    pub fn activation(&self, id: usize) -> Result<Activation> {
        self.activations
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownFunction(format!("activation id {id}")))
    }

    pub fn aggregation(&self, id: usize) -> Result<Aggregation> {
        self.aggregations
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownFunction(format!("aggregation id {id}")))
    }
}

impl Default for AttributeSchema {
    fn default() -> Self {
        AttributeSchema::new(vec![Activation::Tanh], vec![Aggregation::Sum])
    }
}

/// Readable node record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGene {
    pub key: u64,
    pub bias: f64,
    pub response: f64,
    pub aggregation: Aggregation,
    pub activation: Activation,
}

/// Readable connection record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnGene {
    pub input: u64,
    pub output: u64,
    pub enabled: bool,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRow(pub [f64; NODE_WIDTH]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnRow(pub [f64; CONN_WIDTH]);

impl NodeRow {
    pub const EMPTY: NodeRow = NodeRow([f64::NAN; NODE_WIDTH]);

    pub fn key(&self) -> u64 {
        self.0[node_col::KEY] as u64
    }
}

impl ConnRow {
    pub const EMPTY: ConnRow = ConnRow([f64::NAN; CONN_WIDTH]);

    pub fn pair(&self) -> (u64, u64) {
        (self.0[conn_col::IN] as u64, self.0[conn_col::OUT] as u64)
    }
}

pub fn encode_node(gene: &NodeGene, schema: &AttributeSchema) -> Result<NodeRow> {
    let agg = schema.aggregation_id(gene.aggregation)?;
    let act = schema.activation_id(gene.activation)?;
    Ok(NodeRow([gene.key as f64, gene.bias, gene.response, agg as f64, act as f64]))
}

pub fn encode_conn(gene: &ConnGene) -> ConnRow {
    ConnRow([
        gene.input as f64,
        gene.output as f64,
        if gene.enabled { 1.0 } else { 0.0 },
        gene.weight,
    ])
}

fn is_marker(x: f64) -> bool {
    x.is_finite() && x >= 0.0 && x.fract() == 0.0
}

fn decode_node_row(row: ArrayView1<'_, f64>, index: usize, schema: &AttributeSchema) -> Result<Option<NodeGene>> {
    if row.iter().all(|x| x.is_nan()) {
        return Ok(None);
    }
    let corrupt = Error::CorruptRow { table: "node", row: index };
    if row.iter().any(|x| !x.is_finite())
        || !is_marker(row[node_col::KEY])
        || !is_marker(row[node_col::AGGREGATION])
        || !is_marker(row[node_col::ACTIVATION])
    {
        return Err(corrupt);
    }
    Ok(Some(NodeGene {
        key: row[node_col::KEY] as u64,
        bias: row[node_col::BIAS],
        response: row[node_col::RESPONSE],
        aggregation: schema.aggregation(row[node_col::AGGREGATION] as usize)?,
        activation: schema.activation(row[node_col::ACTIVATION] as usize)?,
    }))
}

fn decode_conn_row(row: ArrayView1<'_, f64>, index: usize) -> Result<Option<ConnGene>> {
    if row.iter().all(|x| x.is_nan()) {
        return Ok(None);
    }
    let e = row[conn_col::ENABLED];
    if row.iter().any(|x| !x.is_finite())
        || !is_marker(row[conn_col::IN])
        || !is_marker(row[conn_col::OUT])
        || (e != 0.0 && e != 1.0)
    {
        return Err(Error::CorruptRow { table: "connection", row: index });
    }
    Ok(Some(ConnGene {
        input: row[conn_col::IN] as u64,
        output: row[conn_col::OUT] as u64,
        enabled: e == 1.0,
        weight: row[conn_col::WEIGHT],
    }))
}

pub fn decode_node(row: &NodeRow, schema: &AttributeSchema) -> Result<Option<NodeGene>> {
    decode_node_row(ArrayView1::from(&row.0[..]), 0, schema)
}

pub fn decode_conn(row: &ConnRow) -> Result<Option<ConnGene>> {
    decode_conn_row(ArrayView1::from(&row.0[..]), 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenomeLimits {
    pub max_nodes: usize,
    pub max_conns: usize,
}

impl GenomeLimits {
    pub fn new(max_nodes: usize, max_conns: usize) -> Self {
        GenomeLimits { max_nodes, max_conns }
    }
}

/// One genome: padded node tensor `max_nodes × 5` and connection tensor
/// `max_conns × 4`.
///
/// Equality treats NaN cells as equal to each other, so two genomes compare
/// equal exactly when they have the same shape, io widths and row contents.
#[derive(Debug, Clone)]
pub struct GenomeTensors {
    pub nodes: Array2<f64>,
    pub conns: Array2<f64>,
    pub num_inputs: usize,
    pub num_outputs: usize,
}

/// Decoded genome: only the non-empty rows, in row order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodedGenome {
    pub nodes: Vec<NodeGene>,
    pub conns: Vec<ConnGene>,
}

fn cells_eq<'a>(
    a: impl Iterator<Item = &'a f64>,
    sa: &[usize],
    b: impl Iterator<Item = &'a f64>,
    sb: &[usize],
) -> bool {
    sa == sb && a.zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
}

impl PartialEq for GenomeTensors {
    fn eq(&self, other: &Self) -> bool {
        self.num_inputs == other.num_inputs
            && self.num_outputs == other.num_outputs
            && cells_eq(self.nodes.iter(), self.nodes.shape(), other.nodes.iter(), other.nodes.shape())
            && cells_eq(self.conns.iter(), self.conns.shape(), other.conns.iter(), other.conns.shape())
    }
}

impl GenomeTensors {
    /// All-NaN genome with the given limits.
    pub fn empty(num_inputs: usize, num_outputs: usize, limits: GenomeLimits) -> Self {
        GenomeTensors {
            nodes: Array2::from_elem((limits.max_nodes, NODE_WIDTH), f64::NAN),
            conns: Array2::from_elem((limits.max_conns, CONN_WIDTH), f64::NAN),
            num_inputs,
            num_outputs,
        }
    }

    pub fn limits(&self) -> GenomeLimits {
        GenomeLimits::new(self.nodes.nrows(), self.conns.nrows())
    }

    pub fn input_keys(&self) -> std::ops::Range<u64> {
        0..self.num_inputs as u64
    }

    pub fn output_keys(&self) -> std::ops::Range<u64> {
        self.num_inputs as u64..(self.num_inputs + self.num_outputs) as u64
    }

    pub fn is_input(&self, key: u64) -> bool {
        key < self.num_inputs as u64
    }

    pub fn is_output(&self, key: u64) -> bool {
        self.output_keys().contains(&key)
    }

    #[inline]
    pub fn node_row_empty(&self, row: usize) -> bool {
        self.nodes[[row, node_col::KEY]].is_nan()
    }

    #[inline]
    pub fn conn_row_empty(&self, row: usize) -> bool {
        self.conns[[row, conn_col::IN]].is_nan()
    }

    /// Row indices of non-empty node rows.
    pub fn node_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.nrows()).filter(move |&r| !self.node_row_empty(r))
    }

    /// Row indices of non-empty connection rows.
    pub fn conn_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.conns.nrows()).filter(move |&r| !self.conn_row_empty(r))
    }

    pub fn node_key(&self, row: usize) -> u64 {
        self.nodes[[row, node_col::KEY]] as u64
    }

    pub fn conn_pair(&self, row: usize) -> (u64, u64) {
        (self.conns[[row, conn_col::IN]] as u64, self.conns[[row, conn_col::OUT]] as u64)
    }

    pub fn conn_enabled(&self, row: usize) -> bool {
        self.conns[[row, conn_col::ENABLED]] == 1.0
    }

    pub fn node_count(&self) -> usize {
        self.node_rows().count()
    }

    pub fn conn_count(&self) -> usize {
        self.conn_rows().count()
    }

    pub fn find_node(&self, key: u64) -> Option<usize> {
        let k = key as f64;
        (0..self.nodes.nrows()).find(|&r| self.nodes[[r, node_col::KEY]] == k)
    }

    pub fn find_conn(&self, input: u64, output: u64) -> Option<usize> {
        let (i, o) = (input as f64, output as f64);
        (0..self.conns.nrows()).find(|&r| self.conns[[r, conn_col::IN]] == i && self.conns[[r, conn_col::OUT]] == o)
    }

    pub fn first_free_node_row(&self) -> Option<usize> {
        (0..self.nodes.nrows()).find(|&r| self.node_row_empty(r))
    }

    pub fn first_free_conn_row(&self) -> Option<usize> {
        (0..self.conns.nrows()).find(|&r| self.conn_row_empty(r))
    }

    pub fn node_row(&self, row: usize) -> NodeRow {
        let mut out = [0.0; NODE_WIDTH];
        out.iter_mut().zip(self.nodes.row(row)).for_each(|(o, x)| *o = *x);
        NodeRow(out)
    }

    pub fn conn_row(&self, row: usize) -> ConnRow {
        let mut out = [0.0; CONN_WIDTH];
        out.iter_mut().zip(self.conns.row(row)).for_each(|(o, x)| *o = *x);
        ConnRow(out)
    }

    pub(crate) fn write_node_row(&mut self, row: usize, values: &NodeRow) {
        self.nodes.row_mut(row).iter_mut().zip(values.0).for_each(|(c, v)| *c = v);
    }

    pub(crate) fn write_conn_row(&mut self, row: usize, values: &ConnRow) {
        self.conns.row_mut(row).iter_mut().zip(values.0).for_each(|(c, v)| *c = v);
    }

    /// Largest node key present, if any.
    pub fn max_node_key(&self) -> Option<u64> {
        self.node_rows().map(|r| self.node_key(r)).max()
    }
}

/// Copies `nodes` and `conns` into the prefix rows of fresh NaN tensors.
pub fn pad_genome(
    nodes: &[NodeRow],
    conns: &[ConnRow],
    num_inputs: usize,
    num_outputs: usize,
    limits: GenomeLimits,
) -> Result<GenomeTensors> {
    if nodes.len() > limits.max_nodes {
        return Err(Error::GenomeFull("node"));
    }
    if conns.len() > limits.max_conns {
        return Err(Error::GenomeFull("connection"));
    }
    let mut g = GenomeTensors::empty(num_inputs, num_outputs, limits);
    for (i, n) in nodes.iter().enumerate() {
        g.write_node_row(i, n);
    }
    for (i, c) in conns.iter().enumerate() {
        g.write_conn_row(i, c);
    }
    Ok(g)
}

/// Encodes readable genes and pads them.
pub fn pad_genes(
    nodes: &[NodeGene],
    conns: &[ConnGene],
    num_inputs: usize,
    num_outputs: usize,
    limits: GenomeLimits,
    schema: &AttributeSchema,
) -> Result<GenomeTensors> {
    let node_rows = nodes.iter().map(|n| encode_node(n, schema)).collect::<Result<Vec<_>>>()?;
    let conn_rows: Vec<_> = conns.iter().map(encode_conn).collect();
    pad_genome(&node_rows, &conn_rows, num_inputs, num_outputs, limits)
}

/// Non-empty rows as readable records, in row order.
pub fn decode_genome(g: &GenomeTensors, schema: &AttributeSchema) -> Result<DecodedGenome> {
    let mut out = DecodedGenome::default();
    for (i, row) in g.nodes.axis_iter(Axis(0)).enumerate() {
        if let Some(n) = decode_node_row(row, i, schema)? {
            out.nodes.push(n);
        }
    }
    for (i, row) in g.conns.axis_iter(Axis(0)).enumerate() {
        if let Some(c) = decode_conn_row(row, i)? {
            out.conns.push(c);
        }
    }
    Ok(out)
}

/// Whole population as two stacked tensors `P × max_nodes × 5` and
/// `P × max_conns × 4`.
#[derive(Debug, Clone)]
pub struct PopulationTensors {
    pub nodes: Array3<f64>,
    pub conns: Array3<f64>,
    pub num_inputs: usize,
    pub num_outputs: usize,
}

impl PartialEq for PopulationTensors {
    fn eq(&self, other: &Self) -> bool {
        self.num_inputs == other.num_inputs
            && self.num_outputs == other.num_outputs
            && cells_eq(self.nodes.iter(), self.nodes.shape(), other.nodes.iter(), other.nodes.shape())
            && cells_eq(self.conns.iter(), self.conns.shape(), other.conns.iter(), other.conns.shape())
    }
}

impl PopulationTensors {
    pub fn len(&self) -> usize {
        self.nodes.len_of(Axis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn limits(&self) -> GenomeLimits {
        GenomeLimits::new(self.nodes.len_of(Axis(1)), self.conns.len_of(Axis(1)))
    }

    /// Slice `i` along the population axis.
    pub fn genome(&self, i: usize) -> GenomeTensors {
        GenomeTensors {
            nodes: self.nodes.slice(s![i, .., ..]).to_owned(),
            conns: self.conns.slice(s![i, .., ..]).to_owned(),
            num_inputs: self.num_inputs,
            num_outputs: self.num_outputs,
        }
    }

    pub fn genomes(&self) -> Vec<GenomeTensors> {
        (0..self.len()).map(|i| self.genome(i)).collect()
    }
}

/// Stacks genomes along a new leading axis.
pub fn concat_population(genomes: &[GenomeTensors]) -> Result<PopulationTensors> {
    let first = genomes
        .first()
        .ok_or_else(|| Error::ShapeMismatch("empty population".into()))?;
    let limits = first.limits();
    for (i, g) in genomes.iter().enumerate() {
        if g.limits() != limits || g.num_inputs != first.num_inputs || g.num_outputs != first.num_outputs {
            return Err(Error::ShapeMismatch(format!(
                "genome {i} has limits ({}, {}) and io ({}, {}), expected ({}, {}) and ({}, {})",
                g.limits().max_nodes,
                g.limits().max_conns,
                g.num_inputs,
                g.num_outputs,
                limits.max_nodes,
                limits.max_conns,
                first.num_inputs,
                first.num_outputs
            )));
        }
    }
    let mut nodes = Array3::from_elem((genomes.len(), limits.max_nodes, NODE_WIDTH), f64::NAN);
    let mut conns = Array3::from_elem((genomes.len(), limits.max_conns, CONN_WIDTH), f64::NAN);
    for (i, g) in genomes.iter().enumerate() {
        nodes.slice_mut(s![i, .., ..]).assign(&g.nodes);
        conns.slice_mut(s![i, .., ..]).assign(&g.conns);
    }
    Ok(PopulationTensors {
        nodes,
        conns,
        num_inputs: first.num_inputs,
        num_outputs: first.num_outputs,
    })
}
