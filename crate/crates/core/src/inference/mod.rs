//! Two-stage feedforward inference.
//!
//! [`transform`] runs once per genome and produces the topological node order
//! and the dense `max_nodes × max_nodes × noa(c)` expanded-connection tensor
//! (NaN where no enabled connection exists). [`forward`] then seeds the input
//! rows of a NaN value buffer and evaluates every other node in order as
//! `act(response * agg(w_j * v_j) + bias)`.
//!
//! Aggregation inputs are always taken in ascending source-key order, so the
//! result does not depend on where rows happen to sit in the padded tensors.

mod functions;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ndarray::{Array2, Array3, ArrayView2};
use rayon::prelude::*;

pub use functions::{apply_activation, apply_aggregation, Activation, Aggregation};

use crate::error::{Error, Result};
use crate::genome::{conn_col, node_col, AttributeSchema, GenomeTensors, CONN_ATTRS};
use crate::validate::find_cycle;

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedNetwork {
    /// Copy of the genome's node tensor.
    pub nodes: Array2<f64>,
    /// Row indices of non-empty nodes in evaluation order.
    order: Vec<usize>,
    /// `expanded[[i, j, 0]]` is the weight of the enabled connection from the
    /// node in row `i` to the node in row `j`, NaN otherwise.
    pub expanded: Array3<f64>,
    /// `(key, row)` of every node, sorted by key.
    pub key_to_row: Vec<(u64, usize)>,
    /// Incoming edges of row `r` are `in_src[in_start[r]..in_start[r + 1]]`
    /// (source rows) with weights `in_weight[..]`, sorted by source key.
    in_start: Vec<usize>,
    in_src: Vec<usize>,
    in_weight: Vec<f64>,
    input_rows: Vec<usize>,
    output_rows: Vec<usize>,
    is_input_row: Vec<bool>,
}

/// Node value buffer `v`, NaN-initialized, plus aggregation scratch space.
#[derive(Debug, Clone, Default)]
pub struct ValueBuffer {
    pub values: Vec<f64>,
    scratch: Vec<f64>,
}

impl ValueBuffer {
    pub fn new(max_nodes: usize) -> Self {
        ValueBuffer { values: vec![f64::NAN; max_nodes], scratch: Vec::new() }
    }
}

fn lookup(sorted: &[(u64, usize)], key: u64) -> Option<usize> {
    sorted.binary_search_by_key(&key, |e| e.0).ok().map(|i| sorted[i].1)
}

/// Converts a genome into inference-ready form.
pub fn transform(g: &GenomeTensors) -> Result<TransformedNetwork> {
    let max_nodes = g.nodes.nrows();
    let mut key_to_row: Vec<(u64, usize)> = g.node_rows().map(|r| (g.node_key(r), r)).collect();
    key_to_row.sort_unstable();

    // (target row, source key, source row, weight)
    let mut edges: Vec<(usize, u64, usize, f64)> = Vec::with_capacity(g.conns.nrows());
    for r in g.conn_rows() {
        let (a, b) = g.conn_pair(r);
        let (Some(ra), Some(rb)) = (lookup(&key_to_row, a), lookup(&key_to_row, b)) else {
            return Err(Error::DanglingEndpoint(a, b));
        };
        if g.conn_enabled(r) {
            edges.push((rb, a, ra, g.conns[[r, conn_col::WEIGHT]]));
        }
    }
    edges.sort_unstable_by_key(|e| (e.0, e.1));

    let mut expanded = Array3::from_elem((max_nodes, max_nodes, CONN_ATTRS), f64::NAN);
    let mut in_start = vec![0usize; max_nodes + 1];
    let mut out_start = vec![0usize; max_nodes + 1];
    for &(rb, _, ra, w) in &edges {
        expanded[[ra, rb, 0]] = w;
        in_start[rb + 1] += 1;
        out_start[ra + 1] += 1;
    }
    for i in 0..max_nodes {
        in_start[i + 1] += in_start[i];
        out_start[i + 1] += out_start[i];
    }
    let in_src: Vec<usize> = edges.iter().map(|e| e.2).collect();
    let in_weight: Vec<f64> = edges.iter().map(|e| e.3).collect();
    let mut out_dst = vec![0usize; edges.len()];
    let mut fill = out_start.clone();
    for &(rb, _, ra, _) in &edges {
        out_dst[fill[ra]] = rb;
        fill[ra] += 1;
    }

    // Kahn's algorithm, smallest key first.
    let mut indegree: Vec<usize> = (0..max_nodes).map(|r| in_start[r + 1] - in_start[r]).collect();
    let mut ready: BinaryHeap<Reverse<(u64, usize)>> =
        key_to_row.iter().filter(|&&(_, r)| indegree[r] == 0).map(|&(k, r)| Reverse((k, r))).collect();
    let mut order = Vec::with_capacity(key_to_row.len());
    while let Some(Reverse((_, r))) = ready.pop() {
        order.push(r);
        for &t in &out_dst[out_start[r]..out_start[r + 1]] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.push(Reverse((g.node_key(t), t)));
            }
        }
    }
    if order.len() != key_to_row.len() {
        let pairs: Vec<(u64, u64)> = edges.iter().map(|e| (e.1, g.node_key(e.0))).collect();
        return Err(Error::CycleDetected(find_cycle(&pairs).unwrap_or_default()));
    }

    let row_of = |k: u64| lookup(&key_to_row, k).ok_or_else(|| Error::KeyNotFound(format!("node {k}")));
    let input_rows = g.input_keys().map(row_of).collect::<Result<Vec<_>>>()?;
    let output_rows = g.output_keys().map(row_of).collect::<Result<Vec<_>>>()?;
    let mut is_input_row = vec![false; max_nodes];
    for &r in &input_rows {
        is_input_row[r] = true;
    }

    Ok(TransformedNetwork {
        nodes: g.nodes.clone(),
        order,
        expanded,
        key_to_row,
        in_start,
        in_src,
        in_weight,
        input_rows,
        output_rows,
        is_input_row,
    })
}

impl TransformedNetwork {
    pub fn max_nodes(&self) -> usize {
        self.nodes.nrows()
    }

    pub fn num_inputs(&self) -> usize {
        self.input_rows.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_rows.len()
    }

    pub fn order_rows(&self) -> &[usize] {
        &self.order
    }

    pub fn order_keys(&self) -> Vec<u64> {
        self.order.iter().map(|&r| self.nodes[[r, node_col::KEY]] as u64).collect()
    }

    /// `N_order` as a length-`max_nodes` tensor of row indices, NaN-padded.
    pub fn order_tensor(&self) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.max_nodes()];
        for (slot, &r) in self.order.iter().enumerate() {
            out[slot] = r as f64;
        }
        out
    }

    pub fn output_rows(&self) -> &[usize] {
        &self.output_rows
    }

    fn seed(&self, inputs: &[f64], buf: &mut ValueBuffer) -> Result<()> {
        if inputs.len() != self.input_rows.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} inputs, got {}",
                self.input_rows.len(),
                inputs.len()
            )));
        }
        if let Some(i) = inputs.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput(i));
        }
        buf.values.clear();
        buf.values.resize(self.max_nodes(), f64::NAN);
        for (&r, &x) in self.input_rows.iter().zip(inputs) {
            buf.values[r] = x;
        }
        Ok(())
    }

    #[inline]
    fn node_value(&self, row: usize, xs: &[f64], schema: &AttributeSchema) -> Result<f64> {
        let n = self.nodes.row(row);
        let agg = if xs.is_empty() {
            0.0
        } else {
            apply_aggregation(&schema.aggregations, n[node_col::AGGREGATION] as usize, xs)?
        };
        apply_activation(
            &schema.activations,
            n[node_col::ACTIVATION] as usize,
            n[node_col::RESPONSE] * agg + n[node_col::BIAS],
        )
    }

    /// Evaluates into `buf`; node values stay available in `buf.values`.
    pub fn forward_into(&self, inputs: &[f64], schema: &AttributeSchema, buf: &mut ValueBuffer) -> Result<()> {
        self.seed(inputs, buf)?;
        let mut xs = std::mem::take(&mut buf.scratch);
        for &r in &self.order {
            if self.is_input_row[r] {
                continue;
            }
            xs.clear();
            let span = self.in_start[r]..self.in_start[r + 1];
            xs.extend(self.in_src[span.clone()].iter().zip(&self.in_weight[span]).map(|(&src, &w)| w * buf.values[src]));
            buf.values[r] = self.node_value(r, &xs, schema)?;
        }
        buf.scratch = xs;
        Ok(())
    }

    pub fn forward(&self, inputs: &[f64], schema: &AttributeSchema) -> Result<Vec<f64>> {
        let mut buf = ValueBuffer::new(self.max_nodes());
        self.forward_into(inputs, schema, &mut buf)?;
        Ok(self.output_rows.iter().map(|&r| buf.values[r]).collect())
    }

    /// Same computation as [`forward`](Self::forward), reading connections
    /// only from the dense expanded tensor (`C_exp[:, k]` column scan).
    pub fn forward_dense(&self, inputs: &[f64], schema: &AttributeSchema) -> Result<Vec<f64>> {
        let mut buf = ValueBuffer::new(self.max_nodes());
        self.seed(inputs, &mut buf)?;
        let rows_by_key: Vec<usize> = self.key_to_row.iter().map(|e| e.1).collect();
        let mut xs = Vec::new();
        for &r in &self.order {
            if self.is_input_row[r] {
                continue;
            }
            xs.clear();
            for &src in &rows_by_key {
                let w = self.expanded[[src, r, 0]];
                if !w.is_nan() {
                    xs.push(w * buf.values[src]);
                }
            }
            buf.values[r] = self.node_value(r, &xs, schema)?;
        }
        Ok(self.output_rows.iter().map(|&r| buf.values[r]).collect())
    }
}

pub fn forward(t: &TransformedNetwork, inputs: &[f64], schema: &AttributeSchema) -> Result<Vec<f64>> {
    t.forward(inputs, schema)
}

/// Evaluates every network on every input row; result is
/// `P × B × num_outputs`. Work is split across the population axis on the
/// current rayon pool; each element equals the corresponding [`forward`].
pub fn batch_forward(pop: &[TransformedNetwork], inputs: ArrayView2<'_, f64>, schema: &AttributeSchema) -> Result<Array3<f64>> {
    let Some(first) = pop.first() else {
        return Ok(Array3::zeros((0, inputs.nrows(), 0)));
    };
    let (ni, no) = (first.num_inputs(), first.num_outputs());
    if inputs.ncols() != ni {
        return Err(Error::ShapeMismatch(format!("inputs have {} columns, networks take {ni}", inputs.ncols())));
    }
    if let Some(p) = pop.iter().position(|t| t.num_inputs() != ni || t.num_outputs() != no) {
        return Err(Error::ShapeMismatch(format!("network {p} has a different io shape")));
    }
    let batch = inputs.nrows();
    let rows: Vec<Vec<f64>> = inputs.outer_iter().map(|r| r.to_vec()).collect();
    let per_net: Vec<Vec<f64>> = pop
        .par_iter()
        .map(|t| {
            let mut buf = ValueBuffer::new(t.max_nodes());
            let mut out = Vec::with_capacity(batch * no);
            for x in &rows {
                t.forward_into(x, schema, &mut buf)?;
                out.extend(t.output_rows.iter().map(|&r| buf.values[r]));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = per_net.into_iter().flatten().collect();
    Ok(Array3::from_shape_vec((pop.len(), batch, no), flat).expect("shape computed above"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{pad_genes, ConnGene, GenomeLimits, NodeGene};
    use ndarray::array;

    fn schema() -> AttributeSchema {
        AttributeSchema::new(vec![Activation::Identity, Activation::Tanh], vec![Aggregation::Sum])
    }

    fn n(key: u64, bias: f64, act: Activation) -> NodeGene {
        NodeGene { key, bias, response: 1.0, aggregation: Aggregation::Sum, activation: act }
    }

    fn c(a: u64, b: u64, e: bool, w: f64) -> ConnGene {
        ConnGene { input: a, output: b, enabled: e, weight: w }
    }

    #[test]
    fn chain_order() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.0, Activation::Identity), n(2, 0.0, Activation::Identity)],
            &[c(0, 2, true, 0.7), c(2, 1, true, 0.5)],
            1,
            1,
            GenomeLimits::new(5, 4),
            &schema(),
        )
        .unwrap();
        let t = transform(&g).unwrap();
        assert_eq!(t.order_keys(), vec![0, 2, 1]);
        let ot = t.order_tensor();
        assert_eq!(&ot[..3], &[0.0, 2.0, 1.0]);
        assert!(ot[3].is_nan() && ot[4].is_nan());
    }

    #[test]
    fn disabled_edge_stays_nan() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.0, Activation::Identity), n(2, 0.0, Activation::Identity)],
            &[c(0, 2, true, 0.7), c(2, 1, false, 0.5)],
            1,
            1,
            GenomeLimits::new(4, 4),
            &schema(),
        )
        .unwrap();
        let t = transform(&g).unwrap();
        assert_eq!(t.expanded[[0, 2, 0]], 0.7);
        assert!(t.expanded[[2, 1, 0]].is_nan());
        let finite = t.expanded.iter().filter(|x| x.is_finite()).count();
        assert_eq!(finite, 1);
    }

    #[test]
    fn cycle_rejected() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.0, Activation::Identity), n(2, 0.0, Activation::Identity)],
            &[c(0, 2, true, 1.0), c(2, 0, true, 1.0)],
            1,
            1,
            GenomeLimits::new(4, 4),
            &schema(),
        )
        .unwrap();
        assert_eq!(transform(&g), Err(Error::CycleDetected(vec![0, 2])));
    }

    #[test]
    fn identity_network() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.0, Activation::Identity)],
            &[c(0, 1, true, 1.0)],
            1,
            1,
            GenomeLimits::new(3, 3),
            &schema(),
        )
        .unwrap();
        let t = transform(&g).unwrap();
        for x in [-2.5, 0.0, 3.25] {
            assert_eq!(t.forward(&[x], &schema()).unwrap(), vec![x]);
        }
    }

    #[test]
    fn tanh_single_edge() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.1, Activation::Tanh)],
            &[c(0, 1, true, 0.5)],
            1,
            1,
            GenomeLimits::new(3, 3),
            &schema(),
        )
        .unwrap();
        let out = transform(&g).unwrap().forward(&[1.0], &schema()).unwrap();
        // tanh(0.6) from its series-free closed form (e^1.2 - 1) / (e^1.2 + 1)
        let e = 1.2f64.exp();
        let oracle = (e - 1.0) / (e + 1.0);
        assert!((out[0] - oracle).abs() < 1e-15);
        assert!((out[0] - 0.537050).abs() < 1e-6);
    }

    #[test]
    fn two_inputs_identity() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.0, Activation::Identity), n(2, 0.1, Activation::Identity)],
            &[c(0, 2, true, 0.5), c(1, 2, true, -0.25)],
            2,
            1,
            GenomeLimits::new(4, 4),
            &schema(),
        )
        .unwrap();
        let out = transform(&g).unwrap().forward(&[1.0, 2.0], &schema()).unwrap();
        assert!((out[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn empty_fan_in_and_errors() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.3, Activation::Tanh)],
            &[],
            1,
            1,
            GenomeLimits::new(3, 3),
            &schema(),
        )
        .unwrap();
        let t = transform(&g).unwrap();
        assert_eq!(t.forward(&[5.0], &schema()).unwrap(), vec![0.3f64.tanh()]);
        assert_eq!(t.forward(&[f64::NAN], &schema()), Err(Error::NonFiniteInput(0)));
        assert!(matches!(t.forward(&[1.0, 2.0], &schema()), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn dense_matches_fast_path_and_batch() {
        let g = pad_genes(
            &[
                n(0, 0.0, Activation::Identity),
                n(1, 0.0, Activation::Identity),
                n(2, -0.2, Activation::Tanh),
                n(3, 0.4, Activation::Tanh),
            ],
            &[c(0, 3, true, 0.3), c(1, 3, true, -1.1), c(3, 2, true, 2.0), c(0, 2, true, 0.25), c(1, 2, false, 9.0)],
            2,
            1,
            GenomeLimits::new(6, 8),
            &schema(),
        )
        .unwrap();
        let t = transform(&g).unwrap();
        let x = array![[0.5, -1.0], [2.0, 0.25], [0.0, 0.0]];
        let batch = batch_forward(&[t.clone(), t.clone()], x.view(), &schema()).unwrap();
        for b in 0..3 {
            let row = x.row(b).to_vec();
            let fast = t.forward(&row, &schema()).unwrap();
            let dense = t.forward_dense(&row, &schema()).unwrap();
            assert_eq!(fast[0].to_bits(), dense[0].to_bits());
            assert_eq!(batch[[0, b, 0]].to_bits(), fast[0].to_bits());
            assert_eq!(batch[[1, b, 0]].to_bits(), fast[0].to_bits());
        }
    }
}
