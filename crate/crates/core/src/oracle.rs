//! Object-graph reference genome used only as a test oracle.
//!
//! Nodes and connections live in ordered maps; evaluation is plain memoized
//! recursion with activation math written out by name. Nothing here calls
//! into the tensor inference path.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::genome::{AttributeSchema, GenomeLimits, GenomeTensors};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleNode {
    pub bias: f64,
    pub response: f64,
    pub aggregation: String,
    pub activation: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleGenome {
    pub nodes: BTreeMap<u64, OracleNode>,
    /// `(in, out) -> (enabled, weight)`
    pub conns: BTreeMap<(u64, u64), (bool, f64)>,
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub limits: GenomeLimits,
}

fn activate(name: &str, x: f64) -> Result<f64> {
    Ok(match name {
        "identity" => x,
        "tanh" => x.tanh(),
        "sigmoid" => 1.0 / (1.0 + (-x).exp()),
        "relu" => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        "sin" => x.sin(),
        other => return Err(Error::UnknownFunction(other.to_string())),
    })
}

fn aggregate(name: &str, xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Ok(0.0);
    }
    Ok(match name {
        "sum" => xs.iter().sum(),
        "product" => xs.iter().product(),
        "max" => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "mean" => xs.iter().sum::<f64>() / xs.len() as f64,
        other => return Err(Error::UnknownFunction(other.to_string())),
    })
}

impl OracleGenome {
    pub fn new(num_inputs: usize, num_outputs: usize, limits: GenomeLimits) -> Self {
        OracleGenome { nodes: BTreeMap::new(), conns: BTreeMap::new(), num_inputs, num_outputs, limits }
    }

    fn is_protected(&self, key: u64) -> bool {
        key < (self.num_inputs + self.num_outputs) as u64
    }

    /// Reads the tensors row by row; empty rows (NaN key) are skipped.
    pub fn from_tensors(g: &GenomeTensors, schema: &AttributeSchema) -> Result<Self> {
        let mut o = OracleGenome::new(g.num_inputs, g.num_outputs, g.limits());
        for row in g.nodes.outer_iter() {
            if row[0].is_nan() {
                continue;
            }
            let agg = schema.aggregations.get(row[3] as usize).ok_or_else(|| Error::UnknownFunction(format!("aggregation id {}", row[3])))?;
            let act = schema.activations.get(row[4] as usize).ok_or_else(|| Error::UnknownFunction(format!("activation id {}", row[4])))?;
            o.nodes.insert(
                row[0] as u64,
                OracleNode { bias: row[1], response: row[2], aggregation: agg.to_string(), activation: act.to_string() },
            );
        }
        for row in g.conns.outer_iter() {
            if row[0].is_nan() {
                continue;
            }
            o.conns.insert((row[0] as u64, row[1] as u64), (row[2] == 1.0, row[3]));
        }
        Ok(o)
    }

    /// Writes nodes then connections into fresh NaN tensors in map order.
    pub fn to_tensors(&self, limits: GenomeLimits, schema: &AttributeSchema) -> Result<GenomeTensors> {
        if self.nodes.len() > limits.max_nodes {
            return Err(Error::GenomeFull("node"));
        }
        if self.conns.len() > limits.max_conns {
            return Err(Error::GenomeFull("connection"));
        }
        let mut g = GenomeTensors::empty(self.num_inputs, self.num_outputs, limits);
        for (r, (&k, n)) in self.nodes.iter().enumerate() {
            let agg = schema.aggregations.iter().position(|a| a.to_string() == n.aggregation);
            let act = schema.activations.iter().position(|a| a.to_string() == n.activation);
            let agg = agg.ok_or_else(|| Error::UnknownFunction(n.aggregation.clone()))?;
            let act = act.ok_or_else(|| Error::UnknownFunction(n.activation.clone()))?;
            for (c, v) in [k as f64, n.bias, n.response, agg as f64, act as f64].into_iter().enumerate() {
                g.nodes[[r, c]] = v;
            }
        }
        for (r, (&(a, b), &(e, w))) in self.conns.iter().enumerate() {
            for (c, v) in [a as f64, b as f64, if e { 1.0 } else { 0.0 }, w].into_iter().enumerate() {
                g.conns[[r, c]] = v;
            }
        }
        Ok(g)
    }

    pub fn add_node(&mut self, key: u64, node: OracleNode) -> Result<()> {
        if self.nodes.contains_key(&key) {
            return Err(Error::DuplicateKey(key));
        }
        if self.nodes.len() >= self.limits.max_nodes {
            return Err(Error::GenomeFull("node"));
        }
        self.nodes.insert(key, node);
        Ok(())
    }

    pub fn remove_node(&mut self, key: u64) -> Result<()> {
        if self.is_protected(key) {
            return Err(Error::ProtectedNode(key));
        }
        if self.nodes.remove(&key).is_none() {
            return Err(Error::KeyNotFound(format!("node {key}")));
        }
        self.conns.retain(|&(a, b), _| a != key && b != key);
        Ok(())
    }

    pub fn add_conn(&mut self, input: u64, output: u64, enabled: bool, weight: f64) -> Result<()> {
        if !self.nodes.contains_key(&input) || !self.nodes.contains_key(&output) {
            return Err(Error::DanglingEndpoint(input, output));
        }
        if self.conns.contains_key(&(input, output)) {
            return Err(Error::DuplicateConn(input, output));
        }
        if self.conns.len() >= self.limits.max_conns {
            return Err(Error::GenomeFull("connection"));
        }
        self.conns.insert((input, output), (enabled, weight));
        Ok(())
    }

    pub fn remove_conn(&mut self, input: u64, output: u64) -> Result<()> {
        match self.conns.remove(&(input, output)) {
            Some(_) => Ok(()),
            None => Err(Error::KeyNotFound(format!("connection {input}->{output}"))),
        }
    }

    /// `index` 0 bias, 1 response, 2 aggregation id, 3 activation id.
    pub fn set_node_attr(&mut self, key: u64, index: usize, value: f64, schema: &AttributeSchema) -> Result<()> {
        let n = self.nodes.get_mut(&key).ok_or_else(|| Error::KeyNotFound(format!("node {key}")))?;
        match index {
            0 => n.bias = value,
            1 => n.response = value,
            2 => n.aggregation = schema.aggregation(value as usize)?.to_string(),
            3 => n.activation = schema.activation(value as usize)?.to_string(),
            _ => return Err(Error::AttrOutOfRange { index, count: 4 }),
        }
        Ok(())
    }

    pub fn set_conn_weight(&mut self, input: u64, output: u64, weight: f64) -> Result<()> {
        let c = self
            .conns
            .get_mut(&(input, output))
            .ok_or_else(|| Error::KeyNotFound(format!("connection {input}->{output}")))?;
        c.1 = weight;
        Ok(())
    }

    pub fn forward(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if inputs.len() != self.num_inputs {
            return Err(Error::ShapeMismatch(format!("expected {} inputs", self.num_inputs)));
        }
        let mut memo = BTreeMap::new();
        let mut visiting = Vec::new();
        let first_out = self.num_inputs as u64;
        (first_out..first_out + self.num_outputs as u64)
            .map(|k| self.value(k, inputs, &mut memo, &mut visiting))
            .collect()
    }

    fn value(&self, key: u64, inputs: &[f64], memo: &mut BTreeMap<u64, f64>, visiting: &mut Vec<u64>) -> Result<f64> {
        if let Some(&v) = memo.get(&key) {
            return Ok(v);
        }
        if (key as usize) < self.num_inputs {
            return Ok(inputs[key as usize]);
        }
        if let Some(pos) = visiting.iter().position(|&k| k == key) {
            return Err(Error::CycleDetected(visiting[pos..].to_vec()));
        }
        let node = self.nodes.get(&key).ok_or_else(|| Error::KeyNotFound(format!("node {key}")))?;
        visiting.push(key);
        let mut xs = Vec::new();
        for (&(a, b), &(enabled, w)) in &self.conns {
            if b == key && enabled {
                xs.push(w * self.value(a, inputs, memo, visiting)?);
            }
        }
        visiting.pop();
        let v = activate(&node.activation, node.response * aggregate(&node.aggregation, &xs)? + node.bias)?;
        memo.insert(key, v);
        Ok(v)
    }

    pub fn node_keys(&self) -> BTreeSet<u64> {
        self.nodes.keys().copied().collect()
    }
}
