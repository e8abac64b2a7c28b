//! Self-describing JSON genome documents.
//!
//! Keys are emitted in sorted order and every float as `{:.16e}` (17
//! significant digits), with `null` for NaN, so identical genomes always
//! produce identical bytes and values round-trip exactly.

use std::fmt::Write;

use ndarray::Array2;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::genome::{AttributeSchema, GenomeLimits, GenomeTensors, CONN_WIDTH, NODE_WIDTH};
use crate::inference::{Activation, Aggregation};

pub const DOCUMENT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct GenomeDocument {
    pub genome: GenomeTensors,
    pub schema: AttributeSchema,
}

fn push_float(out: &mut String, x: f64) {
    if x.is_finite() {
        let _ = write!(out, "{x:.16e}");
    } else {
        out.push_str("null");
    }
}

fn push_rows(out: &mut String, rows: &Array2<f64>) {
    out.push('[');
    for (i, row) in rows.outer_iter().enumerate() {
        out.push_str(if i == 0 { "\n    [" } else { ",\n    [" });
        for (j, &x) in row.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            push_float(out, x);
        }
        out.push(']');
    }
    out.push_str(if rows.nrows() == 0 { "]" } else { "\n  ]" });
}

fn push_names<T: std::fmt::Display>(out: &mut String, names: &[T]) {
    let quoted: Vec<String> = names.iter().map(|n| format!("\"{n}\"")).collect();
    let _ = write!(out, "[{}]", quoted.join(", "));
}

pub fn save_genome(g: &GenomeTensors, schema: &AttributeSchema) -> String {
    let mut out = String::from("{\n  \"conns\": ");
    push_rows(&mut out, &g.conns);
    let _ = write!(
        out,
        ",\n  \"limits\": {{\"max_conns\": {}, \"max_nodes\": {}}},\n  \"nodes\": ",
        g.conns.nrows(),
        g.nodes.nrows()
    );
    push_rows(&mut out, &g.nodes);
    let _ = write!(out, ",\n  \"num_inputs\": {},\n  \"num_outputs\": {},\n", g.num_inputs, g.num_outputs);
    out.push_str("  \"schema\": {\"activations\": ");
    push_names(&mut out, &schema.activations);
    out.push_str(", \"aggregations\": ");
    push_names(&mut out, &schema.aggregations);
    let _ = write!(out, "}},\n  \"version\": {DOCUMENT_VERSION}\n}}\n");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    activations: Vec<String>,
    aggregations: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    #[allow(dead_code)]
    version: u64,
    limits: GenomeLimits,
    num_inputs: usize,
    num_outputs: usize,
    schema: SchemaDoc,
    nodes: Vec<Vec<Option<f64>>>,
    conns: Vec<Vec<Option<f64>>>,
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

fn field_err(message: String) -> Error {
    Error::Parse { line: 0, column: 0, message }
}

fn to_table(name: &str, rows: &[Vec<Option<f64>>], expect_rows: usize, width: usize) -> Result<Array2<f64>> {
    if rows.len() != expect_rows {
        return Err(field_err(format!("`{name}` has {} rows, limits say {expect_rows}", rows.len())));
    }
    let mut out = Array2::from_elem((expect_rows, width), f64::NAN);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(field_err(format!("`{name}` row {i} has {} values, expected {width}", row.len())));
        }
        for (j, v) in row.iter().enumerate() {
            out[[i, j]] = v.unwrap_or(f64::NAN);
        }
    }
    Ok(out)
}

pub fn load_genome(text: &str) -> Result<GenomeDocument> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
    let version = value
        .get("version")
        .ok_or_else(|| field_err("missing field `version`".into()))?
        .as_u64()
        .ok_or_else(|| field_err("field `version` is not an unsigned integer".into()))?;
    if version != DOCUMENT_VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let doc: Doc = serde_json::from_str(text).map_err(parse_err)?;
    let activations = doc.schema.activations.iter().map(|s| s.parse::<Activation>()).collect::<Result<Vec<_>>>()?;
    let aggregations = doc.schema.aggregations.iter().map(|s| s.parse::<Aggregation>()).collect::<Result<Vec<_>>>()?;
    let nodes = to_table("nodes", &doc.nodes, doc.limits.max_nodes, NODE_WIDTH)?;
    let conns = to_table("conns", &doc.conns, doc.limits.max_conns, CONN_WIDTH)?;
    Ok(GenomeDocument {
        genome: GenomeTensors { nodes, conns, num_inputs: doc.num_inputs, num_outputs: doc.num_outputs },
        schema: AttributeSchema::new(activations, aggregations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{pad_genome, ConnRow, NodeRow};

    fn sample() -> GenomeTensors {
        pad_genome(
            &[NodeRow([0.0, 0.0, 1.0, 0.0, 0.0]), NodeRow([1.0, 0.1, 1.0, 0.0, 1.0])],
            &[ConnRow([0.0, 1.0, 1.0, -0.3333333333333333])],
            1,
            1,
            GenomeLimits::new(3, 2),
        )
        .unwrap()
    }

    fn schema() -> AttributeSchema {
        AttributeSchema::new(vec![Activation::Identity, Activation::Tanh], vec![Aggregation::Sum])
    }

    fn same_bits(a: &Array2<f64>, b: &Array2<f64>) -> bool {
        a.shape() == b.shape() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
    }

    #[test]
    fn roundtrip() {
        let g = sample();
        let text = save_genome(&g, &schema());
        let doc = load_genome(&text).unwrap();
        assert!(same_bits(&doc.genome.nodes, &g.nodes));
        assert!(same_bits(&doc.genome.conns, &g.conns));
        assert_eq!(doc.schema, schema());
        assert_eq!(save_genome(&doc.genome, &doc.schema), text);
        assert!(text.contains("-3.3333333333333331e-1"));
    }

    #[test]
    fn errors() {
        let text = save_genome(&sample(), &schema());
        let truncated = &text[..text.len() / 2];
        assert!(matches!(load_genome(truncated), Err(Error::Parse { line, .. }) if line > 0));
        let v2 = text.replace("\"version\": 1", "\"version\": 2");
        assert_eq!(load_genome(&v2), Err(Error::VersionUnsupported(2)));
        let bad = text.replace("\"tanh\"", "\"gauss\"");
        assert_eq!(load_genome(&bad), Err(Error::UnknownFunction("gauss".into())));
    }
}
