//! Topology diagrams, formulas and genome documents.

mod document;
mod dot;
mod formula;

pub use document::{load_genome, save_genome, GenomeDocument, DOCUMENT_VERSION};
pub use dot::to_dot;
pub use formula::{build_formula, parse_formula, to_formula, Assignment, Expr, FormulaStyle, FormulaTree, Precision};

use std::collections::BTreeMap;

use crate::genome::GenomeTensors;
use crate::inference::transform;

/// Display names: inputs `i0…`, outputs `o0…`, hidden nodes `h0…` in
/// topological order (key order if the graph has a cycle).
pub(crate) fn node_names(g: &GenomeTensors) -> BTreeMap<u64, String> {
    let order: Vec<u64> = match transform(g) {
        Ok(t) => t.order_keys(),
        Err(_) => {
            let mut keys: Vec<u64> = g.node_rows().map(|r| g.node_key(r)).collect();
            keys.sort_unstable();
            keys
        }
    };
    let mut names = BTreeMap::new();
    let mut hidden = 0;
    for k in order {
        let name = if g.is_input(k) {
            format!("i{k}")
        } else if g.is_output(k) {
            format!("o{}", k - g.num_inputs as u64)
        } else {
            hidden += 1;
            format!("h{}", hidden - 1)
        };
        names.insert(k, name);
    }
    names
}
