use std::fmt::Write;

use super::node_names;
use crate::genome::GenomeTensors;

/// Graph-description text. Inputs are yellow, outputs blue, hidden nodes
/// white; disabled connections are dashed; edges carry their weight.
pub fn to_dot(g: &GenomeTensors) -> String {
    let names = node_names(g);
    let mut out = String::from("digraph genome {\n    rankdir=LR;\n    node [shape=circle, style=filled];\n");
    for (k, name) in &names {
        let color = if g.is_input(*k) {
            "yellow"
        } else if g.is_output(*k) {
            "lightblue"
        } else {
            "white"
        };
        let _ = writeln!(out, "    n{k} [label=\"{name}\", fillcolor={color}];");
    }
    let mut edges: Vec<usize> = g.conn_rows().collect();
    edges.sort_by_key(|&r| g.conn_pair(r));
    for r in edges {
        let (a, b) = g.conn_pair(r);
        let w = g.conns[[r, crate::genome::conn_col::WEIGHT]];
        let style = if g.conn_enabled(r) { "" } else { ", style=dashed" };
        let _ = writeln!(out, "    n{a} -> n{b} [label=\"{w:.3}\"{style}];");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{pad_genome, ConnRow, GenomeLimits, NodeRow};

    fn node(k: u64) -> NodeRow {
        NodeRow([k as f64, 0.0, 1.0, 0.0, 0.0])
    }

    #[test]
    fn single_edge() {
        let g = pad_genome(&[node(0), node(1)], &[ConnRow([0.0, 1.0, 1.0, 0.5])], 1, 1, GenomeLimits::new(3, 3)).unwrap();
        let d = to_dot(&g);
        assert_eq!(d.lines().filter(|l| l.contains("->")).count(), 1);
        assert!(d.contains("label=\"0.500\""));
        assert!(d.contains("fillcolor=yellow"));
        assert_eq!(d, to_dot(&g));
    }

    #[test]
    fn seven_nodes_and_dashed() {
        let nodes: Vec<NodeRow> = (0..7).map(node).collect();
        let conns = [ConnRow([0.0, 4.0, 1.0, 1.0]), ConnRow([4.0, 3.0, 0.0, -2.0])];
        let g = pad_genome(&nodes, &conns, 3, 1, GenomeLimits::new(8, 4)).unwrap();
        let d = to_dot(&g);
        assert_eq!(d.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count(), 7);
        assert!(d.contains("n4 -> n3 [label=\"-2.000\", style=dashed]"));
    }
}
