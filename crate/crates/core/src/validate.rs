//! Structural validity of a genome against its schema.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::genome::{decode_genome, AttributeSchema, GenomeTensors};

/// Finds one directed cycle among `edges`, returned as the list of keys on
/// it (first key not repeated). Deterministic: searches from the smallest key.
pub fn find_cycle(edges: &[(u64, u64)]) -> Option<Vec<u64>> {
    let mut adj: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default();
    }
    for list in adj.values_mut() {
        list.sort_unstable();
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<u64, u8> = adj.keys().map(|&k| (k, 0)).collect();
    let roots: Vec<u64> = adj.keys().copied().collect();
    for root in roots {
        if state[&root] != 0 {
            continue;
        }
        let mut path = vec![root];
        let mut iters = vec![0usize];
        state.insert(root, 1);
        while let Some(&node) = path.last() {
            let i = *iters.last().expect("parallel stacks");
            let next = adj[&node].get(i).copied();
            match next {
                Some(n) => {
                    *iters.last_mut().expect("non-empty") += 1;
                    match state[&n] {
                        0 => {
                            state.insert(n, 1);
                            path.push(n);
                            iters.push(0);
                        }
                        1 => {
                            let start = path.iter().position(|&k| k == n).expect("on stack");
                            return Some(path[start..].to_vec());
                        }
                        _ => {}
                    }
                }
                None => {
                    state.insert(node, 2);
                    path.pop();
                    iters.pop();
                }
            }
        }
    }
    None
}

pub fn enabled_edges(g: &GenomeTensors) -> Vec<(u64, u64)> {
    g.conn_rows().filter(|&r| g.conn_enabled(r)).map(|r| g.conn_pair(r)).collect()
}

/// Returns every problem found; an empty list means the genome is valid:
/// rows all-or-nothing, ids registered, unique keys and pairs, input/output
/// nodes present, no dangling endpoints, acyclic enabled graph.
pub fn validate(g: &GenomeTensors, schema: &AttributeSchema) -> Vec<Error> {
    let mut issues = Vec::new();
    let decoded = match decode_genome(g, schema) {
        Ok(d) => d,
        Err(e) => return vec![e],
    };
    let mut keys = BTreeSet::new();
    for n in &decoded.nodes {
        if !keys.insert(n.key) {
            issues.push(Error::DuplicateKey(n.key));
        }
    }
    for k in g.input_keys().chain(g.output_keys()) {
        if !keys.contains(&k) {
            issues.push(Error::KeyNotFound(format!("required node {k}")));
        }
    }
    let mut pairs = BTreeSet::new();
    for c in &decoded.conns {
        if !keys.contains(&c.input) || !keys.contains(&c.output) {
            issues.push(Error::DanglingEndpoint(c.input, c.output));
        }
        if !pairs.insert((c.input, c.output)) {
            issues.push(Error::DuplicateConn(c.input, c.output));
        }
    }
    if let Some(cycle) = find_cycle(&enabled_edges(g)) {
        issues.push(Error::CycleDetected(cycle));
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles() {
        assert_eq!(find_cycle(&[(0, 2), (2, 1)]), None);
        assert_eq!(find_cycle(&[(0, 2), (2, 0)]), Some(vec![0, 2]));
        assert_eq!(find_cycle(&[(5, 5)]), Some(vec![5]));
        assert_eq!(find_cycle(&[(0, 1), (1, 2), (2, 3), (3, 1)]), Some(vec![1, 2, 3]));
        assert_eq!(crate::error::format_cycle(&[3, 4]), "3→4→3");
    }
}
