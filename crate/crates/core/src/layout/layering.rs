use std::collections::{BTreeMap, BTreeSet};

use crate::transform::CollaborationSkeleton;

/// Nodes and edges of the flat graph: sequence flows plus message flows.
fn flat_graph(sk: &CollaborationSkeleton) -> (Vec<String>, BTreeSet<(usize, usize)>) {
    let ids: Vec<String> = {
        let mut v: Vec<String> = sk.nodes().map(|n| n.id.clone()).collect();
        v.sort();
        v
    };
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut edges = BTreeSet::new();
    for (u, v) in sk.sequence_flows() {
        edges.insert((index[u.as_str()], index[v.as_str()]));
    }
    for m in &sk.message_flows {
        edges.insert((index[m.throw.as_str()], index[m.catch.as_str()]));
    }
    (ids, edges)
}

/// Depth-first discovery order and the edges left after dropping back edges.
/// Roots are tried sources first, then any remaining node, both by id.
fn acyclic(n: usize, edges: &BTreeSet<(usize, usize)>) -> (Vec<usize>, BTreeSet<(usize, usize)>) {
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0; n];
    for &(a, b) in edges {
        succ[a].push(b);
        indeg[b] += 1;
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut order = Vec::new();
    let mut kept = BTreeSet::new();
    let roots = (0..n).filter(|&v| indeg[v] == 0).chain(0..n);
    for root in roots {
        if state[root] != 0 {
            continue;
        }
        state[root] = 1;
        order.push(root);
        let mut stack = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = succ[v].get(*next) {
                *next += 1;
                match state[w] {
                    0 => {
                        kept.insert((v, w));
                        state[w] = 1;
                        order.push(w);
                        stack.push((w, 0));
                    }
                    2 => {
                        kept.insert((v, w));
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    (order, kept)
}

/// Longest-path layers, each ordered by one median sweep from left to right.
pub fn layers(sk: &CollaborationSkeleton) -> Vec<Vec<String>> {
    let (ids, edges) = flat_graph(sk);
    let n = ids.len();
    let (discovery, dag) = acyclic(n, &edges);
    let mut rank = vec![0usize; n];
    // discovery order of a DFS is not topological, so relax until stable
    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b) in &dag {
            if rank[b] < rank[a] + 1 {
                rank[b] = rank[a] + 1;
                changed = true;
            }
        }
    }
    let depth = rank.iter().copied().max().map_or(0, |m| m + 1);
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); depth];
    for &v in &discovery {
        layers[rank[v]].push(v);
    }
    let mut position = vec![0usize; n];
    for layer in &layers {
        for (i, &v) in layer.iter().enumerate() {
            position[v] = i;
        }
    }
    for layer in layers.iter_mut().take(depth).skip(1) {
        let mut keyed: Vec<(usize, usize, usize)> = layer
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut ps: Vec<usize> = dag.iter().filter(|e| e.1 == v).map(|e| position[e.0]).collect();
                ps.sort();
                // doubled median so even counts stay integral
                let key = if ps.is_empty() {
                    2 * i
                } else {
                    ps[(ps.len() - 1) / 2] + ps[ps.len() / 2]
                };
                (key, i, v)
            })
            .collect();
        keyed.sort();
        *layer = keyed.into_iter().map(|(_, _, v)| v).collect();
        for (i, &v) in layer.iter().enumerate() {
            position[v] = i;
        }
    }
    layers
        .into_iter()
        .map(|layer| layer.into_iter().map(|v| ids[v].clone()).collect())
        .collect()
}
