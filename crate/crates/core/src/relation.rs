//! Transitive closure and reduction of acyclic relations over child indices.

use std::collections::BTreeSet;

use thiserror::Error;

pub type Relation = BTreeSet<(usize, usize)>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("relation contains a cycle through {cycle:?}")]
pub struct CycleError {
    /// Indices along one cycle, first index not repeated.
    pub cycle: Vec<usize>,
}

fn adjacency(edges: &Relation, n: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a < n && b < n {
            adj[a].push(b);
        }
    }
    adj
}

/// Returns one cycle of the relation, if any. Edges with endpoints `>= n` are ignored.
pub fn find_cycle(edges: &Relation, n: usize) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let adj = adjacency(edges, n);
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // (vertex, next neighbour position)
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(&mut (v, ref mut pos)) = stack.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Active;
                        stack.push((w, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(u, _)| u == w).unwrap();
                        return Some(stack[start..].iter().map(|&(u, _)| u).collect());
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

/// Reachability matrix: `reach[a][b]` iff there is a non-empty path from a to b.
fn reachability(edges: &Relation, n: usize) -> Result<Vec<Vec<bool>>, CycleError> {
    if let Some(cycle) = find_cycle(edges, n) {
        return Err(CycleError { cycle });
    }
    let adj = adjacency(edges, n);
    let mut reach = vec![vec![false; n]; n];
    for (src, row) in reach.iter_mut().enumerate() {
        let mut stack: Vec<usize> = adj[src].clone();
        while let Some(v) = stack.pop() {
            if !row[v] {
                row[v] = true;
                stack.extend(&adj[v]);
            }
        }
    }
    Ok(reach)
}

pub fn transitive_closure(edges: &Relation, n: usize) -> Result<Relation, CycleError> {
    let reach = reachability(edges, n)?;
    Ok(pairs(&reach))
}

/// The unique minimal relation with the same closure: `a -> b` is kept iff
/// `a < b` in the closure and no `c` lies strictly between them.
pub fn transitive_reduction(edges: &Relation, n: usize) -> Result<Relation, CycleError> {
    let reach = reachability(edges, n)?;
    let mut out = Relation::new();
    for a in 0..n {
        for b in 0..n {
            if reach[a][b] && !(0..n).any(|c| reach[a][c] && reach[c][b]) {
                out.insert((a, b));
            }
        }
    }
    Ok(out)
}

fn pairs(reach: &[Vec<bool>]) -> Relation {
    reach
        .iter()
        .enumerate()
        .flat_map(|(a, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &r)| r)
                .map(move |(b, _)| (a, b))
        })
        .collect()
}

/// Indices with no predecessor in the relation.
pub fn minimal(edges: &Relation, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| !edges.iter().any(|&(_, b)| b == i)).collect()
}

/// Indices with no successor in the relation.
pub fn maximal(edges: &Relation, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| !edges.iter().any(|&(a, _)| a == i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(pairs: &[(usize, usize)]) -> Relation {
        pairs.iter().copied().collect()
    }

    #[test]
    fn reduction_drops_implied_edge() {
        let r = transitive_reduction(&rel(&[(0, 1), (1, 2), (0, 2)]), 3).unwrap();
        assert_eq!(r, rel(&[(0, 1), (1, 2)]));
    }

    #[test]
    fn empty_relation() {
        assert!(transitive_reduction(&Relation::new(), 4).unwrap().is_empty());
        assert!(transitive_closure(&Relation::new(), 4).unwrap().is_empty());
        assert!(transitive_closure(&Relation::new(), 0).unwrap().is_empty());
    }

    #[test]
    fn closure_composes_paths() {
        let c = transitive_closure(&rel(&[(0, 1), (1, 2)]), 3).unwrap();
        assert_eq!(c, rel(&[(0, 1), (1, 2), (0, 2)]));
    }

    #[test]
    fn cycle_is_named() {
        let err = transitive_closure(&rel(&[(0, 1), (1, 2), (2, 0), (2, 3)]), 4).unwrap_err();
        let mut cycle = err.cycle.clone();
        cycle.sort();
        assert_eq!(cycle, vec![0, 1, 2]);
        assert!(find_cycle(&rel(&[(1, 1)]), 2).is_some());
        assert!(transitive_reduction(&rel(&[(0, 1), (1, 0)]), 2).is_err());
    }

    #[test]
    fn minimal_and_maximal() {
        let r = rel(&[(0, 1), (2, 1)]);
        assert_eq!(minimal(&r, 4), vec![0, 2, 3]);
        assert_eq!(maximal(&r, 4), vec![1, 3]);
    }
}
