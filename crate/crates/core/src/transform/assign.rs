use super::{BpmnFragment, NodeAssignment, NodeKind, TransformError};
use crate::model::PowlModel;

#[derive(Clone, Copy)]
enum Dir {
    Succ,
    Pred,
}

/// Neighbourhoods a node inherits from, in order of preference.
fn preference(f: &BpmnFragment, id: &str) -> &'static [Dir] {
    let kind = f.nodes[id].kind;
    let outs = f.succs(id).count();
    let ins = f.preds(id).count();
    match kind {
        NodeKind::StartEvent => &[Dir::Succ],
        NodeKind::EndEvent => &[Dir::Pred],
        _ if outs > 1 && ins <= 1 => &[Dir::Succ],
        _ if ins > 1 && outs <= 1 => &[Dir::Pred],
        _ => &[Dir::Succ, Dir::Pred],
    }
}

fn neighbours<'a>(f: &'a BpmnFragment, id: &'a str, dir: Dir) -> Box<dyn Iterator<Item = &'a str> + 'a> {
    match dir {
        Dir::Succ => Box::new(f.succs(id)),
        Dir::Pred => Box::new(f.preds(id)),
    }
}

/// Smallest-id assigned neighbour over the given directions, first direction
/// with any assigned neighbour wins.
fn pick<'a>(f: &'a BpmnFragment, chi: &NodeAssignment, id: &'a str, dirs: &[Dir]) -> Option<&'a str> {
    dirs.iter()
        .find_map(|&d| neighbours(f, id, d).filter(|n| chi.contains_key(*n)).min())
}

/// Extends the transition assignment to every node of a pruned fragment.
///
/// Tasks take their transition's context. Other nodes inherit in synchronous
/// rounds: splits look downstream, joins upstream, start events downstream,
/// end events upstream and pass-through nodes downstream then upstream. Ties
/// go to the lexicographically smallest neighbour id. If a round makes no
/// progress (every candidate waits on another unassigned node), the smallest
/// node with any assigned neighbour inherits regardless of direction.
pub fn lift_assignment(f: &BpmnFragment, model: &PowlModel) -> Result<NodeAssignment, TransformError> {
    let mut chi = NodeAssignment::new();
    for node in f.nodes.values() {
        if let Some(t) = &node.transition {
            if let Some(ctx) = model.assignment.get(t) {
                chi.insert(node.id.clone(), ctx.clone());
            }
        }
    }
    if chi.is_empty() {
        return Err(TransformError::NoAssignmentSeed);
    }
    while chi.len() < f.nodes.len() {
        let round: Vec<(String, String)> = f
            .nodes
            .keys()
            .filter(|id| !chi.contains_key(*id))
            .filter_map(|id| pick(f, &chi, id, preference(f, id)).map(|n| (id.clone(), n.to_string())))
            .collect();
        let round = if round.is_empty() {
            let relaxed = f
                .nodes
                .keys()
                .filter(|id| !chi.contains_key(*id))
                .find_map(|id| pick(f, &chi, id, &[Dir::Succ, Dir::Pred]).map(|n| (id.clone(), n.to_string())));
            match relaxed {
                Some(step) => vec![step],
                None => {
                    let stuck = f.nodes.keys().find(|id| !chi.contains_key(*id)).unwrap();
                    return Err(TransformError::Unreachable(stuck.clone()));
                }
            }
        } else {
            round
        };
        for (id, from) in round {
            let ctx = chi[&from].clone();
            chi.insert(id, ctx);
        }
    }
    Ok(chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::model::ResourceContext;
    use crate::transform::{prune, translate};

    fn lifted(text: &str) -> NodeAssignment {
        let m = parse(text).unwrap();
        lift_assignment(&prune(&translate(&m)), &m).unwrap()
    }

    fn ctx(pool: &str, lane: &str) -> ResourceContext {
        ResourceContext {
            pool: pool.into(),
            lane: lane.into(),
        }
    }

    #[test]
    fn events_follow_neighbouring_tasks() {
        let chi = lifted(
            r#"process "p" { po x { act a "A" @ "P" / "L" act b "B" @ "Q" / "M" order { a -> b } } }"#,
        );
        assert_eq!(chi["x.start"], ctx("P", "L"));
        assert_eq!(chi["x.end"], ctx("Q", "M"));
        assert_eq!(chi["x.a.task"], ctx("P", "L"));
    }

    #[test]
    fn split_looks_downstream_join_upstream() {
        let chi = lifted(
            r#"process "p" { po x {
                 act a "A" @ "P" / "L"
                 po y { act b "B" @ "Q" / "M" act c "C" @ "Q" / "N" }
                 act d "D" @ "P" / "L"
                 order { a -> y y -> d } } }"#,
        );
        // the split follows its smallest successor, the join its smallest predecessor
        assert_eq!(chi["x.y.split"], ctx("Q", "M"));
        assert_eq!(chi["x.y.join"], ctx("Q", "M"));
    }

    #[test]
    fn total_on_cycles() {
        let chi = lifted(
            r#"process "p" { choice c { act a "A" @ "P" / "L" tau t
                 edges { start -> a a -> t t -> a a -> end } } }"#,
        );
        let m = parse(r#"process "p" { choice c { act a "A" @ "P" / "L" tau t edges { start -> a a -> t t -> a a -> end } } }"#).unwrap();
        assert_eq!(chi.len(), prune(&translate(&m)).nodes.len());
        assert!(chi.values().all(|c| c == &ctx("P", "L")));
    }
}
