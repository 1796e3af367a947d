use std::collections::{BTreeMap, BTreeSet};

use super::{BpmnFragment, CollaborationSkeleton, FlowNode, MessageFlow, NodeAssignment, NodeKind};

/// Splits the assigned fragment into pools. Each sequence flow whose endpoints
/// lie in different pools becomes `u -> throw`, `throw => catch`, `catch -> v`,
/// with the throw event in u's context and the catch event in v's.
pub fn insert_messages(f: &BpmnFragment, chi: &NodeAssignment) -> CollaborationSkeleton {
    let mut nodes = f.nodes.clone();
    let mut assignment = chi.clone();
    let mut flows = BTreeSet::new();
    let mut message_flows = Vec::new();
    for (u, v) in &f.flows {
        let (cu, cv) = (&chi[u], &chi[v]);
        if cu.pool == cv.pool {
            flows.insert((u.clone(), v.clone()));
            continue;
        }
        let k = message_flows.len() + 1;
        let throw = format!("msg{k}.throw");
        let catch = format!("msg{k}.catch");
        nodes.insert(throw.clone(), FlowNode::new(&throw, NodeKind::ThrowMsg));
        nodes.insert(catch.clone(), FlowNode::new(&catch, NodeKind::CatchMsg));
        assignment.insert(throw.clone(), cu.clone());
        assignment.insert(catch.clone(), cv.clone());
        flows.insert((u.clone(), throw.clone()));
        flows.insert((catch.clone(), v.clone()));
        message_flows.push(MessageFlow {
            throw_name: f.nodes[u].label.as_ref().map(|l| format!("from {l}")),
            catch_name: f.nodes[v].label.as_ref().map(|l| format!("to {l}")),
            throw,
            catch,
            source: u.clone(),
            target: v.clone(),
        });
    }

    let mut lanes_by_pool: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for ctx in assignment.values() {
        lanes_by_pool.entry(ctx.pool.clone()).or_default().insert(ctx.lane.clone());
    }
    let mut nodes_by_pool: BTreeMap<String, BTreeMap<String, FlowNode>> = BTreeMap::new();
    for (id, node) in nodes {
        nodes_by_pool.entry(assignment[&id].pool.clone()).or_default().insert(id, node);
    }
    let mut flows_by_pool: BTreeMap<String, BTreeSet<_>> =
        lanes_by_pool.keys().map(|p| (p.clone(), BTreeSet::new())).collect();
    for (u, v) in flows {
        flows_by_pool.get_mut(&assignment[&u].pool).unwrap().insert((u, v));
    }
    CollaborationSkeleton {
        pools: lanes_by_pool.keys().cloned().collect(),
        lanes_by_pool: lanes_by_pool
            .into_iter()
            .map(|(p, l)| (p, l.into_iter().collect()))
            .collect(),
        nodes_by_pool,
        flows_by_pool,
        message_flows,
        assignment,
    }
}

#[cfg(test)]
mod tests {
    use crate::dsl::parse;
    use crate::transform::{compile, NodeKind};

    #[test]
    fn cross_pool_flow_becomes_message() {
        let m = parse(
            r#"process "p" { po x { act a "Send" @ "P" / "L" act b "Receive" @ "Q" / "M" order { a -> b } } }"#,
        )
        .unwrap();
        let sk = compile(&m).unwrap();
        assert_eq!(sk.pools, ["P", "Q"]);
        assert_eq!(sk.message_flows.len(), 1);
        let mf = &sk.message_flows[0];
        assert_eq!(mf.throw_name.as_deref(), Some("from Send"));
        assert_eq!(mf.catch_name.as_deref(), Some("to Receive"));
        assert_eq!(sk.node(&mf.throw).unwrap().kind, NodeKind::ThrowMsg);
        assert_eq!(sk.assignment[&mf.throw].pool, "P");
        assert_eq!(sk.assignment[&mf.catch].pool, "Q");
        assert!(sk.flows_by_pool["P"].contains(&("x.a.task".into(), mf.throw.clone())));
        assert!(sk.flows_by_pool["Q"].contains(&(mf.catch.clone(), "x.b.task".into())));
        assert!(sk.check().is_empty(), "{:?}", sk.check());
    }

    #[test]
    fn single_pool_has_no_messages() {
        let m = parse(
            r#"process "p" { po x { act a "A" @ "P" / "L" act b "B" @ "P" / "M" order { a -> b } } }"#,
        )
        .unwrap();
        let sk = compile(&m).unwrap();
        assert!(sk.message_flows.is_empty());
        assert_eq!(sk.lanes_by_pool["P"], ["L", "M"]);
    }
}
