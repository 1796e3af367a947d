use super::{BpmnFragment, NodeKind};

fn single_neighbours(f: &BpmnFragment, id: &str) -> Option<(String, String)> {
    let mut preds = f.preds(id);
    let mut succs = f.succs(id);
    let (p, s) = (preds.next()?, succs.next()?);
    if preds.next().is_some() || succs.next().is_some() || p == id {
        return None;
    }
    Some((p.to_string(), s.to_string()))
}

/// Removes `id` and connects its only predecessor to its only successor.
fn contract(f: &mut BpmnFragment, id: &str) -> bool {
    let Some((p, s)) = single_neighbours(f, id) else {
        return false;
    };
    f.flows.remove(&(p.clone(), id.to_string()));
    f.flows.remove(&(id.to_string(), s.clone()));
    f.nodes.remove(id);
    f.flows.insert((p, s));
    true
}

fn sweep(f: &mut BpmnFragment, eligible: impl Fn(&BpmnFragment, &str) -> bool) -> bool {
    let candidates: Vec<String> = f
        .nodes
        .keys()
        .filter(|id| eligible(f, id))
        .cloned()
        .collect();
    let mut changed = false;
    for id in candidates {
        changed |= contract(f, &id);
    }
    changed
}

/// Contracts interior start/end connectors and gateways with one incoming and
/// one outgoing flow until nothing changes. Duplicate flows created by
/// contraction collapse because flows form a set.
pub fn prune(fragment: &BpmnFragment) -> BpmnFragment {
    let mut f = fragment.clone();
    loop {
        let events = sweep(&mut f, |f, id| {
            let kind = f.nodes[id].kind;
            matches!(kind, NodeKind::StartEvent | NodeKind::EndEvent) && id != f.start && id != f.end
        });
        let gateways = sweep(&mut f, |f, id| f.nodes[id].kind.is_gateway());
        if !events && !gateways {
            return f;
        }
    }
}
