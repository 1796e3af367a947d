use std::collections::{BTreeMap, BTreeSet};

use super::{BpmnFragment, Flow, FlowNode, NodeKind};
use crate::model::{ChoicePoint, Label, Node, PowlModel};
use crate::relation;

struct Builder {
    nodes: BTreeMap<String, FlowNode>,
    flows: BTreeSet<Flow>,
}

impl Builder {
    fn add(&mut self, node: FlowNode) -> String {
        let id = node.id.clone();
        self.nodes.insert(id.clone(), node);
        id
    }

    fn gateway(&mut self, id: String, kind: NodeKind) -> String {
        self.add(FlowNode::new(id, kind))
    }

    fn flow(&mut self, from: &str, to: &str) {
        self.flows.insert((from.to_string(), to.to_string()));
    }

    /// Translates `node` whose path prefix is `path`; returns its (entry, exit).
    fn node(&mut self, node: &Node, path: &str) -> (String, String) {
        let start = self.add(FlowNode::new(format!("{path}.start"), NodeKind::StartEvent));
        let end = self.add(FlowNode::new(format!("{path}.end"), NodeKind::EndEvent));
        match node {
            Node::Transition(t) => match &t.label {
                Label::Visible(label) => {
                    let task = self.add(FlowNode::task(format!("{path}.task"), label, &t.id));
                    self.flow(&start, &task);
                    self.flow(&task, &end);
                }
                Label::Silent => self.flow(&start, &end),
            },
            Node::PartialOrder(po) => {
                let n = po.children.len();
                let split = self.gateway(format!("{path}.split"), NodeKind::AndGateway);
                let join = self.gateway(format!("{path}.join"), NodeKind::AndGateway);
                self.flow(&start, &split);
                self.flow(&join, &end);
                let ports = self.children(&po.children, path, NodeKind::AndGateway);
                // the stored order is acyclic for valid models
                let reduction = relation::transitive_reduction(&po.order, n).unwrap_or_default();
                for i in relation::minimal(&po.order, n) {
                    self.flow(&split, &ports[i].0);
                }
                for i in relation::maximal(&po.order, n) {
                    self.flow(&ports[i].1, &join);
                }
                for (i, j) in reduction {
                    self.flow(&ports[i].1, &ports[j].0);
                }
            }
            Node::Choice(choice) => {
                let split = self.gateway(format!("{path}.split"), NodeKind::XorGateway);
                let join = self.gateway(format!("{path}.join"), NodeKind::XorGateway);
                self.flow(&start, &split);
                self.flow(&join, &end);
                let ports = self.children(&choice.children, path, NodeKind::XorGateway);
                for &(from, to) in &choice.edges {
                    let source = match from {
                        ChoicePoint::Start => split.clone(),
                        ChoicePoint::Child(i) => ports[i].1.clone(),
                        ChoicePoint::End => continue,
                    };
                    let target = match to {
                        ChoicePoint::End => join.clone(),
                        ChoicePoint::Child(i) => ports[i].0.clone(),
                        ChoicePoint::Start => continue,
                    };
                    self.flow(&source, &target);
                }
            }
        }
        (start, end)
    }

    /// Translates children and wraps each in a dedicated join before and split
    /// after it; returns (join, split) per child.
    fn children(&mut self, children: &[Node], path: &str, kind: NodeKind) -> Vec<(String, String)> {
        children
            .iter()
            .map(|child| {
                let child_path = format!("{path}.{}", child.id());
                let enter = self.gateway(format!("{child_path}.enter"), kind);
                let exit = self.gateway(format!("{child_path}.exit"), kind);
                let (s, e) = self.node(child, &child_path);
                self.flow(&enter, &s);
                self.flow(&e, &exit);
                (enter, exit)
            })
            .collect()
    }
}

/// Recursive control-flow translation, before pruning. Node ids are dotted
/// paths of model ids, e.g. `order.check.task`.
pub fn translate(model: &PowlModel) -> BpmnFragment {
    translate_node(&model.root)
}

pub fn translate_node(root: &Node) -> BpmnFragment {
    let mut b = Builder {
        nodes: BTreeMap::new(),
        flows: BTreeSet::new(),
    };
    let (start, end) = b.node(root, root.id());
    BpmnFragment {
        nodes: b.nodes,
        flows: b.flows,
        start,
        end,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn frag(body: &str) -> BpmnFragment {
        let text = format!("process \"p\" {{ {body} }}");
        translate(&parse(&text).unwrap())
    }

    fn has(f: &BpmnFragment, a: &str, b: &str) -> bool {
        f.flows.contains(&(a.to_string(), b.to_string()))
    }

    #[test]
    fn visible_transition() {
        let f = frag(r#"act a "A" @ "P" / "L""#);
        assert_eq!(f.nodes.len(), 3);
        assert_eq!(f.flows.len(), 2);
        assert_eq!(f.nodes["a.task"].label.as_deref(), Some("A"));
        assert!(has(&f, "a.start", "a.task") && has(&f, "a.task", "a.end"));
        assert!(f.check().is_empty());
    }

    #[test]
    fn silent_transition() {
        let f = frag("tau t");
        assert_eq!(f.nodes.len(), 2);
        assert_eq!(f.flows.len(), 1);
        assert!(has(&f, "t.start", "t.end"));
    }

    #[test]
    fn unordered_partial_order() {
        let f = frag(r#"po x { act a "A" @ "P" / "L" act b "B" @ "P" / "L" }"#);
        assert_eq!(f.count(NodeKind::AndGateway), 6);
        for c in ["a", "b"] {
            assert!(has(&f, "x.split", &format!("x.{c}.enter")));
            assert!(has(&f, &format!("x.{c}.exit"), "x.join"));
        }
        assert!(f.check().is_empty());
    }

    #[test]
    fn ordered_partial_order_uses_reduction() {
        let f = frag(
            r#"po x { act a "A" @ "P" / "L" act b "B" @ "P" / "L" act c "C" @ "P" / "L"
               order { a -> b b -> c a -> c } }"#,
        );
        assert!(has(&f, "x.a.exit", "x.b.enter"));
        assert!(has(&f, "x.b.exit", "x.c.enter"));
        assert!(!has(&f, "x.a.exit", "x.c.enter"));
        assert!(!has(&f, "x.split", "x.b.enter"));
        assert!(!has(&f, "x.a.exit", "x.join"));
        assert!(has(&f, "x.split", "x.a.enter"));
        assert!(has(&f, "x.c.exit", "x.join"));
    }

    #[test]
    fn exclusive_choice() {
        let f = frag(
            r#"choice c { act a "A" @ "P" / "L" act b "B" @ "P" / "L"
               edges { start -> a a -> end start -> b b -> end } }"#,
        );
        assert_eq!(f.count(NodeKind::XorGateway), 6);
        assert_eq!(f.succs("c.split").count(), 2);
        assert_eq!(f.preds("c.join").count(), 2);
    }

    #[test]
    fn choice_back_edges_and_skip() {
        let f = frag(
            r#"choice c { act a "A" @ "P" / "L" act b "B" @ "P" / "L"
               edges { start -> a a -> b b -> a a -> end start -> end } }"#,
        );
        assert!(has(&f, "c.b.exit", "c.a.enter"));
        assert!(has(&f, "c.split", "c.join"));
        assert!(f.check().is_empty());
    }
}
