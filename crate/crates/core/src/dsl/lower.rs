//! Resolves ids and references of a syntax tree into a [`PowlModel`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::parser::{RawEdge, RawKind, RawNode, RawProgram, Ref};
use super::{ParseError, SourceSpan};
use crate::model::{
    ChoiceGraph, ChoicePoint, ModelRule, Node, PartialOrder, PowlModel, ResourceContext, Transition,
};

/// Lowercase slug of a label, usable as an id prefix.
pub(crate) fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let out = out.trim_matches('_').to_string();
    match out.chars().next() {
        None => "act".into(),
        Some(c) if c.is_ascii_digit() => format!("a_{out}"),
        Some(_) => out,
    }
}

struct Lowering {
    errors: Vec<ParseError>,
    taken: HashSet<String>,
    counters: HashMap<String, usize>,
    spans: HashMap<String, SourceSpan>,
    assignment: BTreeMap<String, ResourceContext>,
    /// Operators with an unresolved edge reference; path checks on them would
    /// only repeat that error.
    broken: HashSet<String>,
}

impl Lowering {
    fn fresh_id(&mut self, base: &str) -> String {
        let counter = self.counters.entry(base.to_string()).or_insert(0);
        loop {
            *counter += 1;
            let candidate = format!("{base}_{counter}");
            if !self.taken.contains(&candidate) {
                self.taken.insert(candidate.clone());
                return candidate;
            }
        }
    }

    fn collect_explicit(&mut self, node: &RawNode) {
        if let Some(id) = &node.id {
            if !self.taken.insert(id.value.clone()) {
                self.errors.push(ParseError::new(
                    id.span,
                    format!("duplicate id '{}'", id.value),
                    vec![],
                ));
            }
        }
        if let RawKind::Po { children, .. } | RawKind::Choice { children, .. } = &node.kind {
            for c in children {
                self.collect_explicit(c);
            }
        }
    }

    fn node(&mut self, raw: RawNode) -> Node {
        let id = match (&raw.id, &raw.kind) {
            (Some(id), _) => id.value.clone(),
            (None, RawKind::Act { label, .. }) => self.fresh_id(&slug(&label.value)),
            (None, _) => self.fresh_id("tau"),
        };
        self.spans.entry(id.clone()).or_insert(raw.span);
        match raw.kind {
            RawKind::Act { label, pool, lane } => {
                self.assignment
                    .entry(id.clone())
                    .or_insert_with(|| ResourceContext::new(pool.value, lane.value));
                Node::Transition(Transition::visible(id, label.value))
            }
            RawKind::Silent => Node::Transition(Transition::silent(id)),
            RawKind::Po { children, order } => {
                let children: Vec<Node> = children.into_iter().map(|c| self.node(c)).collect();
                let order = self.resolve_order(&id, &children, &order);
                Node::PartialOrder(PartialOrder {
                    id,
                    children,
                    order,
                })
            }
            RawKind::Choice { children, edges } => {
                let children: Vec<Node> = children.into_iter().map(|c| self.node(c)).collect();
                let edges = self.resolve_edges(&id, &children, &edges);
                Node::Choice(ChoiceGraph {
                    id,
                    children,
                    edges,
                })
            }
        }
    }

    fn child_index(&mut self, owner: &str, children: &[Node], r: &super::parser::Spanned<Ref>) -> Option<ChoicePoint> {
        match &r.value {
            Ref::Start => Some(ChoicePoint::Start),
            Ref::End => Some(ChoicePoint::End),
            Ref::Child(name) => match children.iter().position(|c| c.id() == name) {
                Some(i) => Some(ChoicePoint::Child(i)),
                None => {
                    self.broken.insert(owner.to_string());
                    self.errors.push(ParseError::new(
                        r.span,
                        format!("unknown child '{name}' in '{owner}' (edges may only name direct children)"),
                        vec![],
                    ));
                    None
                }
            },
        }
    }

    fn resolve_order(&mut self, owner: &str, children: &[Node], edges: &[RawEdge]) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for e in edges {
            let from = self.child_index(owner, children, &e.from);
            let to = self.child_index(owner, children, &e.to);
            if let (Some(ChoicePoint::Child(a)), Some(ChoicePoint::Child(b))) = (from, to) {
                if a == b {
                    self.errors.push(ParseError::new(
                        e.from.span.to(e.to.span),
                        format!("self-edge in partial order '{owner}'"),
                        vec![],
                    ));
                } else {
                    out.insert((a, b));
                }
            }
        }
        out
    }

    fn resolve_edges(
        &mut self,
        owner: &str,
        children: &[Node],
        edges: &[RawEdge],
    ) -> BTreeSet<(ChoicePoint, ChoicePoint)> {
        let mut out = BTreeSet::new();
        for e in edges {
            let from = self.child_index(owner, children, &e.from);
            let to = self.child_index(owner, children, &e.to);
            if let (Some(a), Some(b)) = (from, to) {
                out.insert((a, b));
            }
        }
        out
    }
}

pub(crate) fn lower(program: RawProgram) -> Result<PowlModel, Vec<ParseError>> {
    let mut cx = Lowering {
        errors: Vec::new(),
        taken: HashSet::new(),
        counters: HashMap::new(),
        spans: HashMap::new(),
        assignment: BTreeMap::new(),
        broken: HashSet::new(),
    };
    cx.collect_explicit(&program.root);
    let root_span = program.root.span;
    let root = cx.node(program.root);
    let model = PowlModel {
        name: program.name,
        root,
        assignment: std::mem::take(&mut cx.assignment),
    };
    for v in model.validate().violations {
        // reported above with sharper spans
        if v.rule == ModelRule::DuplicateId || (v.rule == ModelRule::ChildOffPath && cx.broken.contains(&v.subject)) {
            continue;
        }
        let span = cx.spans.get(&v.subject).copied().unwrap_or(root_span);
        let mut message = format!("{} at '{}'", v.rule, v.subject);
        if !v.detail.is_empty() {
            message.push_str(&format!(": {}", v.detail));
        }
        cx.errors.push(ParseError::new(span, message, vec![]));
    }
    if cx.errors.is_empty() {
        Ok(model)
    } else {
        cx.errors.sort_by_key(|e| e.span);
        Err(cx.errors)
    }
}
