//! Resource-aware POWL models.
//!
//! A model is a tree of transitions, partial orders and choice graphs. Every
//! visible transition is mapped to the pool and lane that performs it; silent
//! transitions carry no resource information.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::relation;

/// The DSL keyword and reserved label for silent transitions.
pub const SILENT_MARKER: &str = "tau";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Visible(String),
    Silent,
}

impl Label {
    pub fn visible(&self) -> Option<&str> {
        match self {
            Label::Visible(s) => Some(s),
            Label::Silent => None,
        }
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, Label::Silent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub label: Label,
}

impl Transition {
    pub fn visible(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: Label::Visible(label.into()),
        }
    }

    pub fn silent(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: Label::Silent,
        }
    }
}

/// A (pool, lane) pair. Lanes are scoped to their pool, so equal lane names
/// under different pools are different contexts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ResourceContext {
    pub pool: String,
    pub lane: String,
}

impl ResourceContext {
    pub fn new(pool: impl Into<String>, lane: impl Into<String>) -> Self {
        Self {
            pool: pool.into(),
            lane: lane.into(),
        }
    }

    pub fn is_well_formed(&self) -> bool {
        !self.pool.trim().is_empty() && !self.lane.trim().is_empty()
    }
}

impl fmt::Display for ResourceContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {}", self.pool, self.lane)
    }
}

/// Children ordered by an arbitrary acyclic edge set over child indices. The
/// strict partial order is the transitive closure of `order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOrder {
    pub id: String,
    pub children: Vec<Node>,
    pub order: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChoicePoint {
    Start,
    Child(usize),
    End,
}

/// Exclusive routing between children, from a unique source to a unique sink.
/// Back edges between children express loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceGraph {
    pub id: String,
    pub children: Vec<Node>,
    pub edges: BTreeSet<(ChoicePoint, ChoicePoint)>,
}

impl ChoiceGraph {
    pub fn is_acyclic(&self) -> bool {
        let edges: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .filter_map(|e| match e {
                (ChoicePoint::Child(a), ChoicePoint::Child(b)) => Some((*a, *b)),
                _ => None,
            })
            .collect();
        relation::find_cycle(&edges, self.children.len()).is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Transition(Transition),
    PartialOrder(PartialOrder),
    Choice(ChoiceGraph),
}

impl Node {
    pub fn id(&self) -> &str {
        match self {
            Node::Transition(t) => &t.id,
            Node::PartialOrder(p) => &p.id,
            Node::Choice(c) => &c.id,
        }
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::Transition(_) => &[],
            Node::PartialOrder(p) => &p.children,
            Node::Choice(c) => &c.children,
        }
    }

    /// Pre-order walk over this node and all descendants.
    pub fn walk(&self) -> Walk<'_> {
        Walk { stack: vec![self] }
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.walk().filter_map(|n| match n {
            Node::Transition(t) => Some(t),
            _ => None,
        })
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Node::depth).max().unwrap_or(0)
    }
}

pub struct Walk<'a> {
    stack: Vec<&'a Node>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = &'a Node;

    fn next(&mut self) -> Option<&'a Node> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children().iter().rev());
        Some(node)
    }
}

/// A named process with its resource assignment over visible transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowlModel {
    pub name: String,
    pub root: Node,
    pub assignment: BTreeMap<String, ResourceContext>,
}

impl PowlModel {
    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.root.transitions().find(|t| t.id == id)
    }

    pub fn visible_count(&self) -> usize {
        self.root
            .transitions()
            .filter(|t| !t.label.is_silent())
            .count()
    }

    /// Distinct pools in name order.
    pub fn pools(&self) -> BTreeSet<&str> {
        self.assignment.values().map(|c| c.pool.as_str()).collect()
    }

    pub fn contexts(&self) -> BTreeSet<&ResourceContext> {
        self.assignment.values().collect()
    }

    pub fn validate(&self) -> ValidationReport<ModelRule> {
        validate_model(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelRule {
    EmptyId,
    InvalidId,
    DuplicateId,
    EmptyLabel,
    ReservedLabel,
    ControlCharacter,
    EmptyOperator,
    IndexOutOfRange,
    SelfEdgeInOrder,
    CycleInOrder,
    EdgeIntoSource,
    EdgeOutOfSink,
    ChildOffPath,
    AssignmentNotTotal,
    AssignmentOnSilent,
    AssignmentUnknown,
    EmptyContext,
}

impl ModelRule {
    pub fn describe(self) -> &'static str {
        match self {
            ModelRule::EmptyId => "empty identifier",
            ModelRule::InvalidId => "identifier is not of the form [A-Za-z_][A-Za-z0-9_]*",
            ModelRule::DuplicateId => "duplicate identifier",
            ModelRule::EmptyLabel => "empty activity label",
            ModelRule::ReservedLabel => "visible label equals the silent marker",
            ModelRule::ControlCharacter => "label contains a control character",
            ModelRule::EmptyOperator => "operator without children",
            ModelRule::IndexOutOfRange => "edge references a missing child",
            ModelRule::SelfEdgeInOrder => "self-edge in partial order",
            ModelRule::CycleInOrder => "cycle in order relation",
            ModelRule::EdgeIntoSource => "choice source has an incoming edge",
            ModelRule::EdgeOutOfSink => "choice sink has an outgoing edge",
            ModelRule::ChildOffPath => "child not on a start-to-end path",
            ModelRule::AssignmentNotTotal => "resource assignment not total",
            ModelRule::AssignmentOnSilent => "silent transition has a resource assignment",
            ModelRule::AssignmentUnknown => "assignment for an unknown transition",
            ModelRule::EmptyContext => "empty pool or lane",
        }
    }
}

impl fmt::Display for ModelRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation<R> {
    /// Id of the offending element.
    pub subject: String,
    pub rule: R,
    pub detail: String,
}

impl<R: fmt::Display> fmt::Display for Violation<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Violations are data: an empty report means the checked artifact is valid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport<R> {
    pub violations: Vec<Violation<R>>,
}

impl<R> Default for ValidationReport<R> {
    fn default() -> Self {
        Self {
            violations: Vec::new(),
        }
    }
}

impl<R: PartialEq> ValidationReport<R> {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, subject: impl Into<String>, rule: R, detail: impl Into<String>) {
        self.violations.push(Violation {
            subject: subject.into(),
            rule,
            detail: detail.into(),
        });
    }

    pub fn has(&self, rule: R) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn validate_model(model: &PowlModel) -> ValidationReport<ModelRule> {
    let mut report = ValidationReport::default();
    let mut seen = HashSet::new();
    for node in model.root.walk() {
        check_id(node.id(), &mut seen, &mut report);
        match node {
            Node::Transition(t) => check_transition(t, model, &mut report),
            Node::PartialOrder(p) => check_partial_order(p, &mut report),
            Node::Choice(c) => check_choice(c, &mut report),
        }
    }
    for (id, ctx) in &model.assignment {
        match model.transition(id) {
            None => report.push(id, ModelRule::AssignmentUnknown, ""),
            Some(t) if t.label.is_silent() => report.push(id, ModelRule::AssignmentOnSilent, ""),
            Some(_) => {}
        }
        if !ctx.is_well_formed() {
            report.push(id, ModelRule::EmptyContext, ctx.to_string());
        }
    }
    report
}

fn check_id(id: &str, seen: &mut HashSet<String>, report: &mut ValidationReport<ModelRule>) {
    if id.is_empty() {
        report.push(id, ModelRule::EmptyId, "");
        return;
    }
    if !is_identifier(id) {
        report.push(id, ModelRule::InvalidId, "");
    }
    if !seen.insert(id.to_string()) {
        report.push(id, ModelRule::DuplicateId, "");
    }
}

fn check_transition(t: &Transition, model: &PowlModel, report: &mut ValidationReport<ModelRule>) {
    let Label::Visible(label) = &t.label else {
        return;
    };
    if label.trim().is_empty() {
        report.push(&t.id, ModelRule::EmptyLabel, "");
    } else if label == SILENT_MARKER {
        report.push(&t.id, ModelRule::ReservedLabel, "");
    }
    if label.chars().any(char::is_control) {
        report.push(&t.id, ModelRule::ControlCharacter, "");
    }
    if !model.assignment.contains_key(&t.id) {
        report.push(&t.id, ModelRule::AssignmentNotTotal, label.clone());
    }
}

fn check_partial_order(p: &PartialOrder, report: &mut ValidationReport<ModelRule>) {
    let n = p.children.len();
    if n == 0 {
        report.push(&p.id, ModelRule::EmptyOperator, "");
    }
    let mut in_range = BTreeSet::new();
    for &(a, b) in &p.order {
        if a >= n || b >= n {
            report.push(&p.id, ModelRule::IndexOutOfRange, format!("{a} -> {b}"));
        } else if a == b {
            report.push(&p.id, ModelRule::SelfEdgeInOrder, child_name(&p.children, a));
        } else {
            in_range.insert((a, b));
        }
    }
    if let Some(cycle) = relation::find_cycle(&in_range, n) {
        let names: Vec<_> = cycle.iter().map(|&i| child_name(&p.children, i)).collect();
        report.push(&p.id, ModelRule::CycleInOrder, names.join(" -> "));
    }
}

fn check_choice(c: &ChoiceGraph, report: &mut ValidationReport<ModelRule>) {
    let n = c.children.len();
    if n == 0 {
        report.push(&c.id, ModelRule::EmptyOperator, "");
    }
    let slot = |p: ChoicePoint| match p {
        ChoicePoint::Start => Some(n),
        ChoicePoint::End => Some(n + 1),
        ChoicePoint::Child(i) if i < n => Some(i),
        ChoicePoint::Child(_) => None,
    };
    let mut forward = vec![Vec::new(); n + 2];
    let mut backward = vec![Vec::new(); n + 2];
    for &(from, to) in &c.edges {
        if to == ChoicePoint::Start {
            report.push(&c.id, ModelRule::EdgeIntoSource, "");
            continue;
        }
        if from == ChoicePoint::End {
            report.push(&c.id, ModelRule::EdgeOutOfSink, "");
            continue;
        }
        match (slot(from), slot(to)) {
            (Some(a), Some(b)) => {
                forward[a].push(b);
                backward[b].push(a);
            }
            _ => report.push(&c.id, ModelRule::IndexOutOfRange, format!("{from:?} -> {to:?}")),
        }
    }
    let from_start = reachable(&forward, n);
    let to_end = reachable(&backward, n + 1);
    for i in 0..n {
        if !(from_start[i] && to_end[i]) {
            report.push(&c.id, ModelRule::ChildOffPath, child_name(&c.children, i));
        }
    }
}

fn reachable(adj: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

fn child_name(children: &[Node], i: usize) -> String {
    children
        .get(i)
        .map(|c| c.id().to_string())
        .unwrap_or_else(|| format!("#{i}"))
}
