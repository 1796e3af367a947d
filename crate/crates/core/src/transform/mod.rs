//! POWL to BPMN collaboration in three steps: control-flow translation into a
//! flat fragment, lifting of resource assignments to every flow node, and
//! replacement of cross-pool sequence flows by message events and flows.

mod assign;
mod messages;
mod prune;
mod translate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelRule, PowlModel, ResourceContext, ValidationReport};

pub use assign::lift_assignment;
pub use messages::insert_messages;
pub use prune::prune;
pub use translate::translate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum NodeKind {
    Task,
    StartEvent,
    EndEvent,
    AndGateway,
    XorGateway,
    ThrowMsg,
    CatchMsg,
}

impl NodeKind {
    pub fn is_gateway(self) -> bool {
        matches!(self, NodeKind::AndGateway | NodeKind::XorGateway)
    }

    pub fn is_event(self) -> bool {
        matches!(
            self,
            NodeKind::StartEvent | NodeKind::EndEvent | NodeKind::ThrowMsg | NodeKind::CatchMsg
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowNode {
    pub id: String,
    pub kind: NodeKind,
    /// Activity label; present exactly for tasks.
    pub label: Option<String>,
    /// Originating transition of a task.
    pub transition: Option<String>,
}

impl FlowNode {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Self {
            id: id.into(),
            kind,
            label: None,
            transition: None,
        }
    }

    pub fn task(id: impl Into<String>, label: impl Into<String>, transition: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::Task,
            label: Some(label.into()),
            transition: Some(transition.into()),
        }
    }
}

/// Sequence flow as (source id, target id).
pub type Flow = (String, String);

/// Flat node/flow graph with designated entry and exit connectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpmnFragment {
    pub nodes: BTreeMap<String, FlowNode>,
    pub flows: BTreeSet<Flow>,
    pub start: String,
    pub end: String,
}

impl BpmnFragment {
    pub fn preds<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.flows
            .iter()
            .filter(move |(_, t)| t == id)
            .map(|(s, _)| s.as_str())
    }

    pub fn succs<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.flows
            .iter()
            .filter(move |(s, _)| s == id)
            .map(|(_, t)| t.as_str())
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.values().filter(|n| n.kind == kind).count()
    }

    /// Structural invariants; returns one message per violation.
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for end in [&self.start, &self.end] {
            if !self.nodes.contains_key(end) {
                problems.push(format!("connector {end} is not a node"));
            }
        }
        for (s, t) in &self.flows {
            if !self.nodes.contains_key(s) || !self.nodes.contains_key(t) {
                problems.push(format!("dangling flow {s} -> {t}"));
            }
        }
        if self.preds(&self.start).next().is_some() {
            problems.push("start has an incoming flow".into());
        }
        if self.succs(&self.end).next().is_some() {
            problems.push("end has an outgoing flow".into());
        }
        for n in self.nodes.values() {
            if (n.kind == NodeKind::Task) != n.label.is_some() {
                problems.push(format!("{}: label present iff task", n.id));
            }
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([self.start.as_str()]);
        while let Some(v) = queue.pop_front() {
            if seen.insert(v) {
                queue.extend(self.succs(v));
                queue.extend(self.preds(v));
            }
        }
        if seen.len() != self.nodes.len() {
            problems.push("fragment is not connected".into());
        }
        problems
    }
}

/// Total node-level assignment.
pub type NodeAssignment = BTreeMap<String, ResourceContext>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageFlow {
    pub throw: String,
    pub catch: String,
    /// The replaced cross-pool sequence flow.
    pub source: String,
    pub target: String,
    pub throw_name: Option<String>,
    pub catch_name: Option<String>,
}

impl MessageFlow {
    pub fn name(&self) -> Option<String> {
        match (&self.throw_name, &self.catch_name) {
            (None, None) => None,
            (a, b) => Some(
                [a.as_deref(), b.as_deref()]
                    .into_iter()
                    .flatten()
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CollaborationSkeleton {
    pub pools: Vec<String>,
    pub lanes_by_pool: BTreeMap<String, Vec<String>>,
    pub nodes_by_pool: BTreeMap<String, BTreeMap<String, FlowNode>>,
    pub flows_by_pool: BTreeMap<String, BTreeSet<Flow>>,
    pub message_flows: Vec<MessageFlow>,
    pub assignment: BTreeMap<String, ResourceContext>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Stats {
    pub activities: usize,
    pub gateways: usize,
    pub pools: usize,
    pub lanes: usize,
    pub message_flows: usize,
}

impl CollaborationSkeleton {
    pub fn nodes(&self) -> impl Iterator<Item = &FlowNode> {
        self.nodes_by_pool.values().flat_map(|m| m.values())
    }

    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.nodes_by_pool.values().find_map(|m| m.get(id))
    }

    pub fn sequence_flows(&self) -> impl Iterator<Item = &Flow> {
        self.flows_by_pool.values().flat_map(|s| s.iter())
    }

    pub fn stats(&self) -> Stats {
        Stats {
            activities: self.nodes().filter(|n| n.kind == NodeKind::Task).count(),
            gateways: self.nodes().filter(|n| n.kind.is_gateway()).count(),
            pools: self.pools.len(),
            lanes: self.lanes_by_pool.values().map(Vec::len).sum(),
            message_flows: self.message_flows.len(),
        }
    }

    /// Collaboration invariants; returns one message per violation.
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for (pool, nodes) in &self.nodes_by_pool {
            if !self.pools.contains(pool) {
                problems.push(format!("nodes under unknown pool {pool}"));
            }
            for id in nodes.keys() {
                if let Some(other) = owner.insert(id, pool) {
                    problems.push(format!("node {id} in pools {other} and {pool}"));
                }
                match self.assignment.get(id) {
                    None => problems.push(format!("node {id} unassigned")),
                    Some(ctx) if &ctx.pool != pool => {
                        problems.push(format!("node {id} listed under {pool} but assigned to {}", ctx.pool))
                    }
                    Some(ctx) => {
                        if !self.lanes_by_pool.get(pool).is_some_and(|l| l.contains(&ctx.lane)) {
                            problems.push(format!("node {id} in unknown lane {}", ctx.lane));
                        }
                    }
                }
            }
        }
        for (pool, flows) in &self.flows_by_pool {
            for (s, t) in flows {
                if owner.get(s.as_str()) != Some(&pool.as_str()) || owner.get(t.as_str()) != Some(&pool.as_str()) {
                    problems.push(format!("sequence flow {s} -> {t} leaves pool {pool}"));
                }
            }
        }
        for m in &self.message_flows {
            let kinds = (self.node(&m.throw).map(|n| n.kind), self.node(&m.catch).map(|n| n.kind));
            if kinds != (Some(NodeKind::ThrowMsg), Some(NodeKind::CatchMsg)) {
                problems.push(format!("message flow {} => {} is not throw to catch", m.throw, m.catch));
            }
            if owner.get(m.throw.as_str()) == owner.get(m.catch.as_str()) {
                problems.push(format!("message flow {} => {} within one pool", m.throw, m.catch));
            }
        }
        if self.assignment.len() != owner.len() {
            problems.push("assignment covers nodes outside the skeleton".into());
        }
        problems
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("model is invalid: {}", .0.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(ValidationReport<ModelRule>),
    #[error("no assignment seed: the process has no visible activity to take a pool and lane from")]
    NoAssignmentSeed,
    #[error("node {0} cannot be reached from any assigned node")]
    Unreachable(String),
}

/// Full three-step transformation of a valid model.
pub fn compile(model: &PowlModel) -> Result<CollaborationSkeleton, TransformError> {
    let report = model.validate();
    if !report.is_empty() {
        return Err(TransformError::InvalidModel(report));
    }
    let fragment = prune(&translate(model));
    let assignment = lift_assignment(&fragment, model)?;
    Ok(insert_messages(&fragment, &assignment))
}
