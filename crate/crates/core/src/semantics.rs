//! Bounded trace semantics: the recursive language of a POWL model and the
//! token game of a flat BPMN fragment, plus a comparison of the two.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::model::{ChoicePoint, Label, Node, PowlModel};
use crate::relation;
use crate::transform::{BpmnFragment, CollaborationSkeleton, NodeKind};

pub type Trace = Vec<String>;

/// Explored states of the token game before it gives up and reports truncation.
pub const STATE_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_len: usize,
    pub max_traces: usize,
}

impl Bounds {
    pub fn new(max_len: usize, max_traces: usize) -> Self {
        Self { max_len, max_traces }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Language {
    pub traces: BTreeSet<Trace>,
    /// Set when a cap cut the exploration short; the trace set may be incomplete.
    pub truncated: bool,
}

impl Language {
    fn of(traces: BTreeSet<Trace>, truncated: bool) -> Self {
        Self { traces, truncated }
    }

    fn cap(&mut self, max_traces: usize) {
        if self.traces.len() > max_traces {
            self.truncated = true;
            while self.traces.len() > max_traces {
                self.traces.pop_last();
            }
        }
    }
}

/// Visible-label traces of length at most `max_len`.
pub fn powl_language(model: &PowlModel, bounds: Bounds) -> Language {
    node_language(&model.root, bounds)
}

fn node_language(node: &Node, b: Bounds) -> Language {
    let mut lang = match node {
        Node::Transition(t) => {
            let trace = match &t.label {
                Label::Visible(l) => vec![l.clone()],
                Label::Silent => vec![],
            };
            let traces = if trace.len() <= b.max_len {
                BTreeSet::from([trace])
            } else {
                BTreeSet::new()
            };
            Language::of(traces, false)
        }
        Node::PartialOrder(po) => {
            let subs: Vec<Language> = po.children.iter().map(|c| node_language(c, b)).collect();
            let closure = relation::transitive_closure(&po.order, po.children.len()).unwrap_or_default();
            interleavings(&subs, &closure, b)
        }
        Node::Choice(ch) => {
            let subs: Vec<Language> = ch.children.iter().map(|c| node_language(c, b)).collect();
            choice_paths(&subs, &ch.edges, b)
        }
    };
    lang.cap(b.max_traces);
    lang
}

fn interleavings(subs: &[Language], closure: &relation::Relation, b: Bounds) -> Language {
    let mut out = Language::of(BTreeSet::new(), subs.iter().any(|l| l.truncated));
    let pools: Vec<Vec<&Trace>> = subs.iter().map(|l| l.traces.iter().collect()).collect();
    if pools.iter().any(Vec::is_empty) {
        return out;
    }
    // one trace per child, every combination
    let mut pick = vec![0usize; subs.len()];
    loop {
        let chosen: Vec<&Trace> = pick.iter().zip(&pools).map(|(&i, p)| p[i]).collect();
        if chosen.iter().map(|t| t.len()).sum::<usize>() <= b.max_len {
            let mut pos = vec![0usize; chosen.len()];
            let mut prefix = Vec::new();
            weave(&chosen, closure, &mut pos, &mut prefix, &mut out.traces);
            if out.traces.len() > b.max_traces {
                out.cap(b.max_traces);
                return out;
            }
        }
        let mut k = 0;
        loop {
            if k == pick.len() {
                return out;
            }
            pick[k] += 1;
            if pick[k] < pools[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// A child may emit once all its predecessors have finished their traces.
fn weave(
    chosen: &[&Trace],
    closure: &relation::Relation,
    pos: &mut [usize],
    prefix: &mut Trace,
    out: &mut BTreeSet<Trace>,
) {
    if pos.iter().zip(chosen).all(|(&p, t)| p == t.len()) {
        out.insert(prefix.clone());
        return;
    }
    for j in 0..chosen.len() {
        if pos[j] == chosen[j].len() {
            continue;
        }
        let ready = closure
            .iter()
            .filter(|&&(_, to)| to == j)
            .all(|&(from, _)| pos[from] == chosen[from].len());
        if !ready {
            continue;
        }
        prefix.push(chosen[j][pos[j]].clone());
        pos[j] += 1;
        weave(chosen, closure, pos, prefix, out);
        pos[j] -= 1;
        prefix.pop();
    }
}

/// Least fixed point of: traces from entering child i = L_i followed by
/// traces from any successor of i.
fn choice_paths(subs: &[Language], edges: &BTreeSet<(ChoicePoint, ChoicePoint)>, b: Bounds) -> Language {
    let mut truncated = subs.iter().any(|l| l.truncated);
    let mut from: Vec<BTreeSet<Trace>> = vec![BTreeSet::new(); subs.len()];
    let tail = |from: &Vec<BTreeSet<Trace>>, p: ChoicePoint| -> Vec<Trace> {
        match p {
            ChoicePoint::End => vec![vec![]],
            ChoicePoint::Child(i) => from[i].iter().cloned().collect(),
            ChoicePoint::Start => vec![],
        }
    };
    let mut changed = true;
    while changed && !truncated {
        changed = false;
        for i in 0..subs.len() {
            let mut grown = Vec::new();
            for &(_, to) in edges.iter().filter(|(f, _)| *f == ChoicePoint::Child(i)) {
                for rest in tail(&from, to) {
                    for head in &subs[i].traces {
                        if head.len() + rest.len() <= b.max_len {
                            let mut t = head.clone();
                            t.extend(rest.iter().cloned());
                            grown.push(t);
                        }
                    }
                }
            }
            for t in grown {
                changed |= from[i].insert(t);
            }
            if from[i].len() > b.max_traces {
                truncated = true;
            }
        }
    }
    let mut traces = BTreeSet::new();
    for &(_, to) in edges.iter().filter(|(f, _)| *f == ChoicePoint::Start) {
        traces.extend(tail(&from, to));
    }
    Language::of(traces, truncated)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("flow {0} -> {1} references a missing node")]
    DanglingFlow(String, String),
    #[error("connector {0} is not a node")]
    MissingConnector(String),
}

type Marking = BTreeMap<usize, u32>;

struct Net<'a> {
    f: &'a BpmnFragment,
    flows: Vec<(&'a str, &'a str)>,
    incoming: BTreeMap<&'a str, Vec<usize>>,
    outgoing: BTreeMap<&'a str, Vec<usize>>,
}

impl<'a> Net<'a> {
    fn new(f: &'a BpmnFragment) -> Result<Self, SemanticsError> {
        for c in [&f.start, &f.end] {
            if !f.nodes.contains_key(c) {
                return Err(SemanticsError::MissingConnector(c.clone()));
            }
        }
        let flows: Vec<(&str, &str)> = f.flows.iter().map(|(s, t)| (s.as_str(), t.as_str())).collect();
        let mut incoming: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        let mut outgoing: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (k, &(s, t)) in flows.iter().enumerate() {
            if !f.nodes.contains_key(s) || !f.nodes.contains_key(t) {
                return Err(SemanticsError::DanglingFlow(s.into(), t.into()));
            }
            outgoing.entry(s).or_default().push(k);
            incoming.entry(t).or_default().push(k);
        }
        Ok(Self {
            f,
            flows,
            incoming,
            outgoing,
        })
    }

    fn ins(&self, id: &str) -> &[usize] {
        self.incoming.get(id).map_or(&[], Vec::as_slice)
    }

    fn outs(&self, id: &str) -> &[usize] {
        self.outgoing.get(id).map_or(&[], Vec::as_slice)
    }

    /// Successor (marking, emitted label) pairs of firing `id`.
    fn fire(&self, m: &Marking, id: &str) -> Vec<(Marking, Option<&'a str>)> {
        let f: &'a BpmnFragment = self.f;
        let node = &f.nodes[id];
        let ins = self.ins(id);
        let outs = self.outs(id);
        let mut out = Vec::new();
        match node.kind {
            NodeKind::AndGateway => {
                if ins.iter().all(|k| m.contains_key(k)) {
                    let mut next = m.clone();
                    ins.iter().for_each(|&k| take(&mut next, k));
                    outs.iter().for_each(|&k| put(&mut next, k));
                    out.push((next, None));
                }
            }
            NodeKind::XorGateway => {
                for &k in ins.iter().filter(|k| m.contains_key(k)) {
                    for &o in outs {
                        let mut next = m.clone();
                        take(&mut next, k);
                        put(&mut next, o);
                        out.push((next, None));
                    }
                }
            }
            _ => {
                let label = node.label.as_deref();
                for &k in ins.iter().filter(|k| m.contains_key(k)) {
                    let mut next = m.clone();
                    take(&mut next, k);
                    outs.iter().for_each(|&o| put(&mut next, o));
                    out.push((next, label));
                }
            }
        }
        out
    }

    /// Successor states worth exploring. Each flow has a single consumer and
    /// firing never removes tokens from another node's inputs, so firings of
    /// distinct nodes commute. When a silent node is enabled it is therefore
    /// enough to fire that node alone: any completed run can be reordered to
    /// fire it first without changing the trace.
    fn successors(&self, m: &Marking) -> Vec<(Marking, Option<&'a str>)> {
        let enabled: BTreeSet<&'a str> = m.keys().map(|&k| self.flows[k].1).collect();
        let mut visible = Vec::new();
        for id in enabled {
            let next = self.fire(m, id);
            if next.is_empty() {
                continue;
            }
            if self.f.nodes[id].label.is_none() {
                return next;
            }
            visible.extend(next);
        }
        visible
    }
}

fn take(m: &mut Marking, k: usize) {
    if let Some(c) = m.get_mut(&k) {
        *c -= 1;
        if *c == 0 {
            m.remove(&k);
        }
    }
}

fn put(m: &mut Marking, k: usize) {
    *m.entry(k).or_insert(0) += 1;
}

/// Completed traces of the token game. The start connector emits a token on
/// each outgoing flow; a trace completes once every token has been consumed.
/// Tasks and pass-through events fire per incoming token, parallel gateways
/// synchronise all incoming flows, exclusive gateways route each token to one
/// outgoing flow. States are memoised on (marking, trace).
pub fn bpmn_language(f: &BpmnFragment, bounds: Bounds) -> Result<Language, SemanticsError> {
    let net = Net::new(f)?;
    let mut initial = Marking::new();
    net.outs(&f.start).iter().for_each(|&k| put(&mut initial, k));
    let mut lang = Language::default();
    let mut seen: BTreeSet<(Marking, Trace)> = BTreeSet::new();
    let mut queue = VecDeque::from([(initial, Trace::new())]);
    while let Some((m, trace)) = queue.pop_front() {
        if !seen.insert((m.clone(), trace.clone())) {
            continue;
        }
        if seen.len() > STATE_CAP {
            lang.truncated = true;
            break;
        }
        if m.is_empty() {
            lang.traces.insert(trace);
            if lang.traces.len() > bounds.max_traces {
                lang.cap(bounds.max_traces);
                break;
            }
            continue;
        }
        for (next, label) in net.successors(&m) {
            let mut t = trace.clone();
            if let Some(l) = label {
                if t.len() == bounds.max_len {
                    continue;
                }
                t.push(l.to_string());
            }
            queue.push_back((next, t));
        }
    }
    Ok(lang)
}

/// Flattens a collaboration back into one fragment, reading each message flow
/// as a sequence flow between its throw and catch events.
pub fn skeleton_fragment(sk: &CollaborationSkeleton) -> Option<BpmnFragment> {
    let nodes: BTreeMap<_, _> = sk.nodes().map(|n| (n.id.clone(), n.clone())).collect();
    let mut flows: BTreeSet<_> = sk.sequence_flows().cloned().collect();
    flows.extend(sk.message_flows.iter().map(|m| (m.throw.clone(), m.catch.clone())));
    let find = |kind: NodeKind| {
        let mut it = nodes.values().filter(|n| n.kind == kind);
        let one = it.next()?.id.clone();
        it.next().is_none().then_some(one)
    };
    Some(BpmnFragment {
        start: find(NodeKind::StartEvent)?,
        end: find(NodeKind::EndEvent)?,
        nodes,
        flows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Equal,
    Unequal {
        witness: Trace,
        /// True when the witness is a model trace missing from the diagram.
        in_model: bool,
    },
    Inconclusive {
        reason: String,
    },
}

/// Compares bounded languages; the witness is the shortest (then
/// lexicographically smallest) trace in exactly one of them.
pub fn languages_equal(model: &PowlModel, f: &BpmnFragment, bounds: Bounds) -> Result<Verdict, SemanticsError> {
    let left = powl_language(model, bounds);
    let right = bpmn_language(f, bounds)?;
    Ok(compare(&left, &right))
}

pub fn compare(model: &Language, diagram: &Language) -> Verdict {
    if model.truncated || diagram.truncated {
        let side = if model.truncated { "model" } else { "diagram" };
        return Verdict::Inconclusive {
            reason: format!("{side} language hit the trace cap"),
        };
    }
    model
        .traces
        .symmetric_difference(&diagram.traces)
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
        .map_or(Verdict::Equal, |w| Verdict::Unequal {
            witness: w.clone(),
            in_model: model.traces.contains(w),
        })
}
