//! BPMN 2.0 XML with diagram interchange: writing a compiled collaboration
//! and structurally checking arbitrary documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Cursor;

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::Writer;
use serde::Serialize;
use thiserror::Error;

use crate::layout::{message_edge_id, sequence_edge_id, Diagram, Point, Shape};
use crate::model::ValidationReport;
use crate::transform::{CollaborationSkeleton, FlowNode, NodeKind};

pub const MODEL_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
pub const BPMNDI_NS: &str = "http://www.omg.org/spec/BPMN/20100524/DI";
pub const DC_NS: &str = "http://www.omg.org/spec/DD/20100524/DC";
pub const DI_NS: &str = "http://www.omg.org/spec/DD/20100524/DI";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("diagram has no {kind} for '{id}'")]
    MissingGeometry { kind: &'static str, id: String },
    #[error("skeleton references unknown node '{0}'")]
    UnknownNode(String),
    #[error("xml writer: {0}")]
    Writer(String),
}

/// Replaces characters outside `[A-Za-z0-9_-]` with `_` and guarantees a
/// letter or underscore first.
pub fn sanitize(id: &str) -> String {
    let mut out: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    if !out.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
        out.insert(0, '_');
    }
    out
}

/// Hands out unique NCName ids; a numeric suffix resolves collisions.
#[derive(Default)]
struct Ids {
    taken: BTreeSet<String>,
    nodes: BTreeMap<String, String>,
}

impl Ids {
    fn claim(&mut self, wanted: &str) -> String {
        let base = sanitize(wanted);
        let mut id = base.clone();
        let mut k = 2;
        while !self.taken.insert(id.clone()) {
            id = format!("{base}_{k}");
            k += 1;
        }
        id
    }

    fn node(&self, original: &str) -> Result<&str, SerializeError> {
        self.nodes
            .get(original)
            .map(String::as_str)
            .ok_or_else(|| SerializeError::UnknownNode(original.to_string()))
    }
}

struct Doc {
    w: Writer<Cursor<Vec<u8>>>,
}

impl Doc {
    fn open(&mut self, tag: &str, attrs: &[(&str, &str)]) -> Result<(), SerializeError> {
        let el = BytesStart::new(tag).with_attributes(attrs.iter().copied());
        self.w.write_event(Event::Start(el)).map_err(writer)
    }

    fn close(&mut self, tag: &str) -> Result<(), SerializeError> {
        self.w.write_event(Event::End(BytesEnd::new(tag))).map_err(writer)
    }

    fn empty(&mut self, tag: &str, attrs: &[(&str, &str)]) -> Result<(), SerializeError> {
        let el = BytesStart::new(tag).with_attributes(attrs.iter().copied());
        self.w.write_event(Event::Empty(el)).map_err(writer)
    }

    fn text(&mut self, tag: &str, text: &str) -> Result<(), SerializeError> {
        self.open(tag, &[])?;
        self.w.write_event(Event::Text(BytesText::new(text))).map_err(writer)?;
        self.close(tag)
    }

    fn bounds(&mut self, s: &Shape) -> Result<(), SerializeError> {
        let (x, y, w, h) = (s.x.to_string(), s.y.to_string(), s.width.to_string(), s.height.to_string());
        self.empty("dc:Bounds", &[("x", &x), ("y", &y), ("width", &w), ("height", &h)])
    }

    fn shape(&mut self, id: &str, s: &Shape, horizontal: bool) -> Result<(), SerializeError> {
        let di = format!("{id}_di");
        let mut attrs = vec![("id", di.as_str()), ("bpmnElement", id)];
        if horizontal {
            attrs.push(("isHorizontal", "true"));
        }
        self.open("bpmndi:BPMNShape", &attrs)?;
        self.bounds(s)?;
        self.close("bpmndi:BPMNShape")
    }

    fn edge(&mut self, id: &str, points: &[Point]) -> Result<(), SerializeError> {
        let di = format!("{id}_di");
        self.open("bpmndi:BPMNEdge", &[("id", &di), ("bpmnElement", id)])?;
        for &(x, y) in points {
            self.empty("di:waypoint", &[("x", &x.to_string()), ("y", &y.to_string())])?;
        }
        self.close("bpmndi:BPMNEdge")
    }
}

fn writer(e: impl fmt::Display) -> SerializeError {
    SerializeError::Writer(e.to_string())
}

fn element_tag(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Task => "bpmn:task",
        NodeKind::StartEvent => "bpmn:startEvent",
        NodeKind::EndEvent => "bpmn:endEvent",
        NodeKind::AndGateway => "bpmn:parallelGateway",
        NodeKind::XorGateway => "bpmn:exclusiveGateway",
        NodeKind::ThrowMsg => "bpmn:intermediateThrowEvent",
        NodeKind::CatchMsg => "bpmn:intermediateCatchEvent",
    }
}

struct PoolIds {
    name: String,
    participant: String,
    process: String,
    lanes: Vec<(String, String)>,
}

/// Writes the collaboration as BPMN 2.0 XML. Pools follow the diagram's
/// top-to-bottom order; within a process, nodes and flows are sorted by id.
pub fn serialize(sk: &CollaborationSkeleton, diagram: &Diagram) -> Result<String, SerializeError> {
    let missing = |kind, id: &str| SerializeError::MissingGeometry {
        kind,
        id: id.to_string(),
    };
    let mut ids = Ids::default();
    for fixed in ["definitions_1", "collaboration_1", "diagram_1", "plane_1"] {
        ids.claim(fixed);
    }
    let mut pools = Vec::new();
    for (k, shape) in diagram.pool_shapes.iter().enumerate() {
        let name = &shape.element_id;
        let lane_shapes = diagram.lane_shapes.get(name).ok_or_else(|| missing("lanes", name))?;
        let lanes = lane_shapes
            .iter()
            .enumerate()
            .map(|(j, l)| (l.element_id.clone(), ids.claim(&format!("lane_{}_{}", k + 1, j + 1))))
            .collect();
        pools.push(PoolIds {
            name: name.clone(),
            participant: ids.claim(&format!("pool_{}", k + 1)),
            process: ids.claim(&format!("process_{}", k + 1)),
            lanes,
        });
    }
    for p in &sk.pools {
        if !pools.iter().any(|q| &q.name == p) {
            return Err(missing("pool shape", p));
        }
    }
    let mut all_nodes: Vec<&FlowNode> = sk.nodes().collect();
    all_nodes.sort_by(|a, b| a.id.cmp(&b.id));
    for n in &all_nodes {
        let id = ids.claim(&n.id);
        ids.nodes.insert(n.id.clone(), id);
    }

    // flow ids in pool order, then by (source, target)
    let mut flow_ids: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut counter = 0;
    for p in &pools {
        for f in sk.flows_by_pool.get(&p.name).into_iter().flatten() {
            counter += 1;
            flow_ids.insert(f.clone(), ids.claim(&format!("flow_{counter}")));
        }
    }
    let messages: Vec<(String, String)> = (1..=sk.message_flows.len())
        .map(|k| (ids.claim(&format!("message_{k}")), ids.claim(&format!("messageflow_{k}"))))
        .collect();
    let message_of: BTreeMap<&str, &str> = sk
        .message_flows
        .iter()
        .zip(&messages)
        .flat_map(|(m, (msg, _))| [(m.throw.as_str(), msg.as_str()), (m.catch.as_str(), msg.as_str())])
        .collect();
    let event_name: BTreeMap<&str, &str> = sk
        .message_flows
        .iter()
        .flat_map(|m| {
            [
                (m.throw.as_str(), m.throw_name.as_deref()),
                (m.catch.as_str(), m.catch_name.as_deref()),
            ]
        })
        .filter_map(|(id, name)| Some((id, name?)))
        .collect();

    let mut doc = Doc {
        w: Writer::new_with_indent(Cursor::new(Vec::new()), b' ', 2),
    };
    doc.w
        .write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
        .map_err(writer)?;
    doc.open(
        "bpmn:definitions",
        &[
            ("xmlns:bpmn", MODEL_NS),
            ("xmlns:bpmndi", BPMNDI_NS),
            ("xmlns:dc", DC_NS),
            ("xmlns:di", DI_NS),
            ("id", "definitions_1"),
            ("targetNamespace", "http://bpmn.io/schema/bpmn"),
            ("exporter", "powl2bpmn"),
            ("exporterVersion", env!("CARGO_PKG_VERSION")),
        ],
    )?;
    for (m, (msg, _)) in sk.message_flows.iter().zip(&messages) {
        let name = m.name().unwrap_or_default();
        let mut attrs = vec![("id", msg.as_str())];
        if !name.is_empty() {
            attrs.push(("name", &name));
        }
        doc.empty("bpmn:message", &attrs)?;
    }

    doc.open("bpmn:collaboration", &[("id", "collaboration_1")])?;
    for p in &pools {
        doc.empty(
            "bpmn:participant",
            &[("id", &p.participant), ("name", &p.name), ("processRef", &p.process)],
        )?;
    }
    for (m, (msg, flow)) in sk.message_flows.iter().zip(&messages) {
        doc.empty(
            "bpmn:messageFlow",
            &[
                ("id", flow),
                ("sourceRef", ids.node(&m.throw)?),
                ("targetRef", ids.node(&m.catch)?),
                ("messageRef", msg),
            ],
        )?;
    }
    doc.close("bpmn:collaboration")?;

    for p in &pools {
        doc.open("bpmn:process", &[("id", &p.process), ("isExecutable", "false")])?;
        let laneset = format!("{}_lanes", p.process);
        doc.open("bpmn:laneSet", &[("id", &laneset)])?;
        let nodes = sk.nodes_by_pool.get(&p.name);
        for (lane, lane_id) in &p.lanes {
            doc.open("bpmn:lane", &[("id", lane_id), ("name", lane)])?;
            for id in nodes.into_iter().flat_map(|m| m.keys()) {
                if sk.assignment.get(id).is_some_and(|c| &c.lane == lane) {
                    doc.text("bpmn:flowNodeRef", ids.node(id)?)?;
                }
            }
            doc.close("bpmn:lane")?;
        }
        doc.close("bpmn:laneSet")?;
        let flows = sk.flows_by_pool.get(&p.name);
        let mut ordered: Vec<&FlowNode> = nodes.into_iter().flat_map(|m| m.values()).collect();
        ordered.sort_by_key(|n| ids.node(&n.id).unwrap_or_default().to_string());
        for n in ordered {
            let tag = element_tag(n.kind);
            let id = ids.node(&n.id)?;
            let mut attrs = vec![("id", id)];
            if let Some(name) = n.label.as_deref().or(event_name.get(n.id.as_str()).copied()) {
                attrs.push(("name", name));
            }
            doc.open(tag, &attrs)?;
            for (f, fid) in flows.into_iter().flatten().map(|f| (f, &flow_ids[f])) {
                if f.1 == n.id {
                    doc.text("bpmn:incoming", fid)?;
                }
            }
            for (f, fid) in flows.into_iter().flatten().map(|f| (f, &flow_ids[f])) {
                if f.0 == n.id {
                    doc.text("bpmn:outgoing", fid)?;
                }
            }
            if matches!(n.kind, NodeKind::ThrowMsg | NodeKind::CatchMsg) {
                let def = format!("{id}_def");
                let mut attrs = vec![("id", def.as_str())];
                if let Some(msg) = message_of.get(n.id.as_str()) {
                    attrs.push(("messageRef", msg));
                }
                doc.empty("bpmn:messageEventDefinition", &attrs)?;
            }
            doc.close(tag)?;
        }
        for f in flows.into_iter().flatten() {
            doc.empty(
                "bpmn:sequenceFlow",
                &[
                    ("id", &flow_ids[f]),
                    ("sourceRef", ids.node(&f.0)?),
                    ("targetRef", ids.node(&f.1)?),
                ],
            )?;
        }
        doc.close("bpmn:process")?;
    }

    doc.open("bpmndi:BPMNDiagram", &[("id", "diagram_1")])?;
    doc.open("bpmndi:BPMNPlane", &[("id", "plane_1"), ("bpmnElement", "collaboration_1")])?;
    for (p, shape) in pools.iter().zip(&diagram.pool_shapes) {
        doc.shape(&p.participant, shape, true)?;
        for ((_, lane_id), lane_shape) in p.lanes.iter().zip(&diagram.lane_shapes[&p.name]) {
            doc.shape(lane_id, lane_shape, true)?;
        }
    }
    for n in &all_nodes {
        let shape = diagram.node_shapes.get(&n.id).ok_or_else(|| missing("shape", &n.id))?;
        doc.shape(ids.node(&n.id)?, shape, false)?;
    }
    for p in &pools {
        for f in sk.flows_by_pool.get(&p.name).into_iter().flatten() {
            let key = sequence_edge_id(&f.0, &f.1);
            let path = diagram.edge_paths.get(&key).ok_or_else(|| missing("edge path", &key))?;
            doc.edge(&flow_ids[f], &path.waypoints)?;
        }
    }
    for (m, (_, flow)) in sk.message_flows.iter().zip(&messages) {
        let key = message_edge_id(m);
        let path = diagram.edge_paths.get(&key).ok_or_else(|| missing("edge path", &key))?;
        doc.edge(flow, &path.waypoints)?;
    }
    doc.close("bpmndi:BPMNPlane")?;
    doc.close("bpmndi:BPMNDiagram")?;
    doc.close("bpmn:definitions")?;
    let mut text = String::from_utf8(doc.w.into_inner().into_inner()).map_err(writer)?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocRule {
    NotBpmn,
    CrossPoolSequenceFlow,
    MessageFlowWithinParticipant,
    DanglingReference,
    UnassignedFlowNode,
    MultipleLanes,
    MissingDiagramElement,
    OrphanDiagramElement,
}

impl DocRule {
    pub fn describe(self) -> &'static str {
        match self {
            DocRule::NotBpmn => "root is not a BPMN definitions element",
            DocRule::CrossPoolSequenceFlow => "cross-pool sequence flow",
            DocRule::MessageFlowWithinParticipant => "message flow within one participant",
            DocRule::DanglingReference => "dangling reference",
            DocRule::UnassignedFlowNode => "unassigned flow node",
            DocRule::MultipleLanes => "flow node in several lanes",
            DocRule::MissingDiagramElement => "element without diagram shape or edge",
            DocRule::OrphanDiagramElement => "diagram element without model element",
        }
    }
}

impl fmt::Display for DocRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct XmlParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

fn is_flow_node(local: &str) -> bool {
    local.ends_with("Task")
        || local.ends_with("Event")
        || local.ends_with("Gateway")
        || matches!(local, "task" | "subProcess" | "callActivity" | "transaction")
}

/// Structural rules for any BPMN document: sequence flows stay within one
/// process, message flows join different participants, every flow node sits
/// in exactly one lane, and model and diagram elements correspond.
pub fn check_structure(doc: &str) -> Result<ValidationReport<DocRule>, XmlParseError> {
    let tree = roxmltree::Document::parse(doc).map_err(|e| {
        let pos = e.pos();
        XmlParseError {
            line: pos.row,
            col: pos.col,
            message: e.to_string(),
        }
    })?;
    let mut report = ValidationReport::default();
    let root = tree.root_element();
    if root.tag_name().namespace() != Some(MODEL_NS) || root.tag_name().name() != "definitions" {
        report.push(root.tag_name().name(), DocRule::NotBpmn, "expected bpmn:definitions");
        return Ok(report);
    }
    let model = |n: &roxmltree::Node, name: &str| n.is_element() && n.tag_name().namespace() == Some(MODEL_NS) && n.tag_name().name() == name;
    let id_of = |n: &roxmltree::Node| n.attribute("id").unwrap_or("").to_string();

    // flow node id -> process id
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    // elements that need a diagram counterpart
    let mut drawable: BTreeSet<String> = BTreeSet::new();
    let mut participants: BTreeMap<String, String> = BTreeMap::new();

    for process in root.children().filter(|n| model(n, "process")) {
        let pid = id_of(&process);
        let mut lane_refs: BTreeMap<String, usize> = BTreeMap::new();
        for lane in process.descendants().filter(|n| model(n, "lane")) {
            drawable.insert(id_of(&lane));
            for r in lane.children().filter(|n| model(n, "flowNodeRef")) {
                *lane_refs.entry(r.text().unwrap_or("").trim().to_string()).or_default() += 1;
            }
        }
        for n in process.children().filter(|n| {
            n.is_element() && n.tag_name().namespace() == Some(MODEL_NS) && is_flow_node(n.tag_name().name())
        }) {
            let id = id_of(&n);
            match lane_refs.get(&id).copied().unwrap_or(0) {
                0 => report.push(&id, DocRule::UnassignedFlowNode, "not referenced by any lane"),
                1 => {}
                k => report.push(&id, DocRule::MultipleLanes, format!("referenced by {k} lanes")),
            }
            drawable.insert(id.clone());
            owner.insert(id, pid.clone());
        }
        for r in lane_refs.keys() {
            if !owner.contains_key(r) {
                report.push(r, DocRule::DanglingReference, format!("lane reference in {pid}"));
            }
        }
        for f in process.children().filter(|n| model(n, "sequenceFlow")) {
            let id = id_of(&f);
            drawable.insert(id.clone());
            let (s, t) = (f.attribute("sourceRef").unwrap_or(""), f.attribute("targetRef").unwrap_or(""));
            for end in [s, t] {
                if !owner.contains_key(end) {
                    let elsewhere = tree
                        .descendants()
                        .any(|n| n.attribute("id") == Some(end) && n.parent_element() != Some(process));
                    if elsewhere {
                        report.push(&id, DocRule::CrossPoolSequenceFlow, format!("{end} lies outside {pid}"));
                    } else {
                        report.push(&id, DocRule::DanglingReference, format!("unknown node {end}"));
                    }
                }
            }
        }
    }
    for collab in root.children().filter(|n| model(n, "collaboration")) {
        for p in collab.children().filter(|n| model(n, "participant")) {
            drawable.insert(id_of(&p));
            participants.insert(id_of(&p), p.attribute("processRef").unwrap_or("").to_string());
        }
        for m in collab.children().filter(|n| model(n, "messageFlow")) {
            let id = id_of(&m);
            drawable.insert(id.clone());
            let side = |r: &str| -> Option<String> {
                if participants.contains_key(r) {
                    return Some(r.to_string());
                }
                let process = owner.get(r)?;
                participants
                    .iter()
                    .find(|(_, proc)| *proc == process)
                    .map(|(p, _)| p.clone())
            };
            let (s, t) = (m.attribute("sourceRef").unwrap_or(""), m.attribute("targetRef").unwrap_or(""));
            match (side(s), side(t)) {
                (Some(a), Some(b)) if a == b => {
                    report.push(&id, DocRule::MessageFlowWithinParticipant, format!("both ends in {a}"))
                }
                (Some(_), Some(_)) => {}
                _ => report.push(&id, DocRule::DanglingReference, format!("unresolved end {s} or {t}")),
            }
        }
    }

    let mut drawn: BTreeSet<String> = BTreeSet::new();
    let plane_targets: BTreeSet<String> = root
        .descendants()
        .filter(|n| n.tag_name().namespace() == Some(BPMNDI_NS) && n.tag_name().name() == "BPMNPlane")
        .filter_map(|n| n.attribute("bpmnElement").map(str::to_string))
        .collect();
    for n in root.descendants().filter(|n| {
        n.tag_name().namespace() == Some(BPMNDI_NS) && matches!(n.tag_name().name(), "BPMNShape" | "BPMNEdge")
    }) {
        let target = n.attribute("bpmnElement").unwrap_or("").to_string();
        if !drawable.contains(&target) && !plane_targets.contains(&target) {
            report.push(&target, DocRule::OrphanDiagramElement, format!("from {}", id_of(&n)));
        }
        drawn.insert(target);
    }
    for id in drawable.difference(&drawn) {
        report.push(id, DocRule::MissingDiagramElement, "no BPMNShape or BPMNEdge");
    }
    Ok(report)
}
