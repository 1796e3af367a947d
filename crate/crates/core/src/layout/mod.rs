//! Diagram geometry: a flat layered placement of all flow nodes, pools and
//! lanes ordered by their leftmost node, nodes moved into their lane bands
//! without changing x, and orthogonal grid routing for every edge.

mod layering;
mod route;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::transform::{CollaborationSkeleton, MessageFlow, NodeKind};

pub use layering::layers;
pub use route::route_edges;

pub const TASK_SIZE: (i64, i64) = (100, 80);
pub const GATEWAY_SIZE: (i64, i64) = (50, 50);
pub const EVENT_SIZE: (i64, i64) = (36, 36);
pub const LANE_PADDING: i64 = 20;
pub const LAYER_GAP: i64 = 60;
pub const ROW_GAP: i64 = 30;
pub const GRID: i64 = 10;
/// Width of the name band on the left of pools and lanes.
pub const LABEL_BAND: i64 = 30;
pub const POOL_GAP: i64 = 60;
pub const MARGIN: i64 = 20;

// every layer and row slot is sized for a task so node centres sit on the grid
const COL_PITCH: i64 = TASK_SIZE.0 + LAYER_GAP;
const ROW_PITCH: i64 = TASK_SIZE.1 + ROW_GAP;
const ORIGIN_X: i64 = MARGIN + 2 * LABEL_BAND + LANE_PADDING;
const ORIGIN_Y: i64 = MARGIN + LANE_PADDING;

pub type Point = (i64, i64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub element_id: String,
    pub x: i64,
    pub y: i64,
    pub width: i64,
    pub height: i64,
}

impl Shape {
    pub fn new(element_id: impl Into<String>, x: i64, y: i64, width: i64, height: i64) -> Self {
        Self {
            element_id: element_id.into(),
            x,
            y,
            width,
            height,
        }
    }

    fn centred(element_id: &str, (cx, cy): Point, (w, h): (i64, i64)) -> Self {
        Self::new(element_id, cx - w / 2, cy - h / 2, w, h)
    }

    pub fn right(&self) -> i64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.height
    }

    pub fn centre(&self) -> Point {
        (self.x + self.width / 2, self.y + self.height / 2)
    }

    pub fn contains(&self, other: &Shape) -> bool {
        self.x <= other.x && self.y <= other.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }

    pub fn contains_point(&self, (px, py): Point) -> bool {
        self.x <= px && px <= self.right() && self.y <= py && py <= self.bottom()
    }

    /// Interiors intersect.
    pub fn overlaps(&self, other: &Shape) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }

    pub fn on_border(&self, p: Point) -> bool {
        self.contains_point(p) && (p.0 == self.x || p.0 == self.right() || p.1 == self.y || p.1 == self.bottom())
    }

    /// Whether the axis-parallel segment a-b meets the open interior.
    pub fn segment_enters(&self, a: Point, b: Point) -> bool {
        let (x1, x2) = (a.0.min(b.0), a.0.max(b.0));
        let (y1, y2) = (a.1.min(b.1), a.1.max(b.1));
        if y1 == y2 {
            self.y < y1 && y1 < self.bottom() && x1 < self.right() && x2 > self.x
        } else if x1 == x2 {
            self.x < x1 && x1 < self.right() && y1 < self.bottom() && y2 > self.y
        } else {
            true
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgePath {
    pub element_id: String,
    pub waypoints: Vec<Point>,
}

impl EdgePath {
    pub fn is_orthogonal(&self) -> bool {
        self.waypoints.len() >= 2
            && self
                .waypoints
                .windows(2)
                .all(|w| (w[0].0 == w[1].0) != (w[0].1 == w[1].1))
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.waypoints.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Diagram {
    /// Keyed by pool name, top to bottom.
    pub pool_shapes: Vec<Shape>,
    /// Lane shapes per pool (keyed by lane name), top to bottom.
    pub lane_shapes: BTreeMap<String, Vec<Shape>>,
    pub node_shapes: BTreeMap<String, Shape>,
    /// Keyed by [`sequence_edge_id`] or [`message_edge_id`].
    pub edge_paths: BTreeMap<String, EdgePath>,
    /// Edges that fell back to a plain Z-route.
    pub fallbacks: BTreeSet<String>,
}

pub fn sequence_edge_id(source: &str, target: &str) -> String {
    format!("{source}->{target}")
}

pub fn message_edge_id(m: &MessageFlow) -> String {
    format!("{}=>{}", m.throw, m.catch)
}

pub fn node_size(kind: NodeKind) -> (i64, i64) {
    match kind {
        NodeKind::Task => TASK_SIZE,
        NodeKind::AndGateway | NodeKind::XorGateway => GATEWAY_SIZE,
        _ => EVENT_SIZE,
    }
}

impl Diagram {
    pub fn pool(&self, name: &str) -> Option<&Shape> {
        self.pool_shapes.iter().find(|s| s.element_id == name)
    }

    pub fn lane(&self, pool: &str, lane: &str) -> Option<&Shape> {
        self.lane_shapes.get(pool)?.iter().find(|s| s.element_id == lane)
    }

    /// Geometric invariants against the skeleton; one message per violation.
    pub fn check(&self, sk: &CollaborationSkeleton) -> Vec<String> {
        let mut problems = Vec::new();
        for (i, a) in self.pool_shapes.iter().enumerate() {
            for b in &self.pool_shapes[i + 1..] {
                if a.overlaps(b) {
                    problems.push(format!("pools {} and {} overlap", a.element_id, b.element_id));
                }
            }
        }
        for pool in &self.pool_shapes {
            let lanes = self.lane_shapes.get(&pool.element_id).map_or(&[][..], Vec::as_slice);
            let mut y = pool.y;
            for lane in lanes {
                if !pool.contains(lane) {
                    problems.push(format!("lane {} leaves pool {}", lane.element_id, pool.element_id));
                }
                if lane.y != y || lane.right() != pool.right() {
                    problems.push(format!("lanes of {} do not tile it", pool.element_id));
                }
                y = lane.bottom();
            }
            if y != pool.bottom() {
                problems.push(format!("lanes of {} do not fill it", pool.element_id));
            }
        }
        for n in sk.nodes() {
            let (Some(shape), Some(ctx)) = (self.node_shapes.get(&n.id), sk.assignment.get(&n.id)) else {
                problems.push(format!("node {} has no shape", n.id));
                continue;
            };
            if !self.lane(&ctx.pool, &ctx.lane).is_some_and(|l| l.contains(shape)) {
                problems.push(format!("node {} outside lane {ctx}", n.id));
            }
        }
        let shapes: Vec<&Shape> = self.node_shapes.values().collect();
        for (i, a) in shapes.iter().enumerate() {
            for b in &shapes[i + 1..] {
                if a.overlaps(b) {
                    problems.push(format!("nodes {} and {} overlap", a.element_id, b.element_id));
                }
            }
        }
        let mut edges: Vec<(String, &str, &str, Option<&str>)> = Vec::new();
        for (pool, flows) in &sk.flows_by_pool {
            for (u, v) in flows {
                edges.push((sequence_edge_id(u, v), u, v, Some(pool)));
            }
        }
        for m in &sk.message_flows {
            edges.push((message_edge_id(m), &m.throw, &m.catch, None));
        }
        for (id, u, v, pool) in edges {
            let Some(path) = self.edge_paths.get(&id) else {
                problems.push(format!("edge {id} has no path"));
                continue;
            };
            if !path.is_orthogonal() {
                problems.push(format!("edge {id} is not orthogonal"));
            }
            let (Some(su), Some(sv)) = (self.node_shapes.get(u), self.node_shapes.get(v)) else {
                continue;
            };
            let (first, last) = (path.waypoints[0], *path.waypoints.last().unwrap());
            if !su.on_border(first) || !sv.on_border(last) {
                problems.push(format!("edge {id} does not start and end on its nodes"));
            }
            for (a, b) in path.segments() {
                if let Some(s) = shapes.iter().find(|s| s.segment_enters(a, b)) {
                    problems.push(format!("edge {id} crosses node {}", s.element_id));
                    break;
                }
            }
            if let Some(rect) = pool.and_then(|p| self.pool(p)) {
                if !path.waypoints.iter().all(|&p| rect.contains_point(p)) {
                    problems.push(format!("edge {id} leaves pool {}", rect.element_id));
                }
            }
        }
        problems
    }
}

/// Flat layered placement over all nodes, ignoring pools and lanes. Message
/// flows count as ordinary edges.
pub fn initial_layout(sk: &CollaborationSkeleton) -> BTreeMap<String, Shape> {
    let mut rho = BTreeMap::new();
    for (col, layer) in layers(sk).iter().enumerate() {
        for (row, id) in layer.iter().enumerate() {
            let kind = sk.node(id).map_or(NodeKind::Task, |n| n.kind);
            let centre = (
                ORIGIN_X + col as i64 * COL_PITCH + TASK_SIZE.0 / 2,
                ORIGIN_Y + row as i64 * ROW_PITCH + TASK_SIZE.1 / 2,
            );
            rho.insert(id.clone(), Shape::centred(id, centre, node_size(kind)));
        }
    }
    rho
}

fn order_by_leftmost<'a>(groups: impl Iterator<Item = (&'a str, Vec<&'a str>)>, rho: &BTreeMap<String, Shape>) -> Vec<String> {
    let mut keyed: Vec<(i64, &str)> = groups
        .map(|(name, ids)| {
            let min_x = ids.iter().filter_map(|id| rho.get(*id)).map(|s| s.x).min().unwrap_or(i64::MAX);
            (min_x, name)
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|(_, n)| n.to_string()).collect()
}

/// Pools top to bottom by their leftmost node; ties alphabetical.
pub fn order_pools(sk: &CollaborationSkeleton, rho: &BTreeMap<String, Shape>) -> Vec<String> {
    order_by_leftmost(
        sk.pools.iter().map(|p| {
            let ids = sk.nodes_by_pool.get(p).map(|m| m.keys().map(String::as_str).collect()).unwrap_or_default();
            (p.as_str(), ids)
        }),
        rho,
    )
}

/// Lanes of one pool top to bottom by their leftmost node; ties alphabetical.
pub fn order_lanes(sk: &CollaborationSkeleton, pool: &str, rho: &BTreeMap<String, Shape>) -> Vec<String> {
    let lanes = sk.lanes_by_pool.get(pool).map_or(&[][..], Vec::as_slice);
    order_by_leftmost(
        lanes.iter().map(|lane| {
            let ids = sk
                .assignment
                .iter()
                .filter(|(_, c)| c.pool == pool && &c.lane == lane)
                .map(|(id, _)| id.as_str())
                .collect();
            (lane.as_str(), ids)
        }),
        rho,
    )
}

/// Moves every node into its lane band, keeping its x. Within a lane, nodes
/// sharing a column are stacked in their initial vertical order.
pub fn place_nodes(
    sk: &CollaborationSkeleton,
    rho: &BTreeMap<String, Shape>,
    pool_order: &[String],
    lane_orders: &BTreeMap<String, Vec<String>>,
) -> Diagram {
    let right = rho.values().map(Shape::right).max().unwrap_or(ORIGIN_X) + LANE_PADDING;
    let width = (right - MARGIN + GRID - 1) / GRID * GRID;
    let mut diagram = Diagram::default();
    let mut y = MARGIN;
    for pool in pool_order {
        let pool_y = y;
        let mut lane_shapes = Vec::new();
        for lane in lane_orders.get(pool).map_or(&[][..], Vec::as_slice) {
            // column centre x -> nodes in that column
            let mut columns: BTreeMap<i64, Vec<(&Shape, &str)>> = BTreeMap::new();
            for (id, ctx) in &sk.assignment {
                if &ctx.pool == pool && &ctx.lane == lane {
                    if let Some(s) = rho.get(id) {
                        columns.entry(s.centre().0).or_default().push((s, id));
                    }
                }
            }
            let rows = columns.values().map(Vec::len).max().unwrap_or(1).max(1) as i64;
            let height = 2 * LANE_PADDING + rows * ROW_PITCH - ROW_GAP;
            for (cx, mut members) in columns {
                members.sort_by_key(|(s, id)| (s.centre().1, *id));
                for (row, (s, id)) in members.into_iter().enumerate() {
                    let cy = y + LANE_PADDING + row as i64 * ROW_PITCH + TASK_SIZE.1 / 2;
                    diagram
                        .node_shapes
                        .insert(id.to_string(), Shape::centred(id, (cx, cy), (s.width, s.height)));
                }
            }
            lane_shapes.push(Shape::new(lane, MARGIN + LABEL_BAND, y, width - LABEL_BAND, height));
            y += height;
        }
        diagram.pool_shapes.push(Shape::new(pool, MARGIN, pool_y, width, y - pool_y));
        diagram.lane_shapes.insert(pool.clone(), lane_shapes);
        y += POOL_GAP;
    }
    diagram
}

/// All layout steps in order.
pub fn layout(sk: &CollaborationSkeleton) -> Diagram {
    let rho = initial_layout(sk);
    let pools = order_pools(sk, &rho);
    let lanes: BTreeMap<String, Vec<String>> = pools
        .iter()
        .map(|p| (p.clone(), order_lanes(sk, p, &rho)))
        .collect();
    let placed = place_nodes(sk, &rho, &pools, &lanes);
    route_edges(&placed, sk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::transform::compile;

    fn skeleton(body: &str) -> CollaborationSkeleton {
        compile(&parse(&format!("process \"p\" {{ {body} }}")).unwrap()).unwrap()
    }

    #[test]
    fn chain_moves_right() {
        let sk = skeleton(
            r#"po x { act a "A" @ "P" / "L" act b "B" @ "P" / "L" act c "C" @ "P" / "L" order { a -> b b -> c } }"#,
        );
        let rho = initial_layout(&sk);
        assert!(rho["x.a.task"].x < rho["x.b.task"].x);
        assert!(rho["x.b.task"].x < rho["x.c.task"].x);
    }

    #[test]
    fn parallel_branches_share_layer() {
        let sk = skeleton(r#"po x { act a "A" @ "P" / "L" act b "B" @ "P" / "L" }"#);
        let rho = initial_layout(&sk);
        assert_eq!(rho["x.a.task"].x, rho["x.b.task"].x);
        assert_ne!(rho["x.a.task"].y, rho["x.b.task"].y);
    }

    #[test]
    fn pools_follow_leftmost_node() {
        let sk = skeleton(
            r#"po x { act a "A" @ "Zeta" / "L" act b "B" @ "Alpha" / "L" order { a -> b } }"#,
        );
        let rho = initial_layout(&sk);
        assert_eq!(order_pools(&sk, &rho), ["Zeta", "Alpha"]);
    }

    #[test]
    fn equal_leftmost_is_alphabetical() {
        let sk = skeleton(r#"po x { act a "A" @ "P" / "Q" act b "B" @ "P" / "K" }"#);
        let rho = initial_layout(&sk);
        // the start event sits in the lane of the smaller successor id, so
        // compare lanes via a model where neither lane holds the start
        let lanes = order_lanes(&sk, "P", &rho);
        assert_eq!(lanes.len(), 2);
        let mut rho2 = rho.clone();
        for s in rho2.values_mut() {
            s.x = 0;
        }
        assert_eq!(order_lanes(&sk, "P", &rho2), ["K", "Q"]);
    }

    #[test]
    fn single_node_model() {
        let sk = skeleton(r#"act a "A" @ "P" / "L""#);
        let d = layout(&sk);
        assert_eq!(d.pool_shapes.len(), 1);
        assert_eq!(d.lane_shapes["P"].len(), 1);
        assert!(d.check(&sk).is_empty(), "{:?}", d.check(&sk));
    }

    #[test]
    fn x_order_preserved_and_contained() {
        let sk = skeleton(
            r#"po x { act a "A" @ "P" / "L" act b "B" @ "Q" / "M" act c "C" @ "P" / "K" order { a -> b b -> c } }"#,
        );
        let rho = initial_layout(&sk);
        let d = layout(&sk);
        for (id, s) in &d.node_shapes {
            assert_eq!(s.x, rho[id].x);
        }
        assert!(d.check(&sk).is_empty(), "{:?}", d.check(&sk));
    }

    #[test]
    fn deterministic() {
        let body = r#"po x { act a "A" @ "P" / "L" act b "B" @ "Q" / "M" act c "C" @ "P" / "K" order { a -> b } }"#;
        assert_eq!(layout(&skeleton(body)), layout(&skeleton(body)));
    }

    #[test]
    fn segment_geometry() {
        let s = Shape::new("n", 100, 100, 100, 80);
        assert!(s.segment_enters((50, 140), (250, 140)));
        assert!(!s.segment_enters((50, 100), (250, 100)));
        assert!(!s.segment_enters((50, 140), (100, 140)));
        assert!(s.segment_enters((150, 0), (150, 120)));
        assert!(s.on_border((200, 140)));
        assert!(!s.on_border((150, 140)));
    }
}
