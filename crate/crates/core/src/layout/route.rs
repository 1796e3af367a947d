use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{message_edge_id, sequence_edge_id, Diagram, EdgePath, Point, Shape, GRID};
use crate::transform::CollaborationSkeleton;

const STEP: u32 = 2;
const SHARED_STEP: u32 = 3;
const BEND: u32 = 10;
const MAX_EXPANSIONS: usize = 400_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    East,
    South,
    West,
    North,
}

const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

impl Side {
    /// Direction index of leaving the shape through this side.
    fn out(self) -> usize {
        self as usize
    }

    /// Direction index of entering the shape through this side.
    fn inward(self) -> usize {
        (self as usize + 2) % 4
    }

    /// Border midpoint and the first grid point strictly outside.
    fn port(self, s: &Shape) -> (Point, Point) {
        let (cx, cy) = s.centre();
        match self {
            Side::East => ((s.right(), cy), (above(s.right()), cy)),
            Side::West => ((s.x, cy), (below(s.x), cy)),
            Side::South => ((cx, s.bottom()), (cx, above(s.bottom()))),
            Side::North => ((cx, s.y), (cx, below(s.y))),
        }
    }
}

fn above(v: i64) -> i64 {
    (v.div_euclid(GRID) + 1) * GRID
}

fn below(v: i64) -> i64 {
    (v - 1).div_euclid(GRID) * GRID
}

struct Grid {
    x0: i64,
    y0: i64,
    w: usize,
    h: usize,
    blocked: Vec<bool>,
    used: Vec<bool>,
}

impl Grid {
    fn new(diagram: &Diagram) -> Self {
        let shapes = diagram.pool_shapes.iter().chain(diagram.node_shapes.values());
        let (mut x1, mut y1, mut x2, mut y2) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for s in shapes {
            x1 = x1.min(s.x);
            y1 = y1.min(s.y);
            x2 = x2.max(s.right());
            y2 = y2.max(s.bottom());
        }
        let x0 = x1.div_euclid(GRID) - 4;
        let y0 = y1.div_euclid(GRID) - 4;
        let w = (x2.div_euclid(GRID) + 5 - x0) as usize;
        let h = (y2.div_euclid(GRID) + 5 - y0) as usize;
        let mut grid = Grid {
            x0,
            y0,
            w,
            h,
            blocked: vec![false; w * h],
            used: vec![false; w * h],
        };
        for s in diagram.node_shapes.values() {
            for gy in s.y.div_euclid(GRID)..=s.bottom().div_euclid(GRID) {
                for gx in s.x.div_euclid(GRID)..=s.right().div_euclid(GRID) {
                    if s.contains_point((gx * GRID, gy * GRID)) {
                        if let Some(i) = grid.index((gx * GRID, gy * GRID)) {
                            grid.blocked[i] = true;
                        }
                    }
                }
            }
        }
        grid
    }

    fn index(&self, (x, y): Point) -> Option<usize> {
        let gx = x.div_euclid(GRID) - self.x0;
        let gy = y.div_euclid(GRID) - self.y0;
        (x % GRID == 0 && y % GRID == 0 && gx >= 0 && gy >= 0 && (gx as usize) < self.w && (gy as usize) < self.h)
            .then(|| gy as usize * self.w + gx as usize)
    }

    fn point(&self, i: usize) -> Point {
        (
            (self.x0 + (i % self.w) as i64) * GRID,
            (self.y0 + (i / self.w) as i64) * GRID,
        )
    }
}

struct Request<'a> {
    from: &'a Shape,
    to: &'a Shape,
    exits: &'a [(Side, u32)],
    entries: &'a [(Side, u32)],
    bounds: Option<&'a Shape>,
}

/// A* over (grid point, heading) with a bend penalty. Returns the waypoint
/// list from the source border to the target border.
fn search(grid: &Grid, req: &Request) -> Option<Vec<Point>> {
    let allowed = |p: Point| req.bounds.is_none_or(|b| b.contains_point(p));
    let n = grid.w * grid.h * 4;
    let mut best = vec![u32::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();

    let targets: Vec<(usize, Side, u32, Point)> = req
        .entries
        .iter()
        .filter_map(|&(side, pen)| {
            let (port, stub) = side.port(req.to);
            let i = grid.index(stub)?;
            (!grid.blocked[i] && allowed(stub)).then_some((i, side, pen, port))
        })
        .collect();
    if targets.is_empty() {
        return None;
    }
    let h = |i: usize| -> u32 {
        let (x, y) = grid.point(i);
        targets
            .iter()
            .map(|&(t, ..)| {
                let (tx, ty) = grid.point(t);
                (((x - tx).abs() + (y - ty).abs()) / GRID) as u32 * STEP
            })
            .min()
            .unwrap_or(0)
    };
    let mut starts = Vec::new();
    for &(side, pen) in req.exits {
        let (port, stub) = side.port(req.from);
        let Some(i) = grid.index(stub) else { continue };
        if grid.blocked[i] || !allowed(stub) {
            continue;
        }
        let s = i * 4 + side.out();
        if pen < best[s] {
            best[s] = pen;
            starts.push((s, port));
            heap.push(Reverse((pen + h(i), pen, s)));
        }
    }

    let self_loop = std::ptr::eq(req.from, req.to);
    let mut done: Option<(u32, usize, usize)> = None;
    let mut expansions = 0;
    while let Some(Reverse((f, g, s))) = heap.pop() {
        if done.is_some_and(|(c, ..)| f >= c) {
            break;
        }
        if g > best[s] {
            continue;
        }
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            break;
        }
        let (i, d) = (s / 4, s % 4);
        for (k, &(t, side, pen, _)) in targets.iter().enumerate() {
            if t != i || (self_loop && parent[s] == usize::MAX) {
                continue;
            }
            let cost = g + pen + if d == side.inward() { 0 } else { BEND };
            if done.is_none_or(|(c, ..)| cost < c) {
                done = Some((cost, s, k));
            }
        }
        let (x, y) = grid.point(i);
        for (nd, &(dx, dy)) in DIRS.iter().enumerate() {
            if nd == (d + 2) % 4 {
                continue;
            }
            let np = (x + dx * GRID, y + dy * GRID);
            let Some(ni) = grid.index(np) else { continue };
            if grid.blocked[ni] || !allowed(np) {
                continue;
            }
            let step = if grid.used[ni] { SHARED_STEP } else { STEP };
            let ng = g + step + if nd == d { 0 } else { BEND };
            let ns = ni * 4 + nd;
            if ng < best[ns] {
                best[ns] = ng;
                parent[ns] = s;
                heap.push(Reverse((ng + h(ni), ng, ns)));
            }
        }
    }

    let (_, mut s, k) = done?;
    let mut points = vec![targets[k].3];
    loop {
        points.push(grid.point(s / 4));
        if parent[s] == usize::MAX {
            break;
        }
        s = parent[s];
    }
    let &(_, port) = starts.iter().find(|(st, _)| *st == s)?;
    points.push(port);
    points.reverse();
    Some(simplify(points))
}

/// Drops repeated and collinear interior points.
fn simplify(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            if (a.0 == b.0 && b.0 == p.0) || (a.1 == b.1 && b.1 == p.1) {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

fn z_route(from: &Shape, to: &Shape, vertical: bool) -> Vec<Point> {
    let (a, b) = if vertical {
        let down = from.centre().1 <= to.centre().1;
        let a = if down { Side::South } else { Side::North }.port(from).0;
        let b = if down { Side::North } else { Side::South }.port(to).0;
        let my = (a.1 + b.1) / 2;
        return simplify(vec![a, (a.0, my), (b.0, my), b]);
    } else {
        (Side::East.port(from).0, Side::West.port(to).0)
    };
    let mx = (a.0 + b.0) / 2;
    simplify(vec![a, (mx, a.1), (mx, b.1), b])
}

const SEQUENCE_EXITS: [(Side, u32); 4] = [(Side::East, 0), (Side::South, 6), (Side::North, 6), (Side::West, 16)];
const SEQUENCE_ENTRIES: [(Side, u32); 4] = [(Side::West, 0), (Side::North, 6), (Side::South, 6), (Side::East, 16)];

/// Routes every sequence flow inside its pool and every message flow between
/// the bottom or top midpoints of its events. Edges are routed in id order;
/// later edges pay slightly more for grid points already in use.
pub fn route_edges(diagram: &Diagram, sk: &CollaborationSkeleton) -> Diagram {
    let mut out = diagram.clone();
    out.edge_paths.clear();
    out.fallbacks.clear();
    let mut grid = Grid::new(diagram);

    let mut jobs: Vec<(String, &str, &str, Option<&str>)> = Vec::new();
    for (pool, flows) in &sk.flows_by_pool {
        for (u, v) in flows {
            jobs.push((sequence_edge_id(u, v), u, v, Some(pool)));
        }
    }
    for m in &sk.message_flows {
        jobs.push((message_edge_id(m), &m.throw, &m.catch, None));
    }
    jobs.sort();

    for (id, u, v, pool) in jobs {
        let (Some(from), Some(to)) = (diagram.node_shapes.get(u), diagram.node_shapes.get(v)) else {
            continue;
        };
        let down = from.centre().1 <= to.centre().1;
        let message_exit = [(if down { Side::South } else { Side::North }, 0)];
        let message_entry = [(if down { Side::North } else { Side::South }, 0)];
        let self_exit = [(Side::East, 0)];
        let self_entry = [(Side::North, 0)];
        let (exits, entries): (&[_], &[_]) = match pool {
            None => (&message_exit, &message_entry),
            Some(_) if u == v => (&self_exit, &self_entry),
            Some(_) => (&SEQUENCE_EXITS, &SEQUENCE_ENTRIES),
        };
        let req = Request {
            from,
            to,
            exits,
            entries,
            bounds: pool.and_then(|p| diagram.pool(p)),
        };
        let waypoints = match search(&grid, &req) {
            Some(w) => w,
            None => {
                out.fallbacks.insert(id.clone());
                z_route(from, to, pool.is_none())
            }
        };
        for seg in waypoints.windows(2) {
            mark_used(&mut grid, seg[0], seg[1]);
        }
        out.edge_paths.insert(
            id.clone(),
            EdgePath {
                element_id: id,
                waypoints,
            },
        );
    }
    out
}

fn mark_used(grid: &mut Grid, a: Point, b: Point) {
    let steps = ((b.0 - a.0).abs() + (b.1 - a.1).abs()) / GRID;
    let (dx, dy) = ((b.0 - a.0).signum() * GRID, (b.1 - a.1).signum() * GRID);
    for k in 0..=steps {
        if let Some(i) = grid.index((a.0 + k * dx, a.1 + k * dy)) {
            grid.used[i] = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn diagram(nodes: &[Shape]) -> Diagram {
        Diagram {
            pool_shapes: vec![Shape::new("P", 0, 0, 800, 400)],
            node_shapes: nodes.iter().map(|s| (s.element_id.clone(), s.clone())).collect::<BTreeMap<_, _>>(),
            ..Diagram::default()
        }
    }

    fn route(d: &Diagram, a: &str, b: &str) -> Option<Vec<Point>> {
        let grid = Grid::new(d);
        search(
            &grid,
            &Request {
                from: &d.node_shapes[a],
                to: &d.node_shapes[b],
                exits: &SEQUENCE_EXITS,
                entries: &SEQUENCE_ENTRIES,
                bounds: d.pool("P"),
            },
        )
    }

    #[test]
    fn same_row_is_straight() {
        let d = diagram(&[Shape::new("a", 100, 100, 100, 80), Shape::new("b", 300, 100, 100, 80)]);
        assert_eq!(route(&d, "a", "b").unwrap(), vec![(200, 140), (300, 140)]);
    }

    #[test]
    fn different_rows_bend() {
        let d = diagram(&[Shape::new("a", 100, 100, 100, 80), Shape::new("b", 300, 250, 100, 80)]);
        let w = route(&d, "a", "b").unwrap();
        assert!(w.len() >= 3);
        let path = EdgePath {
            element_id: "e".into(),
            waypoints: w,
        };
        assert!(path.is_orthogonal());
    }

    #[test]
    fn detours_around_obstacle() {
        let d = diagram(&[
            Shape::new("a", 100, 100, 100, 80),
            Shape::new("x", 300, 100, 100, 80),
            Shape::new("b", 500, 100, 100, 80),
        ]);
        let w = route(&d, "a", "b").unwrap();
        let obstacle = &d.node_shapes["x"];
        assert!(w.windows(2).all(|s| !obstacle.segment_enters(s[0], s[1])));
        assert!(d.node_shapes["a"].on_border(w[0]));
        assert!(d.node_shapes["b"].on_border(*w.last().unwrap()));
    }

    #[test]
    fn simplify_merges_collinear() {
        assert_eq!(
            simplify(vec![(0, 0), (10, 0), (20, 0), (20, 0), (20, 10)]),
            vec![(0, 0), (20, 0), (20, 10)]
        );
    }

    #[test]
    fn grid_snapping_is_strict() {
        assert_eq!(above(200), 210);
        assert_eq!(above(168), 170);
        assert_eq!(below(100), 90);
        assert_eq!(below(132), 130);
    }
}
