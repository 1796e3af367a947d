//! Seeded random models for property tests and benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    ChoiceGraph, ChoicePoint, Label, Node, PartialOrder, PowlModel, ResourceContext, Transition,
};

#[derive(Debug, Clone)]
pub struct SampleConfig {
    /// Operator nesting depth; a lone transition has depth 0.
    pub max_depth: usize,
    pub max_visible: usize,
    pub max_children: usize,
    pub pools: usize,
    pub lanes_per_pool: usize,
    /// Allow back edges, self-loops and skips in choice graphs.
    pub cycles: bool,
    pub silent_probability: f64,
    /// Small label alphabet so duplicate labels are common.
    pub labels: Vec<String>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            max_depth: 3,
            max_visible: 6,
            max_children: 4,
            pools: 1,
            lanes_per_pool: 2,
            cycles: false,
            silent_probability: 0.15,
            labels: ["a", "b", "c", "d", "e", "f"].map(String::from).to_vec(),
        }
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    cfg: &'a SampleConfig,
    visible_left: usize,
    transitions: usize,
    operators: usize,
}

impl Gen<'_> {
    fn leaf(&mut self) -> Node {
        self.transitions += 1;
        let id = format!("t{}", self.transitions);
        let silent = self.visible_left == 0 || self.rng.gen_bool(self.cfg.silent_probability);
        if silent {
            Node::Transition(Transition::silent(id))
        } else {
            self.visible_left -= 1;
            let label = self.cfg.labels.choose(&mut self.rng).unwrap().clone();
            Node::Transition(Transition::visible(id, label))
        }
    }

    fn node(&mut self, depth: usize) -> Node {
        if depth == self.cfg.max_depth || self.visible_left == 0 || self.rng.gen_bool(0.3) {
            return self.leaf();
        }
        self.operators += 1;
        let id = format!("n{}", self.operators);
        let k = self.rng.gen_range(1..=self.cfg.max_children.max(1));
        let children: Vec<Node> = (0..k).map(|_| self.node(depth + 1)).collect();
        if self.rng.gen_bool(0.5) {
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut self.rng);
            let mut order = BTreeSet::new();
            for i in 0..k {
                for j in i + 1..k {
                    if self.rng.gen_bool(0.35) {
                        order.insert((perm[i], perm[j]));
                    }
                }
            }
            Node::PartialOrder(PartialOrder { id, children, order })
        } else {
            let edges = self.choice_edges(k);
            Node::Choice(ChoiceGraph { id, children, edges })
        }
    }

    /// Every child gets an edge from the start or an earlier child and one to
    /// the end or a later child, so all children lie on a start-end path.
    fn choice_edges(&mut self, k: usize) -> BTreeSet<(ChoicePoint, ChoicePoint)> {
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut self.rng);
        let mut edges = BTreeSet::new();
        for (pos, &c) in perm.iter().enumerate() {
            let from = if pos > 0 && self.rng.gen_bool(0.4) {
                ChoicePoint::Child(perm[self.rng.gen_range(0..pos)])
            } else {
                ChoicePoint::Start
            };
            let to = if pos + 1 < k && self.rng.gen_bool(0.4) {
                ChoicePoint::Child(perm[self.rng.gen_range(pos + 1..k)])
            } else {
                ChoicePoint::End
            };
            edges.insert((from, ChoicePoint::Child(c)));
            edges.insert((ChoicePoint::Child(c), to));
        }
        if self.cfg.cycles {
            if self.rng.gen_bool(0.4) {
                let a = self.rng.gen_range(0..k);
                let b = self.rng.gen_range(0..k);
                edges.insert((ChoicePoint::Child(a), ChoicePoint::Child(b)));
            }
            if self.rng.gen_bool(0.2) {
                edges.insert((ChoicePoint::Start, ChoicePoint::End));
            }
        }
        edges
    }
}

fn first_leaf_mut(node: &mut Node) -> &mut Transition {
    match node {
        Node::Transition(t) => t,
        Node::PartialOrder(p) => first_leaf_mut(&mut p.children[0]),
        Node::Choice(c) => first_leaf_mut(&mut c.children[0]),
    }
}

/// A valid model with at least one visible transition, fully determined by
/// `seed` and `cfg`.
pub fn random_model(seed: u64, cfg: &SampleConfig) -> PowlModel {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        visible_left: cfg.max_visible.max(1),
        transitions: 0,
        operators: 0,
    };
    let mut root = g.node(0);
    if root.transitions().all(|t| t.label.is_silent()) {
        let t = first_leaf_mut(&mut root);
        t.label = Label::Visible(cfg.labels.first().cloned().unwrap_or_else(|| "a".into()));
    }
    let mut assignment = BTreeMap::new();
    for t in root.transitions() {
        if !t.label.is_silent() {
            let pool = g.rng.gen_range(1..=cfg.pools.max(1));
            let lane = g.rng.gen_range(1..=cfg.lanes_per_pool.max(1));
            assignment.insert(t.id.clone(), ResourceContext::new(format!("Pool {pool}"), format!("Lane {lane}")));
        }
    }
    PowlModel {
        name: format!("random {seed}"),
        root,
        assignment,
    }
}

/// A partial order (`choice == false`) or choice graph over `n` visible
/// transitions with random structure.
pub fn random_operator(seed: u64, n: usize, choice: bool) -> PowlModel {
    let cfg = SampleConfig::default();
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg: &cfg,
        visible_left: 0,
        transitions: 0,
        operators: 1,
    };
    let children: Vec<Node> = (1..=n)
        .map(|i| Node::Transition(Transition::visible(format!("t{i}"), format!("act {i}"))))
        .collect();
    let root = if choice {
        let edges = g.choice_edges(n);
        Node::Choice(ChoiceGraph {
            id: "n1".into(),
            children,
            edges,
        })
    } else {
        let mut order = BTreeSet::new();
        for i in 0..n {
            for j in i + 1..n {
                if g.rng.gen_bool(0.35) {
                    order.insert((i, j));
                }
            }
        }
        Node::PartialOrder(PartialOrder {
            id: "n1".into(),
            children,
            order,
        })
    };
    let assignment = (1..=n)
        .map(|i| (format!("t{i}"), ResourceContext::new("Pool", "Lane")))
        .collect();
    PowlModel {
        name: format!("operator {seed}"),
        root,
        assignment,
    }
}
