//! Relation graphs around a target placement.
//!
//! Six homogeneous directed graphs are built per placement, one per relation.
//! All edges point into the target node. A zero-feature default node (ordering
//! -1) is added whenever a relation would otherwise leave the target without
//! an incoming edge.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::features::{near_wall, support_sign, surrounds, FeatureParams};
use crate::scene::{bbox_distance, bbox_xy_intersects, Scene, SceneObject};

pub const NODE_DIM: usize = 11;
const WALL_SLOT: usize = 8;
const FLOOR_SLOT: usize = 9;
const ORDER_SLOT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// Footprints intersect.
    Ix,
    /// Within the target's footprint diagonal.
    Sb,
    /// Target rests on the source.
    Sby,
    /// Source rests on the target.
    Sto,
    /// Nearby walls, or the floor when none.
    Rp,
    /// Every other object in the room.
    Co,
}

impl Relation {
    pub const ALL: [Relation; 6] =
        [Relation::Ix, Relation::Sb, Relation::Sby, Relation::Sto, Relation::Rp, Relation::Co];

    pub fn label(self) -> &'static str {
        match self {
            Relation::Ix => "IX",
            Relation::Sb => "SB",
            Relation::Sby => "SBY",
            Relation::Sto => "STO",
            Relation::Rp => "RP",
            Relation::Co => "CO",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Target,
    /// Index into the scene's object list.
    Object(usize),
    /// Index into the scene's wall list.
    Wall(usize),
    Floor,
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub kind: NodeKind,
    pub id: String,
    pub feature: [f64; NODE_DIM],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    pub relation: Relation,
    pub nodes: Vec<GraphNode>,
    /// `(source, target)` node indices.
    pub edges: Vec<(usize, usize)>,
    pub target_index: usize,
}

impl SceneGraph {
    pub fn incoming(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == node).map(|e| e.0)
    }

    pub fn has_default(&self) -> bool {
        self.nodes.iter().any(|n| n.kind == NodeKind::Default)
    }

    /// Row-major `nodes x 11` feature matrix.
    pub fn feature_matrix(&self) -> Vec<f64> {
        self.nodes.iter().flat_map(|n| n.feature).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraphSet {
    pub target_id: String,
    pub graphs: [SceneGraph; 6],
}

impl SceneGraphSet {
    pub fn get(&self, r: Relation) -> &SceneGraph {
        &self.graphs[r.index()]
    }

    /// One line per edge: `relation source_id target_id`.
    pub fn adjacency_dump(&self) -> String {
        let mut out = String::new();
        for g in &self.graphs {
            for &(s, t) in &g.edges {
                let _ = writeln!(out, "{} {} {}", g.relation.label(), g.nodes[s].id, g.nodes[t].id);
            }
        }
        out
    }
}

/// Rank of every scene element by box distance to the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceOrdering {
    /// Per scene object; `None` for the target itself.
    pub object_ranks: Vec<Option<usize>>,
    /// Rank shared by walls and the floor (after every object).
    pub room_rank: usize,
}

impl DistanceOrdering {
    pub fn as_map(&self, target: &SceneObject, s: &Scene) -> BTreeMap<String, usize> {
        let mut m: BTreeMap<String, usize> =
            s.objects().iter().zip(&self.object_ranks).filter_map(|(o, r)| r.map(|r| (o.id.clone(), r))).collect();
        m.insert(target.id.clone(), 0);
        m
    }
}

pub fn distance_ordering(target: &SceneObject, s: &Scene) -> DistanceOrdering {
    let mut order: Vec<(f64, &str, usize)> = s
        .objects()
        .iter()
        .enumerate()
        .filter(|(_, o)| o.id != target.id)
        .map(|(i, o)| (bbox_distance(&target.bbox, &o.bbox), o.id.as_str(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let mut object_ranks = vec![None; s.objects().len()];
    for (rank, (_, _, idx)) in order.iter().enumerate() {
        object_ranks[*idx] = Some(rank + 1);
    }
    DistanceOrdering { object_ranks, room_rank: order.len() + 1 }
}

fn one_hot(slot: usize, order: f64) -> [f64; NODE_DIM] {
    let mut f = [0.0; NODE_DIM];
    f[slot] = 1.0;
    f[ORDER_SLOT] = order;
    f
}

fn default_node() -> GraphNode {
    let mut feature = [0.0; NODE_DIM];
    feature[ORDER_SLOT] = -1.0;
    GraphNode { kind: NodeKind::Default, id: "default".into(), feature }
}

struct Builder {
    relation: Relation,
    nodes: Vec<GraphNode>,
    edges: Vec<(usize, usize)>,
}

impl Builder {
    fn new(relation: Relation, target: &GraphNode) -> Self {
        Self { relation, nodes: vec![target.clone()], edges: Vec::new() }
    }

    fn link(&mut self, node: GraphNode) {
        self.nodes.push(node);
        self.edges.push((self.nodes.len() - 1, 0));
    }

    fn finish(mut self) -> SceneGraph {
        if self.edges.is_empty() {
            self.link(default_node());
        }
        SceneGraph { relation: self.relation, nodes: self.nodes, edges: self.edges, target_index: 0 }
    }
}

/// Builds all six relation graphs for `target` placed in `s`.
pub fn extract_graphs(target: &SceneObject, s: &Scene, p: &FeatureParams) -> SceneGraphSet {
    let ordering = distance_ordering(target, s);
    let target_node =
        GraphNode { kind: NodeKind::Target, id: target.id.clone(), feature: one_hot(target.group.index(), 0.0) };
    let mut b: Vec<Builder> = Relation::ALL.iter().map(|r| Builder::new(*r, &target_node)).collect();

    for (idx, o) in s.objects().iter().enumerate() {
        let Some(rank) = ordering.object_ranks[idx] else { continue };
        let node = || GraphNode {
            kind: NodeKind::Object(idx),
            id: o.id.clone(),
            feature: one_hot(o.group.index(), rank as f64),
        };
        if bbox_xy_intersects(&target.bbox, &o.bbox) {
            b[Relation::Ix.index()].link(node());
        }
        if surrounds(target, o) {
            b[Relation::Sb.index()].link(node());
        }
        match support_sign(target, o, p) {
            1 => b[Relation::Sby.index()].link(node()),
            -1 => b[Relation::Sto.index()].link(node()),
            _ => {}
        }
        b[Relation::Co.index()].link(node());
    }

    let room_rank = ordering.room_rank as f64;
    for (idx, w) in s.walls().iter().enumerate() {
        if near_wall(target, s, w, p) {
            b[Relation::Rp.index()].link(GraphNode {
                kind: NodeKind::Wall(idx),
                id: w.id.clone(),
                feature: one_hot(WALL_SLOT, room_rank),
            });
        }
    }
    if b[Relation::Rp.index()].edges.is_empty() {
        b[Relation::Rp.index()].link(GraphNode {
            kind: NodeKind::Floor,
            id: "floor".into(),
            feature: one_hot(FLOOR_SLOT, room_rank),
        });
    }

    let mut it = b.into_iter().map(Builder::finish);
    let graphs = std::array::from_fn(|_| it.next().expect("six relations"));
    SceneGraphSet { target_id: target.id.clone(), graphs }
}
