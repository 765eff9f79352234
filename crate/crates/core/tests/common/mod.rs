//! Shared fixtures and brute-force oracles for the integration tests.
//!
//! Oracles restate each relation from its definition with a different
//! algorithm than the library: box distances by alternating projection,
//! wall distances by segment clipping plus endpoint and corner distances.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scenefit::features::{layout, FeatureParams, RhoMode};
use scenefit::graph::{extract_graphs, NodeKind, Relation, SceneGraphSet};
use scenefit::nn::{ParamSet, Tensor2};
use scenefit::{BoundingBox3, FurnitureGroup, Point2, Scene, SceneObject};

pub mod gradcheck;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rectangular or L-shaped room with `n_objects` boxes. Some boxes sit flush
/// against a wall and some are stacked on earlier boxes at small gaps.
pub fn random_scene(id: &str, n_objects: usize, rng: &mut impl Rng) -> Scene {
    let l = rng.gen_range(3.0..8.0);
    let w = rng.gen_range(3.0..8.0);
    // Notch corner of the L-shape; the full rectangle has none.
    let mut notch = (f64::INFINITY, f64::INFINITY);
    let verts = if rng.gen_bool(0.3) {
        let (cx, cy) = (rng.gen_range(0.4..0.8) * l, rng.gen_range(0.4..0.8) * w);
        notch = (cx, cy);
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(l, 0.0),
            Point2::new(l, cy),
            Point2::new(cx, cy),
            Point2::new(cx, w),
            Point2::new(0.0, w),
        ]
    } else {
        vec![Point2::new(0.0, 0.0), Point2::new(l, 0.0), Point2::new(l, w), Point2::new(0.0, w)]
    };
    let mut objects: Vec<SceneObject> = Vec::with_capacity(n_objects);
    for i in 0..n_objects {
        let group = FurnitureGroup::ALL[rng.gen_range(0..8)];
        let d = [rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0), rng.gen_range(0.1..2.0)];
        let mut min = [rng.gen_range(0.0..l - d[0]), rng.gen_range(0.0..w - d[1]), 0.0];
        if rng.gen_bool(0.2) {
            min[0] = 0.0;
        }
        while min[0] + d[0] / 2.0 >= notch.0 && min[1] + d[1] / 2.0 >= notch.1 {
            min[0] = rng.gen_range(0.0..l - d[0]);
        }
        if !objects.is_empty() && rng.gen_bool(0.25) {
            let base = &objects[rng.gen_range(0..objects.len())].bbox;
            let gap = [0.0, 0.01, 0.03, 0.049, 0.07][rng.gen_range(0..5)];
            let c = base.centroid_xy();
            min = [c.x - d[0] / 2.0, c.y - d[1] / 2.0, base.max[2] + gap];
        }
        let bbox = BoundingBox3::new(min, [min[0] + d[0], min[1] + d[1], min[2] + d[2]]).unwrap();
        objects.push(SceneObject::new(format!("o{i:02}"), group, bbox));
    }
    Scene::new(id, "room", verts, objects).unwrap()
}

fn clamp3(p: [f64; 3], b: &BoundingBox3) -> [f64; 3] {
    std::array::from_fn(|k| p[k].clamp(b.min[k], b.max[k]))
}

fn norm3(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

/// Shortest distance between two boxes by alternating projection.
pub fn box_distance(a: &BoundingBox3, b: &BoundingBox3) -> f64 {
    let mut p = a.centroid();
    for _ in 0..8 {
        let q = clamp3(p, b);
        p = clamp3(q, a);
    }
    norm3(p, clamp3(p, b))
}

fn point_rect(p: Point2, r: (f64, f64, f64, f64)) -> f64 {
    let dx = (r.0 - p.x).max(0.0).max(p.x - r.2);
    let dy = (r.1 - p.y).max(0.0).max(p.y - r.3);
    dx.hypot(dy)
}

fn point_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (a.x + t * dx - p.x).hypot(a.y + t * dy - p.y)
}

/// Liang-Barsky: does the closed segment touch the closed rectangle?
pub fn segment_hits_rect(a: Point2, b: Point2, r: (f64, f64, f64, f64)) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-dx, a.x - r.0), (dx, r.2 - a.x), (-dy, a.y - r.1), (dy, r.3 - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    t0 <= t1
}

pub fn footprint(b: &BoundingBox3) -> (f64, f64, f64, f64) {
    (b.min[0], b.min[1], b.max[0], b.max[1])
}

pub fn wall_distance(b: &BoundingBox3, a: Point2, c: Point2) -> f64 {
    let r = footprint(b);
    if segment_hits_rect(a, c, r) {
        return 0.0;
    }
    let corners = [Point2::new(r.0, r.1), Point2::new(r.2, r.1), Point2::new(r.2, r.3), Point2::new(r.0, r.3)];
    corners.iter().map(|k| point_segment(*k, a, c)).fold(point_rect(a, r).min(point_rect(c, r)), f64::min)
}

/// Wall proximity threshold: 20% of the room extent measured across the wall.
pub fn rho(s: &Scene, a: Point2, c: Point2, p: &FeatureParams) -> f64 {
    let xs: Vec<f64> = s.walls().iter().map(|w| w.segment.a.x).collect();
    let ys: Vec<f64> = s.walls().iter().map(|w| w.segment.a.y).collect();
    let span = |v: &[f64]| {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let (lx, ly) = (span(&xs), span(&ys));
    match p.rho_mode {
        RhoMode::Min => p.rho_fraction * lx.min(ly),
        RhoMode::PerAxis => {
            let angle = (c.y - a.y).atan2(c.x - a.x).abs();
            let runs_along_x = angle <= std::f64::consts::FRAC_PI_4 || angle >= 3.0 * std::f64::consts::FRAC_PI_4;
            p.rho_fraction * if runs_along_x { ly } else { lx }
        }
    }
}

pub fn near_walls(o: &SceneObject, s: &Scene, p: &FeatureParams) -> Vec<usize> {
    s.walls()
        .iter()
        .enumerate()
        .filter(|(_, w)| wall_distance(&o.bbox, w.segment.a, w.segment.b) < rho(s, w.segment.a, w.segment.b, p))
        .map(|(i, _)| i)
        .collect()
}

fn footprints_touch(a: &BoundingBox3, b: &BoundingBox3) -> bool {
    let (x, y) = (footprint(a), footprint(b));
    x.0 <= y.2 && y.0 <= x.2 && x.1 <= y.3 && y.1 <= x.3
}

/// Vertical gap strictly inside `(0, tau)` between `upper.bottom` and `lower.top`.
pub fn rests_on(upper: &BoundingBox3, lower: &BoundingBox3, tau: f64) -> bool {
    let gap = upper.min[2] - lower.max[2];
    footprints_touch(upper, lower) && gap > 0.0 && gap < tau
}

pub fn within_diagonal(o: &BoundingBox3, j: &BoundingBox3) -> bool {
    box_distance(o, j) < (o.max[0] - o.min[0]).hypot(o.max[1] - o.min[1])
}

fn others<'a>(o: &'a SceneObject, s: &'a Scene) -> impl Iterator<Item = &'a SceneObject> {
    s.objects().iter().filter(move |j| j.id != o.id)
}

/// The 48-entry summary vector assembled from the oracles.
pub fn summary(o: &SceneObject, s: &Scene, p: &FeatureParams) -> [f64; layout::LEN] {
    let mut v = [0.0; layout::LEN];
    let mut near: Vec<(f64, &SceneObject)> = others(o, s).map(|j| (box_distance(&o.bbox, &j.bbox), j)).collect();
    near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.id.cmp(&b.1.id)));
    for (k, (_, j)) in near.iter().take(3).enumerate() {
        v[k] = (j.group.index() + 1) as f64;
    }
    match near_walls(o, s, p).len() {
        0 => {}
        1 => v[layout::EB] = 1.0,
        _ => v[layout::CB] = 1.0,
    }
    for g in FurnitureGroup::ALL {
        let d: Vec<f64> = others(o, s).filter(|j| j.group == g).map(|j| box_distance(&o.bbox, &j.bbox)).collect();
        v[layout::AD + g.index()] = if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 };
        v[layout::SB + g.index()] =
            others(o, s).filter(|j| j.group == g && within_diagonal(&o.bbox, &j.bbox)).count() as f64;
    }
    for j in others(o, s) {
        let gi = j.group.index();
        if footprints_touch(&o.bbox, &j.bbox) {
            v[layout::IX + gi] += 1.0;
        }
        if rests_on(&o.bbox, &j.bbox, p.support_tau) {
            v[layout::SBY + gi] += 1.0;
        }
        if rests_on(&j.bbox, &o.bbox, p.support_tau) {
            v[layout::STO + gi] += 1.0;
        }
    }
    v[layout::IX + 8] =
        s.walls().iter().filter(|w| segment_hits_rect(w.segment.a, w.segment.b, footprint(&o.bbox))).count() as f64;
    v
}

/// Entries that are distances (compared with a tolerance); all others are counts or codes.
pub fn is_distance_entry(k: usize) -> bool {
    (layout::AD..layout::SB).contains(&k)
}

/// Source ids of the edges into the target, per relation, from per-pair predicates.
pub fn expected_sources(o: &SceneObject, s: &Scene, p: &FeatureParams) -> [BTreeSet<String>; 6] {
    let mut out: [BTreeSet<String>; 6] = Default::default();
    for j in others(o, s) {
        let id = j.id.clone();
        if footprints_touch(&o.bbox, &j.bbox) {
            out[Relation::Ix.index()].insert(id.clone());
        }
        if within_diagonal(&o.bbox, &j.bbox) {
            out[Relation::Sb.index()].insert(id.clone());
        }
        if rests_on(&o.bbox, &j.bbox, p.support_tau) {
            out[Relation::Sby.index()].insert(id.clone());
        }
        if rests_on(&j.bbox, &o.bbox, p.support_tau) {
            out[Relation::Sto.index()].insert(id.clone());
        }
        out[Relation::Co.index()].insert(id);
    }
    for i in near_walls(o, s, p) {
        out[Relation::Rp.index()].insert(s.walls()[i].id.clone());
    }
    if out[Relation::Rp.index()].is_empty() {
        out[Relation::Rp.index()].insert("floor".into());
    }
    for set in out.iter_mut() {
        if set.is_empty() {
            set.insert("default".into());
        }
    }
    out
}

pub fn actual_sources(set: &SceneGraphSet) -> [BTreeSet<String>; 6] {
    std::array::from_fn(|r| {
        let g = &set.graphs[r];
        g.edges.iter().filter(|e| e.1 == g.target_index).map(|e| g.nodes[e.0].id.clone()).collect()
    })
}

/// Checks one scene: every object's summary vector and graph set against the oracles.
/// Returns the first mismatch.
pub fn check_scene_features(s: &Scene, p: &FeatureParams) -> Result<(), String> {
    for o in s.objects() {
        let got = scenefit::features::summary_vector(o, s, p);
        let want = summary(o, s, p);
        for (k, (&g, &w)) in got.values.iter().zip(&want).enumerate() {
            let ok = if is_distance_entry(k) { (g - w).abs() <= 1e-3 } else { g == w };
            if !ok {
                return Err(format!("{} {}: entry {k} is {g}, oracle {w}", s.id(), o.id));
            }
        }
    }
    Ok(())
}

pub fn check_scene_graphs(s: &Scene, p: &FeatureParams) -> Result<(), String> {
    for o in s.objects() {
        let set = extract_graphs(o, s, p);
        let got = actual_sources(&set);
        let want = expected_sources(o, s, p);
        for r in Relation::ALL {
            if got[r.index()] != want[r.index()] {
                return Err(format!(
                    "{} {} {}: {:?} vs oracle {:?}",
                    s.id(),
                    o.id,
                    r.label(),
                    got[r.index()],
                    want[r.index()]
                ));
            }
            let g = set.get(r);
            if g.incoming(g.target_index).count() == 0 {
                return Err(format!("{} {} {}: target has no incoming edge", s.id(), o.id, r.label()));
            }
            let defaults = g.nodes.iter().filter(|n| n.kind == NodeKind::Default).count();
            if defaults != usize::from(want[r.index()].contains("default")) {
                return Err(format!("{} {} {}: wrong default node count {defaults}", s.id(), o.id, r.label()));
            }
        }
    }
    Ok(())
}

/// Gradient magnitudes below this are compared absolutely: central differences at
/// h = 1e-6 carry roundoff near 1e-9, which would dominate a pure relative error.
pub const GRAD_FLOOR: f64 = 1e-3;

/// Central finite differences against analytic gradients.
///
/// `f` returns the scalar loss and its gradient for a parameter set. Up to
/// `per_tensor` coordinates of each tensor are probed. The error is
/// `|analytic - numeric| / max(|analytic|, |numeric|, GRAD_FLOOR)` per coordinate,
/// and the worst one is returned.
pub fn finite_difference_error(
    params: &ParamSet,
    f: &dyn Fn(&ParamSet) -> (f64, Vec<Tensor2>),
    per_tensor: usize,
    rng: &mut impl Rng,
) -> f64 {
    let h = 1e-6;
    let (_, grads) = f(params);
    let mut worst = 0.0f64;
    for id in params.ids() {
        let n = params.get(id).data().len();
        let coords: Vec<usize> =
            if n <= per_tensor { (0..n).collect() } else { (0..per_tensor).map(|_| rng.gen_range(0..n)).collect() };
        for c in coords {
            let mut plus = params.clone();
            plus.get_mut(id).data_mut()[c] += h;
            let mut minus = params.clone();
            minus.get_mut(id).data_mut()[c] -= h;
            let numeric = (f(&plus).0 - f(&minus).0) / (2.0 * h);
            let analytic = grads[id.index()].data()[c];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR);
            worst = worst.max(err);
        }
    }
    worst
}
