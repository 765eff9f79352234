//! Object-to-room, object-to-group and support relationships, and the
//! 48-dimensional summary vector assembled from them.
//!
//! Every function accepts a target object that need not belong to the scene,
//! so hypothetical placements are scored the same way as real ones. Scene
//! objects sharing the target's id are treated as the target itself and skipped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{bbox_distance, bbox_wall_distance, bbox_xy_intersects, FurnitureGroup, Scene, SceneObject, Wall};

/// How the wall-proximity threshold is derived from the room extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RhoMode {
    /// Fraction of the room extent perpendicular to each wall.
    #[default]
    PerAxis,
    /// One threshold: fraction of the smaller room extent.
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    pub rho_fraction: f64,
    pub support_tau: f64,
    pub rho_mode: RhoMode,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self { rho_fraction: 0.20, support_tau: 0.05, rho_mode: RhoMode::PerAxis }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_fraction > 0.0 && self.rho_fraction < 1.0) {
            return Err(Error::InvalidParam(format!("rho_fraction {} not in (0,1)", self.rho_fraction)));
        }
        if self.support_tau.is_nan() || self.support_tau <= 0.0 {
            return Err(Error::InvalidParam(format!("support_tau {} must be positive", self.support_tau)));
        }
        Ok(())
    }
}

/// Position class derived from the number of nearby walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoomPosition {
    Middle,
    Edge,
    Corner,
}

impl RoomPosition {
    pub fn from_count(near_walls: usize) -> Self {
        match near_walls {
            0 => RoomPosition::Middle,
            1 => RoomPosition::Edge,
            _ => RoomPosition::Corner,
        }
    }
}

fn others<'a>(o: &'a SceneObject, s: &'a Scene) -> impl Iterator<Item = &'a SceneObject> + 'a {
    s.objects().iter().filter(move |j| j.id != o.id)
}

/// Proximity threshold for one wall.
pub fn wall_rho(s: &Scene, w: &Wall, p: &FeatureParams) -> f64 {
    let b = s.bounds();
    match p.rho_mode {
        RhoMode::Min => p.rho_fraction * b.width().min(b.height()),
        RhoMode::PerAxis => {
            let d = w.segment.direction();
            // Distance to an x-running wall is measured along y, and vice versa.
            if d.x.abs() >= d.y.abs() {
                p.rho_fraction * b.height()
            } else {
                p.rho_fraction * b.width()
            }
        }
    }
}

/// Whether the object is within the proximity threshold of a wall.
pub fn near_wall(o: &SceneObject, s: &Scene, w: &Wall, p: &FeatureParams) -> bool {
    bbox_wall_distance(&o.bbox, w) < wall_rho(s, w, p)
}

/// Number of walls closer than their proximity threshold.
pub fn room_position(o: &SceneObject, s: &Scene, p: &FeatureParams) -> usize {
    s.walls().iter().filter(|w| near_wall(o, s, w, p)).count()
}

/// Mean box distance to members of `g` (0 when the group is empty).
pub fn avg_dist(o: &SceneObject, g: FurnitureGroup, s: &Scene) -> f64 {
    let (sum, n) = others(o, s)
        .filter(|j| j.group == g)
        .fold((0.0, 0usize), |(sum, n), j| (sum + bbox_distance(&o.bbox, &j.bbox), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// `j` lies within the target's footprint diagonal.
pub fn surrounds(o: &SceneObject, j: &SceneObject) -> bool {
    bbox_distance(&o.bbox, &j.bbox) < o.bbox.footprint_diagonal()
}

pub fn surrounded_by(o: &SceneObject, g: FurnitureGroup, s: &Scene) -> usize {
    others(o, s).filter(|j| j.group == g && surrounds(o, j)).count()
}

/// Per-group footprint intersection counts; the last entry counts crossed walls.
pub fn intersect_xy_counts(o: &SceneObject, s: &Scene) -> [usize; 9] {
    let mut out = [0usize; 9];
    for j in others(o, s) {
        if bbox_xy_intersects(&o.bbox, &j.bbox) {
            out[j.group.index()] += 1;
        }
    }
    let fp = o.bbox.footprint();
    out[8] = s.walls().iter().filter(|w| fp.intersects_segment(&w.segment)).count();
    out
}

/// +1 when `top` rests on `other`, -1 when `other` rests on `top`, else 0.
///
/// Resting means a vertical gap strictly between 0 and `tau` with overlapping
/// footprints.
pub fn support_sign(top: &SceneObject, other: &SceneObject, p: &FeatureParams) -> i8 {
    if !bbox_xy_intersects(&top.bbox, &other.bbox) {
        return 0;
    }
    let up = top.bbox.bottom() - other.bbox.top();
    let down = other.bbox.bottom() - top.bbox.top();
    if up > 0.0 && up < p.support_tau {
        1
    } else if down > 0.0 && down < p.support_tau {
        -1
    } else {
        0
    }
}

fn support_counts(o: &SceneObject, s: &Scene, p: &FeatureParams, sign: i8) -> [usize; 9] {
    let mut out = [0usize; 9];
    for j in others(o, s) {
        if support_sign(o, j, p) == sign {
            out[j.group.index()] += 1;
        }
    }
    // Walls carry no horizontal planes, so the wall entry stays 0.
    out
}

/// Counts of supporters of `o`, per group.
pub fn supp_by_counts(o: &SceneObject, s: &Scene, p: &FeatureParams) -> [usize; 9] {
    support_counts(o, s, p, 1)
}

/// Counts of objects `o` supports, per group.
pub fn supp_to_counts(o: &SceneObject, s: &Scene, p: &FeatureParams) -> [usize; 9] {
    support_counts(o, s, p, -1)
}

/// Other objects sorted by box distance to `o`, ties broken by id.
pub fn nearest_objects<'a>(o: &'a SceneObject, s: &'a Scene) -> Vec<(f64, &'a SceneObject)> {
    let mut v: Vec<(f64, &SceneObject)> = others(o, s).map(|j| (bbox_distance(&o.bbox, &j.bbox), j)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    v
}

/// Group codes (index + 1) of the three nearest objects, 0-padded.
pub fn three_closest(o: &SceneObject, s: &Scene) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (slot, (_, j)) in out.iter_mut().zip(nearest_objects(o, s)) {
        *slot = (j.group.index() + 1) as f64;
    }
    out
}

/// Fixed block offsets inside [`SummaryVector`].
pub mod layout {
    pub const CLOSEST: usize = 0;
    pub const EB: usize = 3;
    pub const CB: usize = 4;
    pub const AD: usize = 5;
    pub const SB: usize = 13;
    pub const IX: usize = 21;
    pub const SBY: usize = 30;
    pub const STO: usize = 39;
    pub const LEN: usize = 48;
}

/// The 48-D context descriptor of one placement:
/// `[3C(3) | EB | CB | AD(8) | SB(8) | IX(9) | SBY(9) | STO(9)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryVector {
    pub values: [f64; layout::LEN],
}

impl SummaryVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn closest(&self) -> &[f64] {
        &self.values[layout::CLOSEST..layout::EB]
    }

    pub fn edge_corner(&self) -> (f64, f64) {
        (self.values[layout::EB], self.values[layout::CB])
    }

    pub fn avg_dist(&self) -> &[f64] {
        &self.values[layout::AD..layout::SB]
    }

    pub fn surrounded(&self) -> &[f64] {
        &self.values[layout::SB..layout::IX]
    }

    pub fn intersect_xy(&self) -> &[f64] {
        &self.values[layout::IX..layout::SBY]
    }

    pub fn supported_by(&self) -> &[f64] {
        &self.values[layout::SBY..layout::STO]
    }

    pub fn supports(&self) -> &[f64] {
        &self.values[layout::STO..layout::LEN]
    }
}

pub fn summary_vector(o: &SceneObject, s: &Scene, p: &FeatureParams) -> SummaryVector {
    let mut v = [0.0; layout::LEN];
    v[layout::CLOSEST..layout::EB].copy_from_slice(&three_closest(o, s));
    match RoomPosition::from_count(room_position(o, s, p)) {
        RoomPosition::Edge => v[layout::EB] = 1.0,
        RoomPosition::Corner => v[layout::CB] = 1.0,
        RoomPosition::Middle => {}
    }
    for g in FurnitureGroup::ALL {
        v[layout::AD + g.index()] = avg_dist(o, g, s);
        v[layout::SB + g.index()] = surrounded_by(o, g, s) as f64;
    }
    let blocks = [
        (layout::IX, intersect_xy_counts(o, s)),
        (layout::SBY, supp_by_counts(o, s, p)),
        (layout::STO, supp_to_counts(o, s, p)),
    ];
    for (offset, counts) in blocks {
        for (k, c) in counts.iter().enumerate() {
            v[offset + k] = *c as f64;
        }
    }
    SummaryVector { values: v }
}

/// Raw standard deviations below this pass through centered only.
pub const MIN_STD: f64 = 1e-8;

/// Per-dimension centering and scaling (population statistics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<V: AsRef<[f64]>>(rows: &[V]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!("standardizer needs at least 2 vectors, got {}", rows.len())));
        }
        let dim = rows[0].as_ref().len();
        if rows.iter().any(|r| r.as_ref().len() != dim) {
            return Err(Error::InvalidParam("ragged vectors passed to standardizer".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.as_ref()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s < MIN_STD { x - m } else { (x - m) / s })
            .collect()
    }
}
