//! Parametric room deformation, validity filters and smallest-item removal.
//!
//! Each wall slides along its outward normal by an independent uniform
//! offset. Objects follow the wall closest to them, damped by
//! `exp(-d / lambda)` of their distance `d` to it, so items against a wall
//! move with it and items in the middle of the room barely move.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::par;
use crate::scene::{bbox_wall_distance, open_space_ratio, FurnitureGroup, Scene, SceneObject, OPEN_SPACE_RESOLUTION};
use crate::seeds::{derive_seed, rng_for};

/// Fresh draws per variant before it is given up.
const MAX_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentParams {
    pub variants_per_room: usize,
    pub wall_offset_max: f64,
    pub falloff_lambda: f64,
    pub open_space_max: f64,
    pub overlap_max: f64,
    pub removal_n: usize,
    pub seed: u64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            variants_per_room: 20,
            wall_offset_max: 0.5,
            falloff_lambda: 1.0,
            open_space_max: 0.95,
            overlap_max: 0.40,
            removal_n: 4,
            seed: 0,
        }
    }
}

impl AugmentParams {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !(self.wall_offset_max > 0.0
            && self.falloff_lambda > 0.0
            && frac(self.open_space_max)
            && frac(self.overlap_max))
        {
            return Err(Error::InvalidParam(format!(
                "augmentation magnitudes must be positive and fractions in (0,1]: {self:?}"
            )));
        }
        Ok(())
    }
}

fn outward_normals(s: &Scene) -> Vec<Point2> {
    let ccw = s.floor().signed_area() > 0.0;
    s.walls()
        .iter()
        .map(|w| {
            let d = w.segment.direction().scale(1.0 / w.segment.length());
            if ccw {
                Point2::new(d.y, -d.x)
            } else {
                Point2::new(-d.y, d.x)
            }
        })
        .collect()
}

/// Deforms `s` with the given per-wall offsets (meters along each outward normal).
pub fn deform_with_offsets(s: &Scene, offsets: &[f64], falloff_lambda: f64) -> Result<Scene> {
    let walls = s.walls();
    if offsets.len() != walls.len() {
        return Err(Error::InvalidParam(format!("{} offsets for {} walls", offsets.len(), walls.len())));
    }
    let normals = outward_normals(s);
    let n = walls.len();
    let mut vertices = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let (a, b) = (normals[prev], normals[i]);
        let (u, v) = (offsets[prev], offsets[i]);
        let det = a.x * b.y - a.y * b.x;
        // Vertex i joins wall i-1 and wall i; its shift satisfies both walls' offsets.
        let delta = if det.abs() < 1e-12 {
            a.scale((u + v) / 2.0)
        } else {
            Point2::new((u * b.y - v * a.y) / det, (a.x * v - b.x * u) / det)
        };
        vertices.push(walls[i].segment.a + delta);
    }
    let objects = s
        .objects()
        .iter()
        .map(|o| {
            let (k, d) = walls
                .iter()
                .enumerate()
                .map(|(k, w)| (k, bbox_wall_distance(&o.bbox, w)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            let t = normals[k].scale(offsets[k] * (-d / falloff_lambda).exp());
            SceneObject::new(o.id.clone(), o.group, o.bbox.translated([t.x, t.y, 0.0]))
        })
        .collect::<Vec<_>>();
    let out = Scene::new(s.id(), s.room_type(), vertices, objects)
        .map_err(|e| Error::AugmentRejected(format!("{}: {e}", s.id())))?;
    if let Some(o) = out.objects().iter().find(|o| !out.contains_point(o.centroid_xy())) {
        return Err(Error::AugmentRejected(format!("{}: {} left the floor", s.id(), o.id)));
    }
    Ok(out)
}

/// One random deformation of `s`.
pub fn augment_room(s: &Scene, p: &AugmentParams, rng: &mut impl Rng) -> Result<Scene> {
    let offsets: Vec<f64> =
        (0..s.walls().len()).map(|_| rng.gen_range(-p.wall_offset_max..=p.wall_offset_max)).collect();
    deform_with_offsets(s, &offsets, p.falloff_lambda)
}

/// Filter (a): the room is not almost empty.
pub fn check_open_space(s: &Scene, p: &AugmentParams) -> Result<bool> {
    Ok(open_space_ratio(s, OPEN_SPACE_RESOLUTION)? <= p.open_space_max)
}

fn overlap_violation(a: &SceneObject, b: &SceneObject, p: &AugmentParams) -> bool {
    a.bbox.intersection_volume(&b.bbox) > p.overlap_max * a.bbox.volume().min(b.bbox.volume())
}

/// Filter (b): no pair overlaps by more than `overlap_max` of the smaller box.
pub fn check_overlaps(s: &Scene, p: &AugmentParams) -> bool {
    let o = s.objects();
    (0..o.len()).all(|i| (i + 1..o.len()).all(|j| !overlap_violation(&o[i], &o[j], p)))
}

/// Deletes the smaller item of each offending pair until filter (b) passes.
pub fn remove_overlaps(s: &Scene, p: &AugmentParams) -> Scene {
    let mut objects = s.objects().to_vec();
    loop {
        let hit = (0..objects.len())
            .flat_map(|i| (i + 1..objects.len()).map(move |j| (i, j)))
            .find(|&(i, j)| overlap_violation(&objects[i], &objects[j], p));
        match hit {
            Some((i, j)) => {
                let drop = if objects[i].bbox.volume() < objects[j].bbox.volume() { i } else { j };
                objects.remove(drop);
            }
            None => return s.with_objects(objects),
        }
    }
}

/// Rooms with the `1..=removal_n` smallest items removed, stopping before a
/// room would be left empty.
pub fn iterative_removal(s: &Scene, p: &AugmentParams) -> Vec<Scene> {
    let mut order: Vec<&SceneObject> = s.objects().iter().collect();
    order.sort_by(|a, b| a.bbox.volume().total_cmp(&b.bbox.volume()).then_with(|| a.id.cmp(&b.id)));
    (1..=p.removal_n)
        .take_while(|i| *i < s.objects().len())
        .map(|i| {
            let gone: Vec<&str> = order[..i].iter().map(|o| o.id.as_str()).collect();
            let kept = s.objects().iter().filter(|o| !gone.contains(&o.id.as_str())).cloned().collect();
            s.with_objects(kept).with_id(format!("{}_r{i}", s.id()))
        })
        .collect()
}

/// Room and per-group object counts after one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageCount {
    pub stage: String,
    pub rooms: usize,
    pub objects: [usize; FurnitureGroup::COUNT],
}

impl StageCount {
    pub fn of(stage: &str, rooms: &[Scene]) -> Self {
        let mut objects = [0; FurnitureGroup::COUNT];
        for o in rooms.iter().flat_map(|s| s.objects()) {
            objects[o.group.index()] += 1;
        }
        Self { stage: stage.into(), rooms: rooms.len(), objects }
    }

    pub fn total_objects(&self) -> usize {
        self.objects.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stages: Vec<StageCount>,
}

impl StageReport {
    pub fn stage(&self, name: &str) -> Option<&StageCount> {
        self.stages.iter().find(|s| s.stage == name)
    }

    /// Rows are rooms and per-group objects; one column per stage.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<10}", "");
        for s in &self.stages {
            let _ = write!(out, " {:>11}", s.stage);
        }
        out.push('\n');
        let mut row = |label: &str, f: &dyn Fn(&StageCount) -> usize| {
            let _ = write!(out, "{label:<10}");
            for s in &self.stages {
                let _ = write!(out, " {:>11}", f(s));
            }
            out.push('\n');
        };
        row("rooms", &|s| s.rooms);
        for g in FurnitureGroup::ALL {
            row(g.label(), &|s| s.objects[g.index()]);
        }
        row("objects", &|s| s.total_objects());
        out
    }
}

pub struct AugmentedCorpus {
    /// Every room of the final stage.
    pub rooms: Vec<Scene>,
    pub report: StageReport,
}

/// `variants_per_room` deformations of every room (ids `<room>_p<k>`), then
/// the validity filters, then iterative removal of small items.
pub fn build_augmented_dataset(scenes: &[Scene], p: &AugmentParams) -> Result<AugmentedCorpus> {
    p.validate()?;
    let parametric: Vec<Scene> = par::try_map(scenes, |s| {
        let mut out = Vec::with_capacity(p.variants_per_room);
        for k in 0..p.variants_per_room {
            let mut rng = rng_for(p.seed, &["augment", s.id(), &k.to_string()]);
            let mut made = None;
            for _ in 0..MAX_ATTEMPTS {
                match augment_room(s, p, &mut rng) {
                    Ok(v) => {
                        made = Some(v.with_id(format!("{}_p{k}", s.id())));
                        break;
                    }
                    Err(Error::AugmentRejected(why)) => log::debug!("redraw: {why}"),
                    Err(e) => return Err(e),
                }
            }
            match made {
                Some(v) => out.push(v),
                None => log::warn!("{} variant {k}: no valid deformation in {MAX_ATTEMPTS} draws", s.id()),
            }
        }
        Ok(out)
    })?
    .into_iter()
    .flatten()
    .collect();
    let filtered: Vec<Scene> = par::try_map(&parametric, |s| {
        let kept = remove_overlaps(s, p);
        Ok::<_, Error>(check_open_space(&kept, p)?.then_some(kept))
    })?
    .into_iter()
    .flatten()
    .collect();
    let mut removal = filtered.clone();
    if p.removal_n > 0 {
        removal.extend(par::map(&filtered, |s| iterative_removal(s, p)).into_iter().flatten());
    }
    let report = StageReport {
        stages: vec![
            StageCount::of("original", scenes),
            StageCount::of("parametric", &parametric),
            StageCount::of("filtered", &filtered),
            StageCount::of("removal", &removal),
        ],
    };
    Ok(AugmentedCorpus { rooms: removal, report })
}

/// Training rooms followed by their augmented variants, seeded per `stream`
/// (for example a cross-validation fold) so folds draw independent variants.
pub fn augment_training_rooms(rooms: &[Arc<Scene>], p: &AugmentParams, stream: u64) -> Result<Vec<Arc<Scene>>> {
    let base: Vec<Scene> = rooms.iter().map(|s| (**s).clone()).collect();
    let p = AugmentParams { seed: derive_seed(p.seed, &["fold", &stream.to_string()]), ..p.clone() };
    let extra = build_augmented_dataset(&base, &p)?.rooms;
    Ok(rooms.iter().cloned().chain(extra.into_iter().map(Arc::new)).collect())
}
