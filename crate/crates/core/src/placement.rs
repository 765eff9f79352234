//! Grid scoring, top-k proposals and the object-removal benchmark.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::model::GroupModel;
use crate::par;
use crate::scene::{resting_bbox, FurnitureGroup, Scene, SceneObject};
use crate::seeds::rng_for;

/// Anything that rates a hypothetical object in a scene.
pub trait PlacementScorer: Sync {
    /// Plausibility of `candidate` in `scene`; `scene` must not contain the
    /// object being placed.
    fn score(&self, scene: &Scene, candidate: &SceneObject) -> Result<f64>;
}

impl PlacementScorer for GroupModel {
    fn score(&self, scene: &Scene, candidate: &SceneObject) -> Result<f64> {
        self.score_context(&self.context(candidate, scene)?)
    }
}

/// Scores every candidate 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformScorer;

impl PlacementScorer for UniformScorer {
    fn score(&self, _: &Scene, _: &SceneObject) -> Result<f64> {
        Ok(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridResolution {
    /// Square cells of this side length in meters.
    CellSize(f64),
    /// This many cells along the longer side of the room's bounding box.
    SamplesPerSide(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub resolution: GridResolution,
    pub support_height_max: f64,
    pub support_tau: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { resolution: GridResolution::CellSize(0.1), support_height_max: 1.0, support_tau: 0.05 }
    }
}

impl GridOptions {
    /// Default grid using the model's own support rule.
    pub fn for_model(m: &GroupModel) -> Self {
        Self { support_height_max: m.support_height_max, support_tau: m.feature_params.support_tau, ..Self::default() }
    }

    pub fn with_cell_size(mut self, cell: f64) -> Self {
        self.resolution = GridResolution::CellSize(cell);
        self
    }
}

/// Plausibility sampled at cell centers over a room's bounding rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementMap {
    pub origin: Point2,
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major (`iy * nx + ix`); `None` outside the floor polygon.
    pub probs: Vec<Option<f64>>,
}

impl PlacementMap {
    /// Empty grid over `scene` with the mask filled in (`Some(0.0)` inside).
    pub fn grid(scene: &Scene, resolution: GridResolution) -> Result<Self> {
        let b = scene.bounds();
        let cell = match resolution {
            GridResolution::CellSize(c) => c,
            GridResolution::SamplesPerSide(n) if n > 0 => b.width().max(b.height()) / n as f64,
            GridResolution::SamplesPerSide(_) => 0.0,
        };
        if !(cell.is_finite() && cell > 0.0) {
            return Err(Error::InvalidParam(format!("grid resolution {resolution:?} gives no cells")));
        }
        let nx = ((b.width() / cell).ceil() as usize).max(1);
        let ny = ((b.height() / cell).ceil() as usize).max(1);
        let mut map = Self { origin: b.min, cell_size: cell, nx, ny, probs: vec![None; nx * ny] };
        for i in 0..nx * ny {
            if scene.contains_point(map.center(i)) {
                map.probs[i] = Some(0.0);
            }
        }
        Ok(map)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn center(&self, i: usize) -> Point2 {
        let (ix, iy) = (i % self.nx, i / self.nx);
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.cell_size,
            self.origin.y + (iy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn in_mask(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.probs.len()).filter(|i| self.probs[*i].is_some())
    }

    pub fn mask_count(&self) -> usize {
        self.probs.iter().filter(|p| p.is_some()).count()
    }

    /// Exact mean distance from in-mask cell centers to `p`: the expected
    /// error of a proposal drawn uniformly over the grid.
    pub fn mean_distance_to(&self, p: Point2) -> f64 {
        let (sum, n) = self.in_mask().fold((0.0, 0usize), |(s, n), i| (s + self.center(i).distance(p), n + 1));
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    }
}

/// Scores an object of `group` and size `dims` at every in-mask cell of `scene`.
pub fn probability_map(
    scorer: &dyn PlacementScorer,
    scene: &Scene,
    group: FurnitureGroup,
    dims: [f64; 3],
    opts: &GridOptions,
) -> Result<PlacementMap> {
    let mut map = PlacementMap::grid(scene, opts.resolution)?;
    let cells: Vec<usize> = map.in_mask().collect();
    let scores = par::try_map(&cells, |&i| {
        let bbox = resting_bbox(scene, map.center(i), dims, opts.support_height_max, opts.support_tau);
        scorer.score(scene, &SceneObject::new(crate::model::CANDIDATE_ID, group, bbox))
    })?;
    for (i, s) in cells.into_iter().zip(scores) {
        map.probs[i] = Some(s);
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proposal {
    pub cell: usize,
    pub point: Point2,
    pub prob: f64,
}

/// Greedy highest-first selection with ties broken row-major; a cell is
/// suppressed when it lies closer than `nms_radius` to a selected point.
pub fn top_k(map: &PlacementMap, k: usize, nms_radius: f64) -> Result<Vec<Proposal>> {
    if k == 0 {
        return Err(Error::InvalidParam("top_k needs k >= 1".into()));
    }
    let mut cells: Vec<(usize, f64)> = map.probs.iter().enumerate().filter_map(|(i, p)| p.map(|p| (i, p))).collect();
    if cells.is_empty() {
        return Err(Error::InvalidParam("placement map has no in-mask cells".into()));
    }
    cells.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<Proposal> = Vec::with_capacity(k);
    for (cell, prob) in cells {
        let point = map.center(cell);
        if out.iter().all(|p| p.point.distance(point) >= nms_radius) {
            out.push(Proposal { cell, point, prob });
            if out.len() == k {
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub folds: usize,
    pub validation_fraction: f64,
    pub grid: GridOptions,
    pub k: usize,
    /// `None` uses half the removed object's footprint diagonal.
    pub nms_radius: Option<f64>,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { folds: 4, validation_fraction: 0.2, grid: GridOptions::default(), k: 5, nms_radius: None, seed: 0 }
    }
}

/// Disjoint validation blocks of `round(fraction * n)` shuffled room
/// indices; fold `f` trains on everything outside block `f`.
pub fn fold_partition(n: usize, folds: usize, fraction: f64, seed: u64) -> Result<Vec<Vec<usize>>> {
    let block = (fraction * n as f64).round() as usize;
    if folds == 0 || block == 0 || block * folds > n {
        return Err(Error::InsufficientData(format!(
            "{n} rooms cannot hold {folds} disjoint validation blocks of {:.0}%",
            fraction * 100.0
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, &["folds"]));
    Ok((0..folds).map(|f| idx[f * block..(f + 1) * block].to_vec()).collect())
}

/// Distance errors for one removed object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalCase {
    pub fold: usize,
    pub scene: String,
    pub object: String,
    pub top1: f64,
    pub topk: f64,
    pub uniform: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldStat {
    pub fold: usize,
    pub count: usize,
    pub top1: f64,
    pub topk: f64,
    pub uniform: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub group: FurnitureGroup,
    pub count: usize,
    pub top1: f64,
    pub topk: f64,
    /// Mean error of a uniformly random grid proposal.
    pub uniform: f64,
    pub folds: Vec<FoldStat>,
    pub cases: Vec<RemovalCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub k: usize,
    pub folds: usize,
    pub groups: Vec<GroupReport>,
    pub skipped: Vec<String>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl EvalReport {
    pub fn group(&self, g: FurnitureGroup) -> Option<&GroupReport> {
        self.groups.iter().find(|r| r.group == g)
    }

    /// Per-group T1/Tk table in meters.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>8} {:>8} {:>9} {:>6}", "group", "T1", format!("T{}", self.k), "uniform", "n");
        for g in &self.groups {
            let _ = writeln!(
                out,
                "{:<10} {:>8.3} {:>8.3} {:>9.3} {:>6}",
                g.group.label(),
                g.top1,
                g.topk,
                g.uniform,
                g.count
            );
        }
        let all: Vec<&RemovalCase> = self.groups.iter().flat_map(|g| &g.cases).collect();
        if !all.is_empty() {
            let _ = writeln!(
                out,
                "{:<10} {:>8.3} {:>8.3} {:>9.3} {:>6}",
                "overall",
                mean(all.iter().map(|c| c.top1)),
                mean(all.iter().map(|c| c.topk)),
                mean(all.iter().map(|c| c.uniform)),
                all.len()
            );
        }
        for s in &self.skipped {
            let _ = writeln!(out, "skipped: {s}");
        }
        out
    }
}

/// Trains a scorer for `group` on the given rooms of fold `fold`.
pub type TrainFn<'a> = dyn Fn(usize, &[Arc<Scene>], FurnitureGroup) -> Result<Box<dyn PlacementScorer>> + Sync + 'a;

/// K-fold object-removal benchmark: each validation object is deleted in
/// turn and the scorer's grid proposals are compared with where it stood.
pub fn removal_experiment(
    scenes: &[Arc<Scene>],
    groups: &[FurnitureGroup],
    train: &TrainFn<'_>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let folds = fold_partition(scenes.len(), opts.folds, opts.validation_fraction, opts.seed)?;
    let mut cases: Vec<Vec<RemovalCase>> = vec![Vec::new(); groups.len()];
    let mut skipped = Vec::new();
    for (f, val) in folds.iter().enumerate() {
        let train_rooms: Vec<Arc<Scene>> =
            (0..scenes.len()).filter(|i| !val.contains(i)).map(|i| Arc::clone(&scenes[i])).collect();
        for (gi, &group) in groups.iter().enumerate() {
            let targets: Vec<(&Arc<Scene>, &SceneObject)> = val
                .iter()
                .flat_map(|&i| {
                    scenes[i].objects().iter().filter(move |o| o.group == group).map(move |o| (&scenes[i], o))
                })
                .collect();
            if targets.is_empty() {
                log::warn!("fold {f}: no {group} in the validation rooms, skipped");
                skipped.push(format!("fold {f} {group}: absent from validation rooms"));
                continue;
            }
            let scorer = match train(f, &train_rooms, group) {
                Ok(s) => s,
                Err(Error::InsufficientData(why)) => {
                    log::warn!("fold {f}: {group} not trained: {why}");
                    skipped.push(format!("fold {f} {group}: {why}"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            for (scene, obj) in targets {
                let rest = scene.without_object(&obj.id);
                let map = probability_map(scorer.as_ref(), &rest, group, obj.bbox.dims(), &opts.grid)?;
                let radius = opts.nms_radius.unwrap_or(obj.bbox.footprint_diagonal() / 2.0);
                let props = top_k(&map, opts.k, radius)?;
                let truth = obj.centroid_xy();
                let errs: Vec<f64> = props.iter().map(|p| p.point.distance(truth)).collect();
                cases[gi].push(RemovalCase {
                    fold: f,
                    scene: scene.id().to_string(),
                    object: obj.id.clone(),
                    top1: errs[0],
                    topk: errs.iter().copied().fold(f64::INFINITY, f64::min),
                    uniform: map.mean_distance_to(truth),
                });
            }
        }
    }
    let groups = groups
        .iter()
        .zip(cases)
        .filter(|(_, c)| !c.is_empty())
        .map(|(&group, cases)| {
            let folds = (0..opts.folds)
                .filter_map(|f| {
                    let fc: Vec<&RemovalCase> = cases.iter().filter(|c| c.fold == f).collect();
                    (!fc.is_empty()).then(|| FoldStat {
                        fold: f,
                        count: fc.len(),
                        top1: mean(fc.iter().map(|c| c.top1)),
                        topk: mean(fc.iter().map(|c| c.topk)),
                        uniform: mean(fc.iter().map(|c| c.uniform)),
                    })
                })
                .collect();
            GroupReport {
                group,
                count: cases.len(),
                top1: mean(cases.iter().map(|c| c.top1)),
                topk: mean(cases.iter().map(|c| c.topk)),
                uniform: mean(cases.iter().map(|c| c.uniform)),
                folds,
                cases,
            }
        })
        .collect();
    Ok(EvalReport { k: opts.k, folds: opts.folds, groups, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room() -> Scene {
        Scene::rectangle("r", 10.0, 10.0, vec![]).unwrap()
    }

    #[test]
    fn uniform_map_picks_row_major_cells() {
        let s = room();
        let opts = GridOptions::default().with_cell_size(1.0);
        let map = probability_map(&UniformScorer, &s, FurnitureGroup::Bed, [1.0, 1.0, 1.0], &opts).unwrap();
        assert_eq!((map.nx, map.ny), (10, 10));
        assert_eq!(map.mask_count(), 100);
        let top = top_k(&map, 3, 1.5).unwrap();
        let cells: Vec<usize> = top.iter().map(|p| p.cell).collect();
        assert_eq!(cells, vec![0, 2, 4]);
        assert_eq!(top[0].point, Point2::new(0.5, 0.5));
    }

    #[test]
    fn argmax_and_empty_mask() {
        let s = room();
        let mut map = PlacementMap::grid(&s, GridResolution::CellSize(1.0)).unwrap();
        map.probs[57] = Some(0.9);
        assert_eq!(top_k(&map, 1, 0.0).unwrap()[0].cell, 57);
        map.probs.iter_mut().for_each(|p| *p = None);
        assert!(top_k(&map, 1, 0.0).is_err());
    }

    #[test]
    fn folds_are_disjoint() {
        let f = fold_partition(120, 4, 0.2, 3).unwrap();
        let mut all: Vec<usize> = f.concat();
        assert_eq!(all.len(), 96);
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 96);
        assert!(fold_partition(3, 4, 0.2, 3).is_err());
    }
}
