//! Scene files, model bundles and exported artifacts.
//!
//! Scenes are JSON documents (see the README for the field table). Every
//! write goes to a temporary file in the destination directory first and is
//! renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{FeatureParams, Standardizer};
use crate::geom::Point2;
use crate::model::{GroupModel, ModelDims, TrainConfig, TrainReport};
use crate::nn::ParamSet;
use crate::placement::PlacementMap;
use crate::scene::{BoundingBox3, FurnitureGroup, Scene, SceneObject};

pub const SCENE_SCHEMA_VERSION: u32 = 1;
pub const BUNDLE_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxFile {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectFile {
    pub id: String,
    pub group: String,
    pub bbox: BoxFile,
}

/// On-disk scene. `walls` is the closed vertex loop: the last point repeats the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub schema_version: u32,
    pub id: String,
    pub room_type: String,
    pub walls: Vec<Vec<f64>>,
    #[serde(default)]
    pub objects: Vec<ObjectFile>,
}

impl SceneFile {
    pub fn from_scene(s: &Scene) -> Self {
        let mut walls: Vec<Vec<f64>> = s.walls().iter().map(|w| vec![w.segment.a.x, w.segment.a.y]).collect();
        walls.push(walls[0].clone());
        let objects = s
            .objects()
            .iter()
            .map(|o| ObjectFile {
                id: o.id.clone(),
                group: o.group.label().to_string(),
                bbox: BoxFile { min: o.bbox.min.to_vec(), max: o.bbox.max.to_vec() },
            })
            .collect();
        Self {
            schema_version: SCENE_SCHEMA_VERSION,
            id: s.id().to_string(),
            room_type: s.room_type().to_string(),
            walls,
            objects,
        }
    }

    /// Checks every field and collects all violations before giving up.
    pub fn to_scene(&self, source_name: &str) -> Result<Scene> {
        let mut v = Vec::new();
        if self.schema_version != SCENE_SCHEMA_VERSION {
            v.push(format!("schema_version: expected {SCENE_SCHEMA_VERSION}, got {}", self.schema_version));
        }
        if self.id.trim().is_empty() {
            v.push("id: must not be empty".to_string());
        }
        let mut points = Vec::with_capacity(self.walls.len());
        for (i, p) in self.walls.iter().enumerate() {
            if p.len() != 2 || p.iter().any(|c| !c.is_finite()) {
                v.push(format!("walls[{i}]: expected two finite coordinates"));
            } else {
                points.push(Point2::new(p[0], p[1]));
            }
        }
        if self.walls.len() < 4 {
            v.push(format!("walls: {} points, a closed loop of 3 walls needs at least 4", self.walls.len()));
        } else if points.len() == self.walls.len() && points.first() != points.last() {
            v.push("walls: loop is open (last point must repeat the first)".to_string());
        }
        let mut objects = Vec::with_capacity(self.objects.len());
        for (i, o) in self.objects.iter().enumerate() {
            let path = format!("objects[{i}]");
            if o.id.trim().is_empty() {
                v.push(format!("{path}.id: must not be empty"));
            } else if self.objects[..i].iter().any(|p| p.id == o.id) {
                v.push(format!("{path}.id: duplicate id `{}`", o.id));
            }
            let group = FurnitureGroup::ALL.into_iter().find(|g| g.label() == o.group);
            if group.is_none() {
                let labels: Vec<&str> = FurnitureGroup::ALL.iter().map(|g| g.label()).collect();
                v.push(format!("{path}.group: unknown label `{}` (expected one of {})", o.group, labels.join(", ")));
            }
            let mut corner = |name: &str, c: &[f64]| -> Option<[f64; 3]> {
                if c.len() == 3 && c.iter().all(|x| x.is_finite()) {
                    Some([c[0], c[1], c[2]])
                } else {
                    v.push(format!("{path}.bbox.{name}: expected three finite coordinates"));
                    None
                }
            };
            let (min, max) = (corner("min", &o.bbox.min), corner("max", &o.bbox.max));
            if let (Some(min), Some(max)) = (min, max) {
                let mut ok = true;
                for (k, axis) in ["x", "y", "z"].iter().enumerate() {
                    if min[k] > max[k] {
                        v.push(format!("{path}.bbox: min.{axis} {} > max.{axis} {}", min[k], max[k]));
                        ok = false;
                    }
                }
                if let (true, Some(g)) = (ok, group) {
                    objects.push(SceneObject::new(o.id.clone(), g, BoundingBox3 { min, max }));
                }
            }
        }
        if v.is_empty() {
            points.pop();
            match Scene::new(self.id.clone(), self.room_type.clone(), points, objects) {
                Ok(s) => return Ok(s),
                Err(Error::InvalidScene { reason, .. }) => v.push(format!("walls: {reason}")),
                Err(e) => return Err(e),
            }
        }
        Err(Error::Schema { source_name: format!("{source_name} (scene `{}`)", self.id), violations: v })
    }
}

pub fn parse_scene(text: &str, source_name: &str) -> Result<Scene> {
    let file: SceneFile = serde_json::from_str(text)
        .map_err(|e| Error::Parse { source_name: source_name.to_string(), detail: e.to_string() })?;
    file.to_scene(source_name)
}

pub fn scene_to_json(s: &Scene) -> String {
    let mut text = serde_json::to_string_pretty(&SceneFile::from_scene(s)).expect("scene files always serialize");
    text.push('\n');
    text
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    parse_scene(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn save_scene(path: &Path, s: &Scene) -> Result<()> {
    write_atomic(path, scene_to_json(s).as_bytes())
}

/// `*.json` files directly under `dir`, sorted by file name.
pub fn scene_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == "json") {
            paths.push(p);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn load_corpus(dir: &Path) -> Result<Vec<Scene>> {
    scene_paths(dir)?.iter().map(|p| load_scene(p)).collect()
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Hex SHA-256 over the scene files of a corpus in the given order.
pub fn dataset_fingerprint(scenes: &[Scene]) -> String {
    let mut h = Sha256::new();
    for s in scenes {
        let text = scene_to_json(s);
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Contents of `manifest.json` in a model bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: u32,
    pub group: FurnitureGroup,
    pub dims: ModelDims,
    pub feature_params: FeatureParams,
    pub support_height_max: f64,
    pub train: TrainConfig,
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub training_rooms: usize,
}

const MANIFEST: &str = "manifest.json";
const IGATP_PARAMS: &str = "igatp.params";
const AE_PARAMS: &str = "autoencoder.params";
const STANDARDIZER: &str = "standardizer.json";

/// Writes the bundle files into `dir`; the manifest goes last.
pub fn save_bundle(dir: &Path, model: &GroupModel, manifest: &Manifest) -> Result<()> {
    if manifest.group != model.group || manifest.dims != model.dims {
        return Err(Error::InvalidParam("manifest does not describe this model".into()));
    }
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join(IGATP_PARAMS), model.igatp_params().to_text().as_bytes())?;
    write_atomic(&dir.join(AE_PARAMS), model.ae_params().to_text().as_bytes())?;
    let st = serde_json::to_string_pretty(&model.standardizer).expect("standardizer serializes");
    write_atomic(&dir.join(STANDARDIZER), st.as_bytes())?;
    let m = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_atomic(&dir.join(MANIFEST), m.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse { source_name: path.display().to_string(), detail: e.to_string() })
}

fn read_params(path: &Path) -> Result<ParamSet> {
    ParamSet::from_text(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn load_bundle(dir: &Path) -> Result<(GroupModel, Manifest)> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    if manifest.format != BUNDLE_FORMAT {
        return Err(Error::Parse {
            source_name: dir.join(MANIFEST).display().to_string(),
            detail: format!("bundle format {} is not {BUNDLE_FORMAT}", manifest.format),
        });
    }
    let standardizer: Standardizer = read_json(&dir.join(STANDARDIZER))?;
    let mut model = GroupModel::new(
        manifest.group,
        manifest.dims.clone(),
        manifest.feature_params,
        standardizer,
        manifest.support_height_max,
        manifest.seed,
    )?;
    model.set_params(read_params(&dir.join(IGATP_PARAMS))?, read_params(&dir.join(AE_PARAMS))?)?;
    Ok((model, manifest))
}

/// `stage,epoch,loss` with one row per epoch of each stage.
pub fn loss_csv(r: &TrainReport) -> String {
    let mut out = String::from("stage,epoch,loss\n");
    for (stage, losses) in [("siamese", &r.siamese), ("autoencoder", &r.autoencoder)] {
        for (i, l) in losses.iter().enumerate() {
            out.push_str(&format!("{stage},{},{l:?}\n", i + 1));
        }
    }
    out
}

/// `x,y,prob` for every in-mask cell, row-major.
pub fn heatmap_csv(map: &PlacementMap) -> String {
    let mut out = String::from("x,y,prob\n");
    for i in map.in_mask() {
        let c = map.center(i);
        out.push_str(&format!("{},{},{}\n", c.x, c.y, map.probs[i].expect("in-mask cell")));
    }
    out
}

/// Binary 16-bit PGM, `nx` wide and `ny` tall, with +y pointing up the image.
/// Probabilities scale to 0..=65535; masked cells are 0.
pub fn heatmap_pgm(map: &PlacementMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", map.nx, map.ny).into_bytes();
    for iy in (0..map.ny).rev() {
        for ix in 0..map.nx {
            let p = map.probs[iy * map.nx + ix].unwrap_or(0.0);
            let v = (p.clamp(0.0, 1.0) * 65535.0).round() as u16;
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}
