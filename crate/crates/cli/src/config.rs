//! TOML run configuration. Every field has a default and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use scenefit::augment::AugmentParams;
use scenefit::placement::{EvalOptions, GridOptions};
use scenefit::{FeatureParams, FurnitureGroup, ModelDims, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Cell side in meters.
    pub cell_size: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { cell_size: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub folds: usize,
    pub validation_fraction: f64,
    pub k: usize,
    /// Suppression radius in meters; unset uses half the object's footprint diagonal.
    pub nms_radius: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let d = EvalOptions::default();
        Self { folds: d.folds, validation_fraction: d.validation_fraction, k: d.k, nms_radius: d.nms_radius }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. It replaces the `seed` fields of `train` and `augment`.
    pub seed: u64,
    /// Groups to train or evaluate; empty means every group present in the corpus.
    pub groups: Vec<FurnitureGroup>,
    /// Add augmented variants of the training rooms before `train` and in
    /// every `evaluate` fold, using the `augment` section.
    pub augment_training: bool,
    pub features: FeatureParams,
    pub model: ModelDims,
    pub train: TrainConfig,
    pub augment: AugmentParams,
    pub grid: GridConfig,
    pub evaluate: EvalConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| crate::Usage(format!("config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Spreads the master seed and checks every section.
    pub fn finish(mut self) -> anyhow::Result<Self> {
        self.train.seed = self.seed;
        self.augment.seed = self.seed;
        let check = |r: scenefit::Result<()>| r.map_err(|e| crate::Usage(format!("config: {e}")));
        check(self.features.validate())?;
        check(self.model.validate())?;
        check(self.train.validate())?;
        check(self.augment.validate())?;
        if !(self.grid.cell_size > 0.0 && self.grid.cell_size.is_finite()) {
            return Err(crate::Usage(format!("config: grid.cell_size {} must be positive", self.grid.cell_size)).into());
        }
        Ok(self)
    }

    pub fn grid_options(&self) -> GridOptions {
        GridOptions {
            support_height_max: self.train.support_height_max,
            support_tau: self.features.support_tau,
            ..GridOptions::default()
        }
        .with_cell_size(self.grid.cell_size)
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            folds: self.evaluate.folds,
            validation_fraction: self.evaluate.validation_fraction,
            grid: self.grid_options(),
            k: self.evaluate.k,
            nms_radius: self.evaluate.nms_radius,
            seed: self.seed,
        }
    }
}
