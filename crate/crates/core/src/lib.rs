//! Contextual furniture placement for semantically labeled indoor scenes.
//!
//! The pipeline extracts hand-crafted spatial relationships around a
//! candidate placement ([`features`]), builds six relation graphs around it
//! ([`graph`]), runs them through per-group attention and projection networks
//! trained with a contrastive objective, and scores plausibility with an
//! autoencoder's reconstruction error ([`model`]). [`placement`] turns those
//! scores into heatmaps, proposals and the object-removal benchmark;
//! [`augment`] grows small corpora by parametric room deformation.

pub mod ablation;
pub mod augment;
pub mod error;
pub mod features;
pub mod geom;
pub mod graph;
pub mod io;
pub mod model;
pub mod nn;
pub mod par;
pub mod placement;
pub mod scene;
pub mod seeds;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureParams, SummaryVector};
pub use geom::Point2;
pub use model::{GroupModel, ModelDims, TrainConfig};
pub use scene::{BoundingBox3, FurnitureGroup, Scene, SceneObject, Wall};
