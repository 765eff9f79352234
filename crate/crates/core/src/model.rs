//! Per-group placement model and its two training stages.
//!
//! IGATP embeds a placement: node features of the six relation graphs pass
//! through a shared INIT network, one attention layer per relation reads the
//! target node's message, and PROJ maps those messages plus the standardized
//! summary vector to the output vector `Y`. IGATP is trained as a Siamese
//! pair under the contrastive loss. A separate autoencoder is then trained
//! on `Y` of real placements only, and plausibility is `exp(-MSE)` of its
//! reconstruction.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{layout, summary_vector, FeatureParams, Standardizer, SummaryVector};
use crate::geom::Point2;
use crate::graph::{extract_graphs, Relation, SceneGraphSet, NODE_DIM};
use crate::nn::{self, Adam, GatLayer, L2Mode, Mlp, ParamSet, Tape, Tensor2, Var};
use crate::par;
use crate::scene::{resting_bbox, FurnitureGroup, Scene, SceneObject};
use crate::seeds::rng_for;

/// Id given to hypothetical placements.
pub const CANDIDATE_ID: &str = "__candidate";

/// Pairs per gradient chunk; chunks are evaluated in parallel and summed in order.
const PAIR_CHUNK: usize = 8;

/// `(a, b, same_label, dropout seed)` indices into a context slice.
pub type Pair = (usize, usize, bool, Option<u64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelDims {
    /// INIT widths after the 11-wide node feature input.
    pub init_widths: Vec<usize>,
    pub gat_heads: usize,
    pub gat_head_dim: usize,
    /// PROJ widths after its `6 * heads * head_dim + 48` input; the last is `|Y|`.
    pub proj_widths: Vec<usize>,
    /// Encoder widths after the `|Y|` input; the last is the code size.
    /// The decoder mirrors them back to `|Y|`.
    pub ae_widths: Vec<usize>,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            init_widths: vec![64, 64, 100, 100],
            gat_heads: 10,
            gat_head_dim: 10,
            proj_widths: vec![512, 256, 128, 100],
            ae_widths: vec![64, 32, 16],
        }
    }
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        let lists = [&self.init_widths, &self.proj_widths, &self.ae_widths];
        if lists.iter().any(|l| l.is_empty() || l.contains(&0)) || self.gat_heads == 0 || self.gat_head_dim == 0 {
            return Err(Error::InvalidParam(format!("model widths must be nonempty and nonzero: {self:?}")));
        }
        Ok(())
    }

    pub fn gat_out(&self) -> usize {
        self.gat_heads * self.gat_head_dim
    }

    pub fn proj_in(&self) -> usize {
        Relation::ALL.len() * self.gat_out() + layout::LEN
    }

    pub fn output_dim(&self) -> usize {
        *self.proj_widths.last().expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_pairs: usize,
    pub ae_batch: usize,
    pub lr: f64,
    pub l2_siamese: f64,
    pub l2_ae: f64,
    /// Coupled L2 at weight 1 can drive the Siamese network to a constant
    /// embedding within a few hundred steps; decoupled decay does not.
    pub l2_mode: L2Mode,
    pub margin: f64,
    pub negatives_per_positive: usize,
    /// Negatives stay at least this fraction of the object's footprint
    /// diagonal away from every real placement of the group.
    pub negative_exclusion: f64,
    /// Highest surface top a hypothetical placement may rest on (meters).
    pub support_height_max: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_pairs: 100,
            ae_batch: 100,
            lr: 0.005,
            l2_siamese: 1.0,
            l2_ae: 0.0,
            l2_mode: L2Mode::Decoupled,
            margin: 15.0,
            negatives_per_positive: 1,
            negative_exclusion: 0.5,
            support_height_max: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epochs > 0
            && self.batch_pairs > 0
            && self.ae_batch > 0
            && self.negatives_per_positive > 0
            && self.lr > 0.0
            && self.margin > 0.0
            && self.l2_siamese >= 0.0
            && self.l2_ae >= 0.0
            && self.negative_exclusion >= 0.0
            && self.support_height_max >= 0.0;
        if !ok {
            return Err(Error::InvalidParam(format!("train config needs positive counts and rates: {self:?}")));
        }
        Ok(())
    }
}

/// Graphs and summary vector of one placement, ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementContext {
    pub graphs: SceneGraphSet,
    pub summary: SummaryVector,
}

impl PlacementContext {
    /// `target` is excluded from `scene` by id if present there.
    pub fn new(target: &SceneObject, scene: &Scene, p: &FeatureParams) -> Result<Self> {
        let c = target.centroid_xy();
        if !scene.contains_point(c) {
            return Err(Error::OutsideFloor { x: c.x, y: c.y });
        }
        Ok(Self { graphs: extract_graphs(target, scene, p), summary: summary_vector(target, scene, p) })
    }
}

/// A placement of one object in a scene with its plausibility label.
#[derive(Debug, Clone)]
pub struct LabeledPlacement {
    pub scene: Arc<Scene>,
    pub object: SceneObject,
    pub label: bool,
}

impl LabeledPlacement {
    pub fn center(&self) -> Point2 {
        self.object.centroid_xy()
    }

    pub fn context(&self, p: &FeatureParams) -> Result<PlacementContext> {
        PlacementContext::new(&self.object, &self.scene, p)
    }
}

/// Draws implausible placements uniformly over a floor polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeSampler {
    pub support_height_max: f64,
    pub support_tau: f64,
    /// Rejection radius as a fraction of the footprint diagonal.
    pub exclusion: f64,
    pub max_draws: usize,
}

impl NegativeSampler {
    pub fn new(support_height_max: f64, support_tau: f64, exclusion: f64) -> Self {
        Self { support_height_max, support_tau, exclusion, max_draws: 1000 }
    }

    /// Uniform point in the floor polygon (rejection from its bounding box).
    pub fn uniform_point(&self, scene: &Scene, rng: &mut impl Rng) -> Result<Point2> {
        let b = scene.bounds();
        for _ in 0..self.max_draws {
            let p = Point2::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
            if scene.contains_point(p) {
                return Ok(p);
            }
        }
        Err(Error::SamplingExhausted(self.max_draws))
    }

    /// Negative for an object of `group` with size `dims` in `scene`, kept at
    /// least `exclusion` footprint diagonals away from every point in `truths`.
    pub fn sample(
        &self,
        scene: &Arc<Scene>,
        group: FurnitureGroup,
        dims: [f64; 3],
        truths: &[Point2],
        rng: &mut impl Rng,
    ) -> Result<LabeledPlacement> {
        let radius = self.exclusion * dims[0].hypot(dims[1]);
        let b = scene.bounds();
        for _ in 0..self.max_draws {
            let p = Point2::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
            if !scene.contains_point(p) || truths.iter().any(|t| t.distance(p) < radius) {
                continue;
            }
            let bbox = resting_bbox(scene, p, dims, self.support_height_max, self.support_tau);
            let object = SceneObject::new(CANDIDATE_ID, group, bbox);
            return Ok(LabeledPlacement { scene: Arc::clone(scene), object, label: false });
        }
        Err(Error::SamplingExhausted(self.max_draws))
    }
}

/// Positives for every `group` object plus `negatives_per_positive` sampled
/// negatives each, drawn in the scene with that object removed.
pub fn build_dataset(
    scenes: &[Arc<Scene>],
    group: FurnitureGroup,
    fp: &FeatureParams,
    cfg: &TrainConfig,
) -> Result<Vec<LabeledPlacement>> {
    let sampler = NegativeSampler::new(cfg.support_height_max, fp.support_tau, cfg.negative_exclusion);
    let per_scene = par::try_map(scenes, |scene| {
        let mut rng = rng_for(cfg.seed, &["negatives", group.label(), scene.id()]);
        let truths: Vec<Point2> =
            scene.objects().iter().filter(|o| o.group == group).map(SceneObject::centroid_xy).collect();
        let mut out = Vec::new();
        for o in scene.objects().iter().filter(|o| o.group == group) {
            out.push(LabeledPlacement { scene: Arc::clone(scene), object: o.clone(), label: true });
            let rest = Arc::new(scene.without_object(&o.id));
            for _ in 0..cfg.negatives_per_positive {
                out.push(sampler.sample(&rest, group, o.bbox.dims(), &truths, &mut rng)?);
            }
        }
        Ok::<_, Error>(out)
    })?;
    Ok(per_scene.into_iter().flatten().collect())
}

/// INIT, per-relation attention and PROJ.
#[derive(Debug, Clone, PartialEq)]
pub struct Igatp {
    pub init: Mlp,
    pub gats: Vec<GatLayer>,
    pub proj: Mlp,
}

impl Igatp {
    pub fn new(params: &mut ParamSet, dims: &ModelDims, rng: &mut impl Rng) -> Result<Self> {
        let mut init_w = vec![NODE_DIM];
        init_w.extend(&dims.init_widths);
        let init = Mlp::new(params, "init", &init_w, rng)?;
        let gats = Relation::ALL
            .iter()
            .map(|r| {
                GatLayer::new(
                    params,
                    &format!("gat.{}", r.label()),
                    init.out_dim(),
                    dims.gat_heads,
                    dims.gat_head_dim,
                    rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut proj_w = vec![dims.proj_in()];
        proj_w.extend(&dims.proj_widths);
        let proj = Mlp::new(params, "proj", &proj_w, rng)?;
        Ok(Self { init, gats, proj })
    }

    /// `1 x |Y|` output. An RNG enables attention dropout.
    pub fn forward<'d>(
        &self,
        tape: &mut Tape<'_>,
        ctx: &PlacementContext,
        standardizer: &Standardizer,
        mut dropout: Option<&mut (dyn RngCore + 'd)>,
    ) -> Result<Var> {
        let total: usize = ctx.graphs.graphs.iter().map(|g| g.nodes.len()).sum();
        let feats: Vec<f64> = ctx.graphs.graphs.iter().flat_map(|g| g.feature_matrix()).collect();
        let x = tape.constant(Tensor2::new(total, NODE_DIM, feats)?);
        let h = self.init.forward(tape, x)?;
        let mut parts = Vec::with_capacity(self.gats.len() + 1);
        let mut offset = 0;
        for (g, gat) in ctx.graphs.graphs.iter().zip(&self.gats) {
            let n = g.nodes.len();
            let hr = tape.slice_rows(h, offset, n);
            offset += n;
            let out = gat.forward(tape, hr, &g.edges, dropout.as_deref_mut())?;
            parts.push(tape.slice_rows(out.nodes, g.target_index, 1));
        }
        let s = standardizer.apply(ctx.summary.as_slice());
        parts.push(tape.constant(Tensor2::new(1, s.len(), s)?));
        let cat = tape.concat_cols(&parts);
        self.proj.forward(tape, cat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl Autoencoder {
    pub fn new(params: &mut ParamSet, input: usize, widths: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut enc = vec![input];
        enc.extend(widths);
        let dec: Vec<usize> = enc.iter().rev().copied().collect();
        Ok(Self { encoder: Mlp::new(params, "enc", &enc, rng)?, decoder: Mlp::new(params, "dec", &dec, rng)? })
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        let code = self.encoder.forward(tape, x)?;
        self.decoder.forward(tape, code)
    }
}

/// `exp(-MSE)` between a vector and its reconstruction.
pub fn plausibility_from_mse(mse: f64) -> f64 {
    (-mse).exp()
}

/// Everything needed to score placements of one furniture group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupModel {
    pub group: FurnitureGroup,
    pub dims: ModelDims,
    pub feature_params: FeatureParams,
    pub support_height_max: f64,
    pub standardizer: Standardizer,
    igatp: Igatp,
    igatp_params: ParamSet,
    autoencoder: Autoencoder,
    ae_params: ParamSet,
}

impl GroupModel {
    pub fn new(
        group: FurnitureGroup,
        dims: ModelDims,
        feature_params: FeatureParams,
        standardizer: Standardizer,
        support_height_max: f64,
        seed: u64,
    ) -> Result<Self> {
        dims.validate()?;
        feature_params.validate()?;
        if standardizer.dim() != layout::LEN {
            return Err(Error::InvalidParam(format!(
                "standardizer has {} dims, expected {}",
                standardizer.dim(),
                layout::LEN
            )));
        }
        let mut rng = rng_for(seed, &["init", group.label()]);
        let mut igatp_params = ParamSet::new();
        let igatp = Igatp::new(&mut igatp_params, &dims, &mut rng)?;
        let mut ae_params = ParamSet::new();
        let autoencoder = Autoencoder::new(&mut ae_params, dims.output_dim(), &dims.ae_widths, &mut rng)?;
        Ok(Self {
            group,
            dims,
            feature_params,
            support_height_max,
            standardizer,
            igatp,
            igatp_params,
            autoencoder,
            ae_params,
        })
    }

    pub fn igatp(&self) -> &Igatp {
        &self.igatp
    }

    pub fn igatp_params(&self) -> &ParamSet {
        &self.igatp_params
    }

    pub fn ae_params(&self) -> &ParamSet {
        &self.ae_params
    }

    /// Replaces both parameter stores; names and shapes must match.
    pub fn set_params(&mut self, igatp: ParamSet, ae: ParamSet) -> Result<()> {
        fn check(old: &ParamSet, new: &ParamSet, which: &str) -> Result<()> {
            let same = old.len() == new.len()
                && old.ids().all(|id| old.name(id) == new.name(id) && old.get(id).shape() == new.get(id).shape());
            if same {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("{which} parameters do not match the model layout")))
            }
        }
        check(&self.igatp_params, &igatp, "IGATP")?;
        check(&self.ae_params, &ae, "autoencoder")?;
        self.igatp_params = igatp;
        self.ae_params = ae;
        Ok(())
    }

    pub fn context(&self, target: &SceneObject, scene: &Scene) -> Result<PlacementContext> {
        PlacementContext::new(target, scene, &self.feature_params)
    }

    /// Hypothetical object of size `dims` centered at `center`, resting per
    /// the model's support rule.
    pub fn candidate(&self, scene: &Scene, center: Point2, dims: [f64; 3]) -> SceneObject {
        let bbox = resting_bbox(scene, center, dims, self.support_height_max, self.feature_params.support_tau);
        SceneObject::new(CANDIDATE_ID, self.group, bbox)
    }

    /// Eval-mode IGATP output `Y`.
    pub fn project(&self, ctx: &PlacementContext) -> Result<Vec<f64>> {
        let mut tape = Tape::new(&self.igatp_params);
        let y = self.igatp.forward(&mut tape, ctx, &self.standardizer, None)?;
        Ok(tape.value(y).data().to_vec())
    }

    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut tape = Tape::new(&self.ae_params);
        let x = tape.constant(Tensor2::new(1, y.len(), y.to_vec())?);
        let r = self.autoencoder.forward(&mut tape, x)?;
        Ok(tape.value(r).data().to_vec())
    }

    pub fn reconstruction_error(&self, y: &[f64]) -> Result<f64> {
        Ok(nn::mse_value(y, &self.reconstruct(y)?))
    }

    pub fn plausibility(&self, y: &[f64]) -> Result<f64> {
        Ok(plausibility_from_mse(self.reconstruction_error(y)?))
    }

    pub fn score_context(&self, ctx: &PlacementContext) -> Result<f64> {
        self.plausibility(&self.project(ctx)?)
    }

    /// Mean contrastive loss of a batch of `(a, b, same_label)` pairs and its
    /// gradient with respect to the IGATP parameters. Each pair draws its
    /// dropout stream from its seed; `None` runs in eval mode.
    pub fn siamese_batch_gradient(
        &self,
        contexts: &[PlacementContext],
        pairs: &[Pair],
        margin: f64,
    ) -> Result<(f64, Vec<Tensor2>)> {
        let chunks: Vec<&[Pair]> = pairs.chunks(PAIR_CHUNK).collect();
        let parts = par::try_map(&chunks, |chunk| {
            let mut grads = self.igatp_params.zeros_like();
            let mut loss = 0.0;
            for &(a, b, same, seed) in chunk.iter() {
                let mut tape = Tape::new(&self.igatp_params);
                let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
                let y1 = self.igatp.forward(
                    &mut tape,
                    &contexts[a],
                    &self.standardizer,
                    rng.as_mut().map(|r| r as &mut dyn RngCore),
                )?;
                let y2 = self.igatp.forward(
                    &mut tape,
                    &contexts[b],
                    &self.standardizer,
                    rng.as_mut().map(|r| r as &mut dyn RngCore),
                )?;
                let l = nn::contrastive_loss(&mut tape, y1, y2, same, margin);
                loss += tape.value(l).item();
                tape.backward(l).accumulate_params(&mut grads);
            }
            Ok::<_, Error>((loss, grads))
        })?;
        let mut grads = self.igatp_params.zeros_like();
        let mut loss = 0.0;
        for (l, g) in parts {
            loss += l;
            for (acc, d) in grads.iter_mut().zip(&g) {
                acc.add_assign(d);
            }
        }
        let inv = 1.0 / pairs.len().max(1) as f64;
        grads.iter_mut().for_each(|g| g.scale_assign(inv));
        Ok((loss * inv, grads))
    }

    /// Mean reconstruction MSE over the rows of `ys` and its gradient with
    /// respect to the autoencoder parameters.
    pub fn autoencoder_batch_gradient(&self, ys: &Tensor2) -> Result<(f64, Vec<Tensor2>)> {
        let mut tape = Tape::new(&self.ae_params);
        let x = tape.constant(ys.clone());
        let r = self.autoencoder.forward(&mut tape, x)?;
        let l = nn::mse(&mut tape, r, x);
        let mut grads = self.ae_params.zeros_like();
        tape.backward(l).accumulate_params(&mut grads);
        Ok((tape.value(l).item(), grads))
    }
}

/// Per-epoch mean losses of both training stages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub siamese: Vec<f64>,
    pub autoencoder: Vec<f64>,
}

/// Contrastive training of the IGATP weights; returns per-epoch mean loss.
pub fn train_siamese(
    model: &mut GroupModel,
    contexts: &[PlacementContext],
    labels: &[bool],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    assert_eq!(contexts.len(), labels.len(), "one label per context");
    let pos: Vec<usize> = (0..labels.len()).filter(|i| labels[*i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|i| !labels[*i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InsufficientData(format!(
            "siamese training for {} needs both labels ({} positive, {} negative)",
            model.group,
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = rng_for(cfg.seed, &["siamese", model.group.label()]);
    let mut adam = Adam::new(&model.igatp_params, cfg.lr, cfg.l2_siamese).with_l2_mode(cfg.l2_mode);
    let batches = contexts.len().div_ceil(cfg.batch_pairs);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        for _ in 0..batches {
            let pairs: Vec<_> = (0..cfg.batch_pairs)
                .map(|k| {
                    let (a, b, same) = if k < cfg.batch_pairs / 2 {
                        let pool = if rng.gen_bool(0.5) { &pos } else { &neg };
                        (pool[rng.gen_range(0..pool.len())], pool[rng.gen_range(0..pool.len())], true)
                    } else {
                        let p = pos[rng.gen_range(0..pos.len())];
                        let n = neg[rng.gen_range(0..neg.len())];
                        if rng.gen_bool(0.5) {
                            (p, n, false)
                        } else {
                            (n, p, false)
                        }
                    };
                    (a, b, same, Some(rng.next_u64()))
                })
                .collect();
            let (loss, grads) = model.siamese_batch_gradient(contexts, &pairs, cfg.margin)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite("siamese gradient"));
            }
            adam.step(&mut model.igatp_params, &grads);
            total += loss;
        }
        let mean = total / batches as f64;
        log::debug!("{} siamese epoch {epoch}: {mean:.5}", model.group);
        history.push(mean);
    }
    Ok(history)
}

/// Reconstruction training on frozen IGATP outputs of real placements.
pub fn train_autoencoder(
    model: &mut GroupModel,
    positives: &[PlacementContext],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if positives.is_empty() {
        return Err(Error::InsufficientData(format!("no positive placements for {}", model.group)));
    }
    let ys = par::try_map(positives, |c| model.project(c))?;
    let dim = model.dims.output_dim();
    let mut rng = rng_for(cfg.seed, &["autoencoder", model.group.label()]);
    let mut adam = Adam::new(&model.ae_params, cfg.lr, cfg.l2_ae).with_l2_mode(cfg.l2_mode);
    let mut order: Vec<usize> = (0..ys.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.ae_batch) {
            let data: Vec<f64> = batch.iter().flat_map(|i| ys[*i].iter().copied()).collect();
            let (loss, grads) = model.autoencoder_batch_gradient(&Tensor2::new(batch.len(), dim, data)?)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite("autoencoder gradient"));
            }
            adam.step(&mut model.ae_params, &grads);
            total += loss * batch.len() as f64;
        }
        let mean = total / ys.len() as f64;
        log::debug!("{} autoencoder epoch {epoch}: {mean:.5}", model.group);
        history.push(mean);
    }
    Ok(history)
}

/// Dataset, standardizer, model and both training stages for one group.
pub fn train_group(
    scenes: &[Arc<Scene>],
    group: FurnitureGroup,
    dims: &ModelDims,
    fp: &FeatureParams,
    cfg: &TrainConfig,
) -> Result<(GroupModel, TrainReport)> {
    cfg.validate()?;
    let data = build_dataset(scenes, group, fp, cfg)?;
    if data.is_empty() {
        return Err(Error::InsufficientData(format!("no {group} instances in the training scenes")));
    }
    let contexts = par::try_map(&data, |p| p.context(fp))?;
    let labels: Vec<bool> = data.iter().map(|p| p.label).collect();
    let rows: Vec<&[f64]> = contexts.iter().map(|c| c.summary.as_slice()).collect();
    let standardizer = Standardizer::fit(&rows)?;
    let mut model = GroupModel::new(group, dims.clone(), *fp, standardizer, cfg.support_height_max, cfg.seed)?;
    let siamese = train_siamese(&mut model, &contexts, &labels, cfg)?;
    let positives: Vec<PlacementContext> =
        contexts.into_iter().zip(&labels).filter(|(_, l)| **l).map(|(c, _)| c).collect();
    let autoencoder = train_autoencoder(&mut model, &positives, cfg)?;
    Ok((model, TrainReport { siamese, autoencoder }))
}
