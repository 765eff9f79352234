//! Finite-difference checks of every differentiable block. Each function
//! returns the worst relative error for one seed.

use rand::Rng;

use scenefit::features::{summary_vector, Standardizer};
use scenefit::model::PlacementContext;
use scenefit::nn::{contrastive_loss, mse, GatLayer, Mlp, ParamSet, Tape, Tensor2, Var};
use scenefit::{FeatureParams, FurnitureGroup, GroupModel, ModelDims};

use super::{finite_difference_error, random_scene, rng};

pub const SEEDS: u64 = 10;
pub const TOL: f64 = 1e-4;

fn random_tensor(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor2 {
    Tensor2::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Random fixed projection to a scalar so every output entry gets a distinct weight.
fn readout(tape: &mut Tape<'_>, v: Var, w: &Tensor2) -> Var {
    let c = tape.constant(w.clone());
    let m = tape.mul(v, c);
    tape.sum(m)
}

fn grads(tape: &Tape<'_>, root: Var, params: &ParamSet) -> Vec<Tensor2> {
    let mut g = params.zeros_like();
    tape.backward(root).accumulate_params(&mut g);
    g
}

/// Fresh layers start with zero biases, which can park a ReLU exactly on its
/// kink (an all-zero code feeding the decoder, for instance). Small positive
/// biases move every unit off it.
fn lift_biases(params: &ParamSet, rng: &mut impl Rng) -> ParamSet {
    let mut p = params.clone();
    for id in params.ids() {
        if params.name(id).ends_with(".b") {
            p.get_mut(id).data_mut().iter_mut().for_each(|v| *v += rng.gen_range(0.05..0.2));
        }
    }
    p
}

pub fn mlp(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut params = ParamSet::new();
    let mlp = Mlp::new(&mut params, "m", &[5, 7, 6, 3], &mut rng).unwrap();
    let x = random_tensor(4, 5, &mut rng);
    let w = random_tensor(4, 3, &mut rng);
    let f = |p: &ParamSet| {
        let mut t = Tape::new(p);
        let xv = t.constant(x.clone());
        let y = mlp.forward(&mut t, xv).unwrap();
        let l = readout(&mut t, y, &w);
        (t.value(l).item(), grads(&t, l, p))
    };
    finite_difference_error(&params, &f, 12, &mut rng)
}

pub fn gat_eval_mode(seed: u64) -> f64 {
    let mut rng = rng(100 + seed);
    let mut params = ParamSet::new();
    let gat = GatLayer::new(&mut params, "g", 4, 3, 2, &mut rng).unwrap();
    let x = random_tensor(5, 4, &mut rng);
    let edges = vec![(1, 0), (2, 0), (3, 0), (4, 0), (0, 2), (3, 2), (2, 4)];
    let w = random_tensor(5, 6, &mut rng);
    let f = |p: &ParamSet| {
        let mut t = Tape::new(p);
        let xv = t.constant(x.clone());
        let out = gat.forward(&mut t, xv, &edges, None).unwrap();
        let l = readout(&mut t, out.nodes, &w);
        (t.value(l).item(), grads(&t, l, p))
    };
    finite_difference_error(&params, &f, 12, &mut rng)
}

/// Contrastive loss (both branches, hinge active) and MSE with respect to their inputs.
pub fn losses(seed: u64) -> f64 {
    let mut rng = rng(200 + seed);
    let mut params = ParamSet::new();
    let a = params.add("a", random_tensor(1, 4, &mut rng));
    let b = params.add("b", random_tensor(1, 4, &mut rng));
    let mut worst = 0.0f64;
    // The margin exceeds the largest possible squared distance, so the hinge stays active.
    for same in [true, false] {
        let f = |p: &ParamSet| {
            let mut t = Tape::new(p);
            let (av, bv) = (t.param(a), t.param(b));
            let l = contrastive_loss(&mut t, av, bv, same, 17.0);
            (t.value(l).item(), grads(&t, l, p))
        };
        worst = worst.max(finite_difference_error(&params, &f, 4, &mut rng));
    }
    let f = |p: &ParamSet| {
        let mut t = Tape::new(p);
        let (av, bv) = (t.param(a), t.param(b));
        let l = mse(&mut t, av, bv);
        (t.value(l).item(), grads(&t, l, p))
    };
    worst.max(finite_difference_error(&params, &f, 4, &mut rng))
}

fn tiny_dims() -> ModelDims {
    ModelDims { init_widths: vec![6], gat_heads: 2, gat_head_dim: 3, proj_widths: vec![10, 5], ae_widths: vec![4, 2] }
}

/// A small model plus a handful of real placement contexts.
fn tiny_model(seed: u64) -> (GroupModel, Vec<PlacementContext>) {
    let mut rng = rng(300 + seed);
    let fp = FeatureParams::default();
    let scenes: Vec<_> = (0..3).map(|i| random_scene(&format!("s{i}"), 6, &mut rng)).collect();
    let mut contexts = Vec::new();
    let mut rows = Vec::new();
    for s in &scenes {
        for o in s.objects().iter().take(2) {
            let rest = s.without_object(&o.id);
            contexts.push(PlacementContext::new(o, &rest, &fp).unwrap());
            rows.push(summary_vector(o, &rest, &fp).values.to_vec());
        }
    }
    let st = Standardizer::fit(&rows).unwrap();
    (GroupModel::new(FurnitureGroup::Table, tiny_dims(), fp, st, 1.0, seed).unwrap(), contexts)
}

/// INIT, six attention layers and PROJ under the contrastive loss, in eval mode.
pub fn igatp_composite(seed: u64) -> f64 {
    let (model, contexts) = tiny_model(seed);
    let pairs = vec![(0, 1, true, None), (2, 3, false, None), (4, 5, false, None)];
    let ae = model.ae_params().clone();
    let f = |p: &ParamSet| {
        let mut m = model.clone();
        m.set_params(p.clone(), ae.clone()).unwrap();
        m.siamese_batch_gradient(&contexts, &pairs, 15.0).unwrap()
    };
    let mut rng = rng(seed);
    let start = lift_biases(model.igatp_params(), &mut rng);
    finite_difference_error(&start, &f, 6, &mut rng)
}

pub fn autoencoder(seed: u64) -> f64 {
    let (model, _) = tiny_model(seed);
    let mut rng = rng(400 + seed);
    let ys = random_tensor(4, 5, &mut rng);
    let ig = model.igatp_params().clone();
    let f = |p: &ParamSet| {
        let mut m = model.clone();
        m.set_params(ig.clone(), p.clone()).unwrap();
        m.autoencoder_batch_gradient(&ys).unwrap()
    };
    let start = lift_biases(model.ae_params(), &mut rng);
    finite_difference_error(&start, &f, 8, &mut rng)
}

/// Every check over every seed, as `(name, worst error)`.
pub fn suite() -> Vec<(&'static str, f64)> {
    type Check = (&'static str, fn(u64) -> f64);
    let checks: [Check; 5] = [
        ("mlp", mlp),
        ("gat", gat_eval_mode),
        ("losses", losses),
        ("igatp", igatp_composite),
        ("autoencoder", autoencoder),
    ];
    checks.iter().map(|(name, f)| (*name, (0..SEEDS).map(f).fold(0.0, f64::max))).collect()
}
