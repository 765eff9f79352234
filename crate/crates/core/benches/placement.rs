//! Heatmap scoring and corpus augmentation on the default pool versus one thread.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scenefit::augment::{build_augmented_dataset, AugmentParams};
use scenefit::model::train_group;
use scenefit::placement::{probability_map, GridOptions};
use scenefit::synth::{generate_corpus, SynthParams};
use scenefit::{par, FeatureParams, FurnitureGroup, ModelDims, Scene, TrainConfig};

fn modes() -> [(&'static str, bool); 2] {
    [("pool", false), ("sequential", true)]
}

fn run<R: Send>(sequential: bool, f: impl FnOnce() -> R + Send) -> R {
    if sequential {
        par::with_sequential(f)
    } else {
        f()
    }
}

fn heatmap(c: &mut Criterion) {
    let rooms: Vec<Arc<Scene>> =
        generate_corpus(10, 3, &SynthParams::default()).unwrap().into_iter().map(Arc::new).collect();
    let dims = ModelDims {
        init_widths: vec![16],
        gat_heads: 4,
        gat_head_dim: 4,
        proj_widths: vec![32, 16],
        ae_widths: vec![8, 4],
    };
    let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
    let (model, _) = train_group(&rooms, FurnitureGroup::Bed, &dims, &FeatureParams::default(), &cfg).unwrap();
    let bed = rooms[0].objects().iter().find(|o| o.group == FurnitureGroup::Bed).unwrap();
    let scene = rooms[0].without_object(&bed.id);
    let opts = GridOptions::for_model(&model).with_cell_size(0.2);
    let mut g = c.benchmark_group("probability_map");
    g.sample_size(10);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run(seq, || probability_map(&model, &scene, FurnitureGroup::Bed, bed.bbox.dims(), &opts).unwrap())
            })
        });
    }
    g.finish();
}

fn augmentation(c: &mut Criterion) {
    let rooms = generate_corpus(10, 4, &SynthParams::default()).unwrap();
    let p = AugmentParams { variants_per_room: 5, ..AugmentParams::default() };
    let mut g = c.benchmark_group("augment");
    g.sample_size(10);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(seq, || build_augmented_dataset(&rooms, &p).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, heatmap, augmentation);
criterion_main!(benches);
