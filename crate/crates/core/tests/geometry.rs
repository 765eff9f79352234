mod common;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::seq::SliceRandom;

use scenefit::features::{layout, nearest_objects, summary_vector, FeatureParams, RhoMode};
use scenefit::graph::{extract_graphs, NodeKind, Relation};
use scenefit::{BoundingBox3, FurnitureGroup, Scene, SceneObject};

fn params(per_axis: bool) -> FeatureParams {
    FeatureParams { rho_mode: if per_axis { RhoMode::PerAxis } else { RhoMode::Min }, ..FeatureParams::default() }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        rng_seed: RngSeed::Fixed(20),
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn features_match_oracles(seed in any::<u64>(), n in 1usize..12, per_axis in any::<bool>()) {
        let s = common::random_scene("p", n, &mut common::rng(seed));
        let r = common::check_scene_features(&s, &params(per_axis));
        prop_assert!(r.is_ok(), "{}", r.unwrap_err());
    }

    #[test]
    fn graphs_match_oracles(seed in any::<u64>(), n in 1usize..12) {
        let s = common::random_scene("p", n, &mut common::rng(seed));
        let r = common::check_scene_graphs(&s, &FeatureParams::default());
        prop_assert!(r.is_ok(), "{}", r.unwrap_err());
    }

    #[test]
    fn summary_is_translation_invariant(seed in any::<u64>(), n in 1usize..10, dx in -8i32..8, dy in -8i32..8, dz in 0i32..4) {
        let s = common::random_scene("p", n, &mut common::rng(seed));
        // Quarter-meter steps keep shifted coordinates ordered exactly as before.
        let moved = s.translated([dx as f64 * 0.25, dy as f64 * 0.25, dz as f64 * 0.25]);
        let p = FeatureParams::default();
        for (a, b) in s.objects().iter().zip(moved.objects()) {
            let (va, vb) = (summary_vector(a, &s, &p), summary_vector(b, &moved, &p));
            // Neighbors at equal distance are ordered by roundoff after a shift.
            let d: Vec<f64> = nearest_objects(a, &s).iter().map(|x| x.0).collect();
            let tied = d.windows(2).take(3).any(|w| w[1] - w[0] < 1e-9);
            let first = if tied { layout::EB } else { 0 };
            for k in first..layout::LEN {
                let ok = if common::is_distance_entry(k) { (va.values[k] - vb.values[k]).abs() < 1e-9 } else { va.values[k] == vb.values[k] };
                prop_assert!(ok, "{} entry {k}: {} vs {}", a.id, va.values[k], vb.values[k]);
            }
        }
    }

    #[test]
    fn summary_ignores_object_order(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = common::rng(seed);
        let s = common::random_scene("p", n, &mut rng);
        let mut objects = s.objects().to_vec();
        objects.shuffle(&mut rng);
        let shuffled = s.with_objects(objects);
        let p = FeatureParams::default();
        for o in s.objects() {
            let (a, b) = (summary_vector(o, &s, &p), summary_vector(o, &shuffled, &p));
            // Averaged distances may differ in the last bit from summation order.
            for k in 0..layout::LEN {
                let ok = if common::is_distance_entry(k) { (a.values[k] - b.values[k]).abs() < 1e-12 } else { a.values[k] == b.values[k] };
                prop_assert!(ok, "{} entry {k}: {} vs {}", o.id, a.values[k], b.values[k]);
            }
        }
    }

    #[test]
    fn position_flags_are_exclusive(seed in any::<u64>(), n in 1usize..12) {
        let s = common::random_scene("p", n, &mut common::rng(seed));
        for o in s.objects() {
            let v = summary_vector(o, &s, &FeatureParams::default());
            let (eb, cb) = v.edge_corner();
            prop_assert!(eb + cb <= 1.0 && eb * cb == 0.0);
            prop_assert_eq!(v.values.len(), layout::LEN);
        }
    }
}

fn object(id: &str, group: FurnitureGroup, min: [f64; 3], max: [f64; 3]) -> SceneObject {
    SceneObject::new(id, group, BoundingBox3::new(min, max).unwrap())
}

#[test]
fn lone_object_in_the_middle_gets_defaults_everywhere() {
    let s =
        Scene::rectangle("r", 10.0, 10.0, vec![object("t", FurnitureGroup::Table, [4.5, 4.5, 0.0], [5.5, 5.5, 0.8])])
            .unwrap();
    let p = FeatureParams::default();
    let set = extract_graphs(&s.objects()[0], &s, &p);
    for r in Relation::ALL {
        let g = set.get(r);
        let kinds: Vec<NodeKind> = g.nodes.iter().map(|n| n.kind.clone()).collect();
        if r == Relation::Rp {
            assert!(kinds.contains(&NodeKind::Floor), "{kinds:?}");
            assert!(!g.has_default());
        } else {
            assert!(g.has_default(), "{}", r.label());
        }
    }
    let v = summary_vector(&s.objects()[0], &s, &p);
    assert!(v.values.iter().all(|x| *x == 0.0));
}

#[test]
fn corner_object_touches_two_walls() {
    let s = Scene::rectangle("r", 5.0, 4.0, vec![object("b", FurnitureGroup::Bed, [0.0, 0.0, 0.0], [2.0, 1.6, 0.5])])
        .unwrap();
    let v = summary_vector(&s.objects()[0], &s, &FeatureParams::default());
    assert_eq!(v.edge_corner(), (0.0, 1.0));
    assert_eq!(v.intersect_xy()[8], 2.0);
}

#[test]
fn stacked_pair_supports_both_ways() {
    let tv = object("tv", FurnitureGroup::Tv, [1.0, 1.0, 0.52], [1.8, 1.2, 1.0]);
    let cab = object("cab", FurnitureGroup::Storage, [0.8, 0.9, 0.0], [2.0, 1.4, 0.5]);
    let s = Scene::rectangle("r", 5.0, 5.0, vec![tv, cab]).unwrap();
    let p = FeatureParams::default();
    let tv_v = summary_vector(&s.objects()[0], &s, &p);
    let cab_v = summary_vector(&s.objects()[1], &s, &p);
    assert_eq!(tv_v.supported_by()[FurnitureGroup::Storage.index()], 1.0);
    assert_eq!(cab_v.supports()[FurnitureGroup::Tv.index()], 1.0);
    assert!((tv_v.avg_dist()[FurnitureGroup::Storage.index()] - 0.02).abs() < 1e-12);
    assert_eq!(tv_v.closest()[0], (FurnitureGroup::Storage.index() + 1) as f64);
}

#[test]
fn shipped_scenes_match_oracles() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes");
    let corpus = scenefit::io::load_corpus(&dir).unwrap();
    assert_eq!(corpus.len(), 3);
    for s in &corpus {
        common::check_scene_features(s, &FeatureParams::default()).unwrap();
        common::check_scene_graphs(s, &FeatureParams::default()).unwrap();
    }
}
