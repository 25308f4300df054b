mod common;

use proptest::prelude::*;
use rastmap::metrics::{
    ap_from_flags, average_precision, bitmap_iou, chamfer_dir, chamfer_points, match_predictions, ClassDistances, EvalScene,
    SceneVectors,
};
use rastmap::{chamfer, evaluate, Bitmap, EvalConfig, MapClass, Point, VectorInstance};

fn pts(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

#[test]
fn chamfer_analytic_cases() {
    let a = pts(&[(0.0, 0.0), (1.0, 0.0), (2.5, 1.0)]);
    assert_eq!(chamfer_points(&a, &a).unwrap(), 0.0);
    assert!((chamfer_dir(&pts(&[(0.0, 0.0)]), &pts(&[(3.0, 4.0)])).unwrap() - 5.0).abs() < 1e-9);
    assert!((chamfer_dir(&pts(&[(0.0, 0.0), (1.0, 0.0)]), &pts(&[(0.0, 0.0)])).unwrap() - 0.5).abs() < 1e-9);
    // The bidirectional distance adds the reverse direction, which is 0 here.
    assert!((chamfer_points(&pts(&[(0.0, 0.0), (1.0, 0.0)]), &pts(&[(0.0, 0.0)])).unwrap() - 0.5).abs() < 1e-9);

    let cfg = EvalConfig::default();
    let seg = |y: f64| VectorInstance::new(MapClass::Divider, pts(&[(0.0, y), (10.0, y)]), false, 1.0).unwrap();
    assert!((chamfer(&seg(0.0), &seg(0.3), &cfg) - 0.6).abs() < 1e-9);
}

#[test]
fn average_precision_matches_exact_oracle() {
    let cfg = EvalConfig::default();
    let mut rng = common::rng(31);
    let mut nontrivial = 0;
    for case in 0..300 {
        let scenes = common::random_ap_case(&mut rng);
        let mut last = -1.0;
        for &t in &[0.5, 1.0, 1.5] {
            let (flags, exact) = common::oracle_ap(&scenes, MapClass::Divider, t, &cfg);
            let d = ClassDistances::compute(&scenes, MapClass::Divider, &cfg, t);
            let got: Vec<bool> = match_predictions(&d, MapClass::Divider, t).iter().map(|r| r.tp).collect();
            assert_eq!(got, flags, "case {case} threshold {t}");
            let ap = average_precision(&scenes, MapClass::Divider, t, &cfg);
            assert!((ap - exact.to_f64()).abs() <= 1e-12, "case {case}: {ap} vs {exact:?}");
            assert!(ap >= last, "case {case}: AP fell from {last} to {ap} at {t}");
            last = ap;
            nontrivial += (ap > 0.0 && ap < 1.0) as usize;
        }
    }
    assert!(nontrivial > 50);
}

#[test]
fn three_predictions_two_hits() {
    let gts: Vec<VectorInstance> = (0..3)
        .map(|k| VectorInstance::new(MapClass::Divider, pts(&[(k as f64 * 5.0, 0.0), (k as f64 * 5.0, 4.0)]), false, 1.0).unwrap())
        .collect();
    let preds = vec![
        VectorInstance::new(MapClass::Divider, pts(&[(0.1, 0.0), (0.1, 4.0)]), false, 0.9).unwrap(),
        VectorInstance::new(MapClass::Divider, pts(&[(5.1, 0.0), (5.1, 4.0)]), false, 0.8).unwrap(),
        VectorInstance::new(MapClass::Divider, pts(&[(30.0, 0.0), (30.0, 4.0)]), false, 0.7).unwrap(),
    ];
    let scenes = vec![SceneVectors { gts, preds }];
    let cfg = EvalConfig::default();
    let ap = average_precision(&scenes, MapClass::Divider, 1.0, &cfg);
    let (_, exact) = common::oracle_ap(&scenes, MapClass::Divider, 1.0, &cfg);
    assert_eq!(exact, common::Ratio(2, 3));
    assert!((ap - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn ap_of_flag_sequences_matches_rational_oracle() {
    let mut rng = common::rng(32);
    use rand::Rng;
    for _ in 0..2000 {
        let n = rng.random_range(0..14);
        let flags: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let hits = flags.iter().filter(|f| **f).count();
        let g = hits + rng.random_range(0..4);
        let exact = common::exact_ap(&flags, g).to_f64();
        assert!((ap_from_flags(&flags, g) - exact).abs() <= 1e-12, "{flags:?} {g}");
    }
}

#[test]
fn self_evaluation_scores_one() {
    let scenes = rastmap::io::gen_synthetic(3, 4, rastmap::io::Difficulty::Hard);
    let evs: Vec<EvalScene> = scenes
        .iter()
        .map(|s| rastmap::pipeline::eval_scene(s, s.gt_vectors.clone(), None, None))
        .collect();
    let r = evaluate(&evs, &EvalConfig::default()).unwrap();
    assert_eq!(r.map, 1.0);
}

fn random_mask(seed: u64, w: usize, h: usize, density: f64) -> Bitmap {
    use rand::Rng;
    let mut rng = common::rng(seed);
    Bitmap::from_fn(w, h, |_, _| if rng.random_bool(density) { 1.0 } else { 0.0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn iou_is_reflexive_symmetric_and_bounded(seed in any::<u64>(), w in 1usize..24, h in 1usize..24, d in 0.0f64..1.0) {
        let a = random_mask(seed, w, h, d);
        let b = random_mask(seed ^ 0x5555, w, h, d);
        prop_assert_eq!(bitmap_iou(&a, &a).unwrap(), 1.0);
        let ab = bitmap_iou(&a, &b).unwrap();
        prop_assert_eq!(ab, bitmap_iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        // Pixel-count oracle.
        let inter = a.data().iter().zip(b.data()).filter(|(x, y)| **x >= 0.5 && **y >= 0.5).count();
        let uni = a.data().iter().zip(b.data()).filter(|(x, y)| **x >= 0.5 || **y >= 0.5).count();
        let expect = if uni == 0 { 1.0 } else { inter as f64 / uni as f64 };
        prop_assert!((ab - expect).abs() < 1e-12);
    }

    #[test]
    fn chamfer_is_symmetric_and_zero_on_self(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = common::rng(seed);
        let a: Vec<Point> = (0..rng.random_range(1..20)).map(|_| Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))).collect();
        let b: Vec<Point> = (0..rng.random_range(1..20)).map(|_| Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))).collect();
        prop_assert_eq!(chamfer_points(&a, &a).unwrap(), 0.0);
        prop_assert!((chamfer_points(&a, &b).unwrap() - chamfer_points(&b, &a).unwrap()).abs() < 1e-12);
    }
}
