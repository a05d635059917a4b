use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geowarp::chemistry::{AssaySample, ClassId, DestinationScheme, LikelihoodTable};
use geowarp::geom::Vec3;
use geowarp::geoprior::{ColumnStack, GeozoneModel};
use geowarp::gp::{self, linalg::Cholesky, GpInput, GpModel, Hyper, Prepared, Support, TrainConfig};
use geowarp::mesh::{HeightField, TriMesh};
use geowarp::synth::{self, SynthSpec};
use geowarp::validate::{self, BenchMask, GradeBlock, MaskMode, R2Record, ReconcileConfig};
use geowarp::ZoneId;

fn sample(x: f64, y: f64, z: f64, h: f64, fe: f64, si: f64, al: f64) -> AssaySample<f64> {
    AssaySample {
        hole_id: "p".into(),
        collar: Vec3::new(x, y, z),
        interval_length: h,
        chemistry: BTreeMap::from([("Fe".into(), fe), ("SiO2".into(), si), ("Al2O3".into(), al)]),
        geozone: None,
        tonnage: None,
    }
}

/// The default cascade written out by hand.
fn default_class(fe: f64, al: f64) -> &'static str {
    if al >= 6.0 {
        "W23"
    } else if fe < 50.0 {
        "W1"
    } else if fe >= 60.0 {
        "HG"
    } else if fe >= 55.0 && al < 3.0 {
        "BLS"
    } else if fe >= 55.0 {
        "BLA"
    } else if al < 3.0 {
        "LGS"
    } else {
        "LGA"
    }
}

#[test]
fn classification_matches_hand_cascade() {
    let scheme = DestinationScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100_000 {
        // Every tenth draw sits exactly on a threshold.
        let (fe, al) = if i % 10 == 0 {
            ([50.0, 55.0, 60.0][i % 3], [3.0, 6.0][i % 2])
        } else {
            (rng.random_range(30.0..70.0), rng.random_range(0.0..10.0))
        };
        let s = sample(0.0, 0.0, 0.0, 1.0, fe, rng.random_range(0.0..30.0), al);
        let c = scheme.classify(&s.chemistry).unwrap();
        assert_eq!(scheme.name(c), default_class(fe, al), "Fe {fe} Al2O3 {al}");
    }
}

fn labelled(rng: &mut ChaCha8Rng, n: usize) -> Vec<AssaySample<f64>> {
    (0..n)
        .map(|_| {
            let mut s = sample(0.0, 0.0, 0.0, 1.0, rng.random_range(40.0..66.0), 5.0, rng.random_range(0.0..8.0));
            s.geozone = Some(ZoneId(rng.random_range(0..3)));
            s
        })
        .collect()
}

#[test]
fn table_matches_counting_oracle() {
    let scheme = DestinationScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let train = labelled(&mut rng, 1000);
    let alpha = 0.5;
    let table = LikelihoodTable::build(&scheme, &train, None, alpha).unwrap();
    for z in 0..3u16 {
        let in_zone: Vec<_> = train.iter().filter(|s| s.geozone == Some(ZoneId(z))).collect();
        for (c, name) in scheme.names().iter().enumerate() {
            let hits = in_zone
                .iter()
                .filter(|s| default_class(s.chemistry["Fe"], s.chemistry["Al2O3"]) == name)
                .count();
            let want = (hits as f64 + alpha) / (in_zone.len() as f64 + alpha * scheme.len() as f64);
            let got = table.lookup(ClassId(c as u8), ZoneId(z)).unwrap();
            assert!((got - want).abs() < 1e-15, "{name} zone {z}: {got} vs {want}");
        }
    }
}

fn stack() -> GeozoneModel<f64> {
    let meshes = vec![
        TriMesh::grid(0.0, 0.0, 5.0, 5.0, 10, 10, |x: f64, y: f64| 20.0 + 2.0 * (x / 9.0).sin() + 0.1 * y),
        TriMesh::grid(0.0, 0.0, 5.0, 5.0, 10, 10, |x: f64, y: f64| 14.0 + (y / 7.0).cos() - 0.05 * x),
    ];
    GeozoneModel::Stack(ColumnStack::new(&meshes, None).unwrap())
}

fn records(pairs: &[(f64, f64)]) -> Vec<R2Record<f64>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(r2, tonnage))| R2Record { block: format!("b{i}"), element: "Fe".into(), r2, tonnage })
        .collect()
}

fn inputs_strategy(max: usize) -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((0.0..30.0f64, 0.0..30.0f64, 0.0..15.0f64, prop_oneof![Just(0.0), 0.5..4.0f64]), 1..max)
}

fn to_inputs(v: &[(f64, f64, f64, f64)]) -> Vec<GpInput<f64>> {
    v.iter().map(|&(x, y, z, h)| GpInput::interval(Vec3::new(x, y, z), h)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn table_ignores_training_order(seed in 0u64..1000, shuffle in 0u64..1000) {
        let scheme = DestinationScheme::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = labelled(&mut rng, 120);
        let mut shuffled = train.clone();
        let mut r2 = ChaCha8Rng::seed_from_u64(shuffle);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r2.random_range(0..=i));
        }
        let a = LikelihoodTable::build(&scheme, &train, None, 0.5).unwrap();
        let b = LikelihoodTable::build(&scheme, &shuffled, None, 0.5).unwrap();
        prop_assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn overlap_sums_to_one_and_is_lipschitz(x in -5.0..55.0f64, y in -5.0..55.0f64, top in 5.0..30.0f64, h in 0.1..8.0f64, eps in 1e-6..0.5f64) {
        let m = stack();
        let col = m.column(x, y);
        let mut total = 0.0;
        col.for_each_overlap(top, h, |_, r| total += r);
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for g in [ZoneId(0), ZoneId(1), ZoneId(2), ZoneId::EXTERIOR] {
            let a = col.overlap(top, h, g);
            let b = col.overlap(top + eps, h, g);
            prop_assert!(a >= 0.0 && a <= 1.0 + 1e-12);
            // Each end of the interval moves by eps.
            prop_assert!((a - b).abs() <= 2.0 * eps / h + 1e-12);
        }
    }

    #[test]
    fn score_identity_permutation_and_split(pairs in prop::collection::vec((0.2..3.0f64, 0.1..40.0f64), 1..40), rot in 0usize..40, split in 0usize..40) {
        let ones: Vec<(f64, f64)> = pairs.iter().map(|&(_, w)| (1.0, w)).collect();
        prop_assert_eq!(validate::r2_error_score(&records(&ones)).unwrap(), 0.0);
        let base = validate::r2_error_score(&records(&pairs)).unwrap();
        let mut rotated = pairs.clone();
        rotated.rotate_left(rot % pairs.len());
        prop_assert!((validate::r2_error_score(&records(&rotated)).unwrap() - base).abs() < 1e-9);
        let i = split % pairs.len();
        let mut halves = pairs.clone();
        halves[i].1 /= 2.0;
        halves.push(halves[i]);
        prop_assert!((validate::r2_error_score(&records(&halves)).unwrap() - base).abs() < 1e-9);
        prop_assert!((validate::step_cdf_area(&records(&pairs)).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn kernel_matrix_symmetric_psd(pts in inputs_strategy(200), l in 1.0..10.0f64, sf in 0.1..5.0f64, seed in 0u64..100) {
        let hyper = Hyper::new(l, l * 1.3, l * 0.5, sf, 0.01);
        let x = to_inputs(&pts);
        let n = x.len();
        let k = gp::cross_covariance(&hyper, &Prepared::new(&x), &Prepared::new(&x));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(k[i * n + j], k[j * n + i]);
            }
        }
        for _ in 0..5 {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q: f64 = (0..n).map(|i| v[i] * (0..n).map(|j| k[i * n + j] * v[j]).sum::<f64>()).sum();
            let norm: f64 = v.iter().map(|a| a * a).sum();
            prop_assert!(q >= -1e-9 * norm * sf, "vKv = {q}");
        }
        let mut a = k.clone();
        for i in 0..n {
            a[i * n + i] += 0.01;
        }
        prop_assert!(Cholesky::new(&a, n).is_some());
    }

    #[test]
    fn posterior_variance_bounded(pts in inputs_strategy(40), q in inputs_strategy(30), l in 1.0..10.0f64, sf in 0.1..5.0f64, sn in 1e-4..1.0f64) {
        let x = to_inputs(&pts);
        let y: Vec<f64> = (0..x.len()).map(|i| (i as f64 * 0.7).sin()).collect();
        let hyper = Hyper::new(l, l, l * 0.4, sf, sn);
        let m = GpModel::fit("Fe", ZoneId(0), Support::Interval, x, y, hyper).unwrap();
        for (_, v) in m.predict(&to_inputs(&q)) {
            prop_assert!(v >= 0.0 && v <= sf + 1e-9);
        }
    }

    #[test]
    fn stratification_translation_invariant(dx in -50.0..50.0f64, dy in -50.0..50.0f64, dz in -20.0..20.0f64, seed in 0u64..50) {
        let scheme = DestinationScheme::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<_> = (0..300)
            .map(|_| sample(rng.random_range(-5.0..55.0), rng.random_range(-5.0..55.0), rng.random_range(5.0..30.0), 2.0, rng.random_range(40.0..66.0), 5.0, rng.random_range(0.0..8.0)))
            .collect();
        let mesh = TriMesh::grid(0.0, 0.0, 5.0, 5.0, 10, 10, |x: f64, y: f64| 15.0 + 3.0 * (x / 8.0).sin() + 0.2 * y);
        let t = Vec3::new(dx, dy, dz);
        let a = validate::stratify(&samples, &scheme, &HeightField::new(&mesh).unwrap()).unwrap();
        let moved: Vec<_> = samples.iter().map(|s| s.translated(t)).collect();
        let b = validate::stratify(&moved, &scheme, &HeightField::new(&mesh.translated(t)).unwrap()).unwrap();
        prop_assert_eq!(a.above, b.above);
        prop_assert_eq!(a.below, b.below);
        prop_assert_eq!(a.outside, b.outside);
    }

    #[test]
    fn bench_mask_idempotent(bench in -10.0..40.0f64, seed in 0u64..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<_> = (0..200).map(|_| sample(0.0, 0.0, rng.random_range(-20.0..60.0), 2.0, 60.0, 3.0, 1.0)).collect();
        for mode in MaskMode::ALL {
            let mask = BenchMask::for_bench(mode, bench, 10.0);
            let kept = validate::apply_bench_mask(&samples, &mask);
            let subset: Vec<_> = kept.iter().map(|&i| samples[i].clone()).collect();
            prop_assert_eq!(validate::apply_bench_mask(&subset, &mask).len(), subset.len());
            prop_assert!(kept.iter().all(|&i| samples[i].collar.z >= mask.rl));
        }
    }
}

#[test]
fn block_membership_matches_prism_oracle() {
    let scheme = DestinationScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let samples: Vec<_> = (0..10_000)
        .map(|i| {
            // Snap some midpoints onto block faces.
            let snap = |v: f64| if i % 7 == 0 { (v / 5.0).round() * 5.0 } else { v };
            let (x, y) = (snap(rng.random_range(0.0..20.0)), snap(rng.random_range(0.0..20.0)));
            let mid = snap(rng.random_range(0.0..20.0));
            sample(x, y, mid + 1.0, 2.0, rng.random_range(40.0..66.0), 4.0, rng.random_range(0.0..8.0))
        })
        .collect();
    let mut blocks = Vec::new();
    for tag in ["HG", "BL", "LG", "W"] {
        for (i, &(x0, y0, z0)) in [(0.0, 0.0, 0.0), (5.0, 5.0, 5.0), (10.0, 0.0, 10.0)].iter().enumerate() {
            blocks.push(GradeBlock {
                id: format!("{tag}{i}"),
                pit: "S".into(),
                bench: z0,
                dest_tag: tag.into(),
                tonnage_pct: 1.0,
                averages: BTreeMap::new(),
                footprint: [x0, x0 + 5.0, y0, y0 + 10.0],
                z: (z0, z0 + 5.0),
                members: Vec::new(),
            });
        }
    }
    validate::assign_members(&mut blocks, &samples, &scheme).unwrap();
    let group = |name: &str| match name {
        "HG" => "HG",
        "BLS" | "BLA" => "BL",
        "LGS" | "LGA" => "LG",
        _ => "W",
    };
    for b in &blocks {
        let want: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                let (x, y, z) = (s.collar.x, s.collar.y, s.collar.z - 1.0);
                let [x0, x1, y0, y1] = b.footprint;
                x0 <= x && x < x1 && y0 <= y && y < y1 && b.z.0 <= z && z < b.z.1
                    && group(default_class(s.chemistry["Fe"], s.chemistry["Al2O3"])) == b.dest_tag
            })
            .map(|(i, _)| i)
            .collect();
        assert_eq!(b.members, want, "block {}", b.id);
    }
}

#[test]
fn identical_pipelines_score_identically() {
    let scheme = DestinationScheme::default();
    let spec = SynthSpec { size: [50.0, 50.0], ..SynthSpec::default() };
    let scene: synth::SynthScene<f64> = synth::generate(&spec, &scheme).unwrap();
    let copy = scene.prior.clone();
    let cfg = ReconcileConfig {
        benches: vec![10.0],
        train: TrainConfig { starts: 1, max_iterations: 15, max_train: 40, ..TrainConfig::default() },
        ..ReconcileConfig::default()
    };
    let r = validate::reconcile(&scene.samples, &scene.blocks, &[("a".into(), &scene.prior), ("b".into(), &copy)], &cfg).unwrap();
    let mut compared = 0;
    for mode in MaskMode::ALL {
        for e in &cfg.elements {
            let a = r.cell(10.0, mode, e, "a").unwrap();
            let b = r.cell(10.0, mode, e, "b").unwrap();
            assert_eq!(a.score, b.score);
            assert_eq!(a.cdf, b.cdf);
            compared += a.score.is_some() as usize;
        }
    }
    assert!(compared > 0);
}
