//! Property tests for invariants that hold over arbitrary inputs, not
//! just the hand-picked unit fixtures.

use proptest::prelude::*;

use opcs::basis::{FoldAxis, Pattern, SwapMode};
use opcs::connectivity::{count_cd, count_cd_oracle};
use opcs::forward::{
    measure_series, split_complementary, MeasureMode, NoiseSpec, SceneImage,
};
use opcs::metrics;

fn arb_pattern(side: usize) -> impl Strategy<Value = Pattern> {
    proptest::collection::vec(any::<bool>(), side * side).prop_map(move |bits| {
        Pattern::from_values(side, bits.iter().map(|&b| if b { 1 } else { -1 }).collect())
            .unwrap()
    })
}

fn arb_scene(side: usize) -> impl Strategy<Value = SceneImage> {
    proptest::collection::vec(0.0f64..1.0, side * side).prop_map(move |v| {
        SceneImage::from_fn(side, |r, c| v[r * side + c]).unwrap()
    })
}

proptest! {
    #[test]
    fn union_find_matches_flood_fill(p in arb_pattern(16)) {
        prop_assert_eq!(count_cd(&p), count_cd_oracle(&p));
    }

    #[test]
    fn cd_count_invariant_under_negation(p in arb_pattern(8)) {
        let neg = Pattern::from_values(8, p.values().iter().map(|&v| -v).collect()).unwrap();
        prop_assert_eq!(count_cd(&p), count_cd(&neg));
    }

    #[test]
    fn folds_commute_on_any_pattern(p in arb_pattern(8)) {
        let ud_lr = p.fold(FoldAxis::UpDown).unwrap().fold(FoldAxis::LeftRight).unwrap();
        let lr_ud = p.fold(FoldAxis::LeftRight).unwrap().fold(FoldAxis::UpDown).unwrap();
        let both = p.fold(FoldAxis::Both).unwrap();
        prop_assert_eq!(&ud_lr, &lr_ud);
        prop_assert_eq!(&ud_lr, &both);
    }

    #[test]
    fn complementary_pair_reconstructs_source(p in arb_pattern(8)) {
        let pair = split_complementary(&p);
        for (pos, neg) in pair.positive().iter().zip(pair.negative()) {
            prop_assert_eq!(pos + neg, 1);
        }
        prop_assert_eq!(pair.to_pattern().unwrap(), p);
    }

    #[test]
    fn rmse_is_a_metric(
        a in proptest::collection::vec(-1.0f64..1.0, 16),
        b in proptest::collection::vec(-1.0f64..1.0, 16),
        c in proptest::collection::vec(-1.0f64..1.0, 16),
    ) {
        let to_img = |v: &[f64]| ndarray::Array2::from_shape_vec((4, 4), v.to_vec()).unwrap();
        let (a, b, c) = (to_img(&a), to_img(&b), to_img(&c));
        let ab = metrics::rmse(&a, &b).unwrap();
        let ba = metrics::rmse(&b, &a).unwrap();
        let bc = metrics::rmse(&b, &c).unwrap();
        let ac = metrics::rmse(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() < 1e-15);
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn pearson_affine_invariant(
        v in proptest::collection::vec(0.0f64..1.0, 16),
        scale in 0.1f64..10.0,
        offset in -5.0f64..5.0,
    ) {
        let a = ndarray::Array2::from_shape_vec((4, 4), v).unwrap();
        prop_assume!(a.iter().any(|&x| (x - a[[0, 0]]).abs() > 1e-9));
        let t = a.mapv(|x| scale * x + offset);
        let r = metrics::pearson(&a, &t).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn complementary_differential_equals_ideal(scene in arb_scene(8), seed in any::<u64>()) {
        // seed drives nothing in noiseless mode; kept to vary case shapes
        let _ = seed;
        let basis = opcs::basis::generate_origami(8, SwapMode::PostReorder).unwrap();
        let ideal =
            measure_series(&basis, 64, &scene, &NoiseSpec::none(), MeasureMode::IdealPm1)
                .unwrap();
        let comp = measure_series(
            &basis,
            64,
            &scene,
            &NoiseSpec::none(),
            MeasureMode::Complementary01,
        )
        .unwrap();
        prop_assert_eq!(ideal.s_b, comp.s_b); // bitwise
    }

    #[test]
    fn dgi_equals_gi_on_differential_series(
        sb in proptest::collection::vec(-10.0f64..10.0, 32),
        sr in proptest::collection::vec(1.0f64..5.0, 32),
        bits in proptest::collection::vec(any::<bool>(), 32 * 16),
    ) {
        let patterns: Vec<Pattern> = (0..32)
            .map(|k| {
                Pattern::from_values(
                    4,
                    bits[k * 16..(k + 1) * 16]
                        .iter()
                        .map(|&b| if b { 1 } else { -1 })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let series = opcs::forward::BucketSeries {
            mode: MeasureMode::Complementary01,
            s_b: sb.clone(),
            s_r: sr.clone(),
            raw_pos: vec![0.0; 32],
            raw_neg: vec![0.0; 32],
            noise: NoiseSpec::none(),
            basis_id: String::new(),
        };
        let dgi = opcs::recon::reconstruct_dgi(&patterns, &series).unwrap();

        let gamma = sb.iter().sum::<f64>() / sr.iter().sum::<f64>();
        let mut delta_series = series.clone();
        delta_series.s_b =
            sb.iter().zip(&sr).map(|(b, r)| b - gamma * r).collect();
        let gi = opcs::recon::reconstruct_gi(&patterns, &delta_series).unwrap();
        let scale = dgi.image.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-9);
        for (x, y) in dgi.image.iter().zip(gi.image.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale.max(1.0) + 1e-12);
        }
    }
}

#[test]
fn union_find_matches_flood_fill_exhaustive_p2() {
    for bits in 0..16u32 {
        let values: Vec<i8> = (0..4).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
        let p = Pattern::from_values(2, values).unwrap();
        assert_eq!(count_cd(&p), count_cd_oracle(&p));
    }
}
