mod common;

use asdface::features::{
    au_activation, frame_vector, mean_std, positive_fractions, temporal_feature_vector, Attribute, AttributeMatrix,
    FrameAttributes, FEATURE_DIM, FRAME_DIM,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

#[test]
fn matches_brute_force_oracle_on_random_streams() {
    let mut r = common::rng(11);
    for _ in 0..1000 {
        let rows = common::random_stream(&mut r);
        let got = temporal_feature_vector(&AttributeMatrix::new(rows.clone()), 0.5).unwrap();
        let want = common::oracle(&rows, 0.5);
        for (g, w) in got.as_slice().iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
        }
    }
}

#[test]
fn paper_length_stream_matches_composition() {
    let mut r = common::rng(5);
    let rows: Vec<_> = (0..9575).map(|_| common::random_frame(&mut r)).collect();
    let f = AttributeMatrix::new(rows.clone());
    let got = temporal_feature_vector(&f, 0.5).unwrap();
    let (m, s) = mean_std(&f).unwrap();
    let a = au_activation(&f, 0.5).unwrap();
    let (pa, pv) = positive_fractions(&f).unwrap();
    let composed: Vec<f64> = m.iter().chain(&s).chain(&a).copied().chain([pa, pv]).collect();
    assert_eq!(got.as_slice(), composed.as_slice());
    for (g, w) in got.as_slice().iter().zip(common::oracle(&rows, 0.5)) {
        assert!((g - w).abs() <= 1e-12);
    }
}

#[test]
fn boundary_values_are_excluded() {
    let mut rows = Vec::new();
    for (au, aro) in [(0.6, 0.1), (0.4, -0.2), (0.7, 0.0), (0.5, 0.3)] {
        let mut v = [0.0; FRAME_DIM];
        v[0] = au;
        v[12] = 1.0;
        v[20] = aro;
        rows.push(v);
    }
    let f = AttributeMatrix::new(rows);
    assert_eq!(au_activation(&f, 0.5).unwrap()[0], 0.5);
    assert_eq!(positive_fractions(&f).unwrap().0, 0.5);
    // valence is zero everywhere
    assert_eq!(positive_fractions(&f).unwrap().1, 0.0);
}

#[test]
fn single_frame_and_constant_stream() {
    let mut r = common::rng(2);
    let frame = common::random_frame(&mut r);
    for m in [1, 17] {
        let t = temporal_feature_vector(&AttributeMatrix::new(vec![frame; m]), 0.5).unwrap();
        assert_eq!(t.mean(), &frame[..]);
        assert!(t.std().iter().all(|&s| s == 0.0));
        for k in 0..12 {
            assert_eq!(t.activation()[k], if frame[k] > 0.5 { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn empty_matrix_errors() {
    assert!(temporal_feature_vector(&AttributeMatrix::new(Vec::new()), 0.5).is_err());
}

#[test]
fn frame_vector_layout() {
    let attrs = FrameAttributes {
        au: [0.5; 12],
        expr: [0.125; 8],
        arousal: 0.25,
        valence: -0.75,
    };
    let v = frame_vector(&attrs).unwrap();
    assert_eq!(v[20], 0.25);
    assert_eq!(v[21], -0.75);
    assert_eq!(FrameAttributes::from_frame_vector(&v), attrs);
    let bad = FrameAttributes { arousal: 1.5, ..attrs };
    assert!(frame_vector(&bad).is_err());
}

#[test]
fn attribute_slices_partition_the_features() {
    let mut all: Vec<usize> = Attribute::ALL.iter().flat_map(|a| a.feature_indices()).collect();
    assert_eq!(all.len(), FEATURE_DIM);
    all.sort_unstable();
    assert_eq!(all, (0..FEATURE_DIM).collect::<Vec<_>>());
    assert_eq!(Attribute::Au.feature_indices().len(), 36);
    assert_eq!(Attribute::Expr.feature_indices().len(), 16);
    assert_eq!(Attribute::Arousal.feature_indices(), vec![20, 42, 56]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_invariance(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let mut rows = common::random_stream(&mut r);
        let a = temporal_feature_vector(&AttributeMatrix::new(rows.clone()), 0.5).unwrap();
        rows.shuffle(&mut r);
        let b = temporal_feature_vector(&AttributeMatrix::new(rows), 0.5).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn scaling_an_au_column(seed in any::<u64>(), c in 0.01f64..=1.0, col in 0usize..12) {
        let mut r = common::rng(seed);
        let rows = common::random_stream(&mut r);
        let scaled: Vec<_> = rows.iter().map(|row| { let mut v = *row; v[col] *= c; v }).collect();
        let a = temporal_feature_vector(&AttributeMatrix::new(rows), 0.5).unwrap();
        let b = temporal_feature_vector(&AttributeMatrix::new(scaled), 0.5).unwrap();
        prop_assert!((b.mean()[col] - c * a.mean()[col]).abs() <= 1e-12);
        prop_assert!((b.std()[col] - c * a.std()[col]).abs() <= 1e-12);
        prop_assert!(b.activation()[col] <= a.activation()[col]);
    }

    #[test]
    fn ranges_hold(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let t = temporal_feature_vector(&AttributeMatrix::new(common::random_stream(&mut r)), 0.5).unwrap();
        prop_assert!(t.as_slice().iter().all(|v| v.is_finite()));
        prop_assert!(t.std().iter().all(|&s| s >= 0.0));
        prop_assert!(t.activation().iter().chain([t.p_arousal(), t.p_valence()].iter()).all(|v| (0.0..=1.0).contains(v)));
    }
}
