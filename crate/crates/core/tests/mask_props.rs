mod common;

use common::*;
use proptest::prelude::*;
use shu_core::mask::{apply_mask, generate_mask, generate_masks, mask_statistics, Mask, MaskSpec};
use shu_core::tensor::SpatialTensor;

#[test]
fn identical_seeds_give_identical_masks() {
    for seed in [0, 1, 42, u64::MAX] {
        let spec = MaskSpec::new(256, 256, seed);
        assert_eq!(generate_mask(&spec).unwrap(), generate_mask(&spec).unwrap());
    }
    let a = generate_mask(&MaskSpec::new(256, 256, 0)).unwrap();
    let b = generate_mask(&MaskSpec::new(256, 256, 1)).unwrap();
    assert_ne!(a.values(), b.values());
}

#[test]
fn batch_generation_matches_single_masks() {
    let spec = MaskSpec::new(128, 96, 0);
    let seeds: Vec<u64> = (100..117).collect();
    let batch = generate_masks(&spec, &seeds).unwrap();
    for (mask, seed) in batch.iter().zip(&seeds) {
        assert_eq!(mask, &generate_mask(&spec.with_seed(*seed)).unwrap());
    }
    assert!(generate_masks(&spec, &[]).unwrap().is_empty());
}

#[test]
fn empty_count_ranges_leave_everything_known() {
    let spec = MaskSpec {
        stroke_count_range: (0, 0),
        full_rect_count_range: (0, 0),
        half_rect_count_range: (0, 0),
        ..MaskSpec::new(64, 80, 9)
    };
    let m = generate_mask(&spec).unwrap();
    assert!(m.values().iter().all(|v| *v == 1));
    assert_eq!(m.unknown_fraction(), 0.0);
    let p = m.provenance().unwrap();
    assert_eq!((p.stroke_count(), p.full_rects, p.half_rects), (0, 0, 0));
}

#[test]
fn forced_full_rectangle_erases_something() {
    let spec = MaskSpec {
        stroke_count_range: (0, 0),
        full_rect_count_range: (1, 1),
        half_rect_count_range: (0, 0),
        ..MaskSpec::new(64, 64, 3)
    };
    for seed in 0..20 {
        let m = generate_mask(&spec.with_seed(seed)).unwrap();
        let unknown = m.values().iter().filter(|v| **v == 0).count();
        assert!(unknown >= 1);
        // one rectangle: the unknown pixels form a filled box
        let rows: Vec<usize> = (0..64)
            .filter(|&i| (0..64).any(|j| m.get(i, j) == 0))
            .collect();
        let cols: Vec<usize> = (0..64)
            .filter(|&j| (0..64).any(|i| m.get(i, j) == 0))
            .collect();
        assert_eq!(unknown, rows.len() * cols.len());
        assert_eq!(rows.last().unwrap() - rows[0] + 1, rows.len());
    }
}

#[test]
fn statistics_stay_inside_configured_ranges() {
    let spec = MaskSpec::new(256, 256, 0);
    let seeds: Vec<u64> = (0..1000).collect();
    let stats = mask_statistics(&generate_masks(&spec, &seeds).unwrap()).unwrap();
    assert!(stats.strictly_binary);
    assert_eq!(stats.unknown_fractions.len(), 1000);
    let within =
        |r: Option<(u32, u32)>, lo: u32, hi: u32| matches!(r, Some((a, b)) if a >= lo && b <= hi);
    assert!(within(stats.stroke_width, 12, 48));
    assert!(within(stats.stroke_count, 0, 20));
    assert!(within(stats.full_rects, 0, 5));
    assert!(within(stats.half_rects, 0, 10));
    // a thousand draws reach both ends of every count range
    assert_eq!(stats.stroke_count, Some((0, 20)));
    assert_eq!(stats.full_rects, Some((0, 5)));
    assert_eq!(stats.half_rects, Some((0, 10)));
    assert!(stats
        .unknown_fractions
        .iter()
        .all(|f| (0.0..=1.0).contains(f)));
}

#[test]
fn statistics_merge_concatenates() {
    let spec = MaskSpec::new(64, 64, 0);
    let a = generate_masks(&spec, &[0, 1, 2]).unwrap();
    let b = generate_masks(&spec, &[3, 4]).unwrap();
    let mut merged = mask_statistics(&a).unwrap();
    merged.merge(&mask_statistics(&b).unwrap());
    let all: Vec<Mask> = a.into_iter().chain(b).collect();
    assert_eq!(merged, mask_statistics(&all).unwrap());
    assert!(mask_statistics(&[]).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(generate_mask(&MaskSpec::new(32, 256, 0)).is_err());
    let spec = MaskSpec {
        stroke_width_range: (10, 5),
        ..MaskSpec::new(64, 64, 0)
    };
    assert!(generate_mask(&spec).is_err());
}

#[test]
fn apply_mask_examples() {
    let x = random_spatial(1, 3, 4, 4);
    assert_eq!(apply_mask(&x, &Mask::ones(4, 4)).unwrap(), x);
    let zeros = Mask::new(4, 4, vec![0; 16]).unwrap();
    assert!(apply_mask(&x, &zeros)
        .unwrap()
        .data()
        .iter()
        .all(|v| *v == 0.0));
    let checker = Mask::new(4, 4, (0..16).map(|n| ((n / 4 + n % 4) % 2) as u8).collect()).unwrap();
    let y = apply_mask(&x, &checker).unwrap();
    for ch in 0..3 {
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i + j) % 2 == 1 {
                    x.get(ch, i, j)
                } else {
                    0.0
                };
                assert_eq!(y.get(ch, i, j), want);
            }
        }
    }
    assert!(apply_mask(&SpatialTensor::zeros(1, 4, 6).unwrap(), &checker).is_err());
    assert!(Mask::new(2, 2, vec![0, 1, 2, 1]).is_err());
    assert!(Mask::new(2, 2, vec![0, 1, 1]).is_err());
}

#[test]
fn sample_encoding() {
    let m = Mask::from_samples(1, 4, &[0, 127, 128, 255]).unwrap();
    assert_eq!(m.values(), &[0, 0, 1, 1]);
    assert_eq!(m.to_samples(), vec![0, 0, 255, 255]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn masks_are_binary_and_sized(seed in any::<u64>(), h in 64usize..=160, w in 64usize..=160) {
        let m = generate_mask(&MaskSpec::new(h, w, seed)).unwrap();
        prop_assert_eq!((m.height(), m.width()), (h, w));
        prop_assert!(m.values().iter().all(|v| *v <= 1));
        let p = m.provenance().unwrap();
        prop_assert_eq!(p.stroke_widths.len(), p.stroke_vertices.len());
        prop_assert!(p.stroke_vertices.iter().all(|v| (4..=12).contains(v)));
        let decoded = Mask::from_samples(h, w, &m.to_samples()).unwrap();
        prop_assert_eq!(decoded.values(), m.values());
    }

    #[test]
    fn masking_is_idempotent(seed in any::<u64>()) {
        let m = generate_mask(&MaskSpec::new(64, 64, seed)).unwrap();
        let x = random_spatial(seed, 2, 64, 64);
        let once = apply_mask(&x, &m).unwrap();
        prop_assert_eq!(apply_mask(&once, &m).unwrap(), once.clone());
        for (n, v) in once.data().iter().enumerate() {
            let known = m.values()[n % (64 * 64)] == 1;
            let want = if known { x.data()[n] } else { 0.0 };
            prop_assert_eq!(*v, want);
        }
    }
}
