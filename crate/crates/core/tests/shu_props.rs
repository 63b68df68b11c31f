mod common;

use common::*;
use proptest::prelude::*;
use shu_core::fft::{forward_rfft2, hermitian_part, inverse_rfft2};
use shu_core::hefilter::{hefilter_apply, FilterMode, HeFilterParams};
use shu_core::rng::CounterRng;
use shu_core::shu::{
    channel_mix, inject_hints, shu_forward, shu_hints, spectral_transform, split_relu, ChannelMix,
    MixMode, PyramidConfig, ShuParams,
};
use shu_core::split::{pyramid_merge, SplitKind, SplitPyramid};
use shu_core::tensor::{SpatialTensor, SpectralTensor};
use shu_core::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_params(seed: u64, n: usize, k: usize, mix: MixMode, filter: FilterMode) -> ShuParams {
    let mut rng = CounterRng::new(seed);
    let mix = match mix {
        MixMode::Complex => ChannelMix::complex(
            k,
            (0..k * k)
                .map(|_| c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
                .collect(),
        ),
        MixMode::Stacked => {
            ChannelMix::stacked(k, (0..4 * k * k).map(|_| rng.uniform(-1.0, 1.0)).collect())
        }
    }
    .unwrap();
    let per = if filter == FilterMode::Diagonal {
        k
    } else {
        k * k
    };
    let anchors = (0..6 * per)
        .map(|_| c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
        .collect();
    let hef = HeFilterParams::new(3, 2, k, filter, anchors).unwrap();
    ShuParams::new(n, mix, hef, None).unwrap()
}

/// Per-bin matrix-vector products written out directly.
fn mix_oracle(s: &SpectralTensor, mix: &ChannelMix) -> SpectralTensor {
    let (k, h, half) = s.dims();
    SpectralTensor::from_fn(k, h, half, |a, i, j| match mix {
        ChannelMix::Complex { weights, .. } => {
            (0..k).map(|b| weights[a * k + b] * s.get(b, i, j)).sum()
        }
        ChannelMix::Stacked { weights, .. } => {
            let n = 2 * k;
            let v: Vec<f64> = (0..k)
                .map(|b| s.get(b, i, j).re)
                .chain((0..k).map(|b| s.get(b, i, j).im))
                .collect();
            let row = |r: usize| (0..n).map(|q| weights[r * n + q] * v[q]).sum::<f64>();
            c(row(a), row(k + a))
        }
    })
    .unwrap()
}

#[test]
fn channel_mix_matches_per_bin_oracle() {
    for (seed, mode) in [(1, MixMode::Complex), (2, MixMode::Stacked)] {
        let p = random_params(seed, 2, 2, mode, FilterMode::Diagonal);
        let s = random_spectral(seed + 10, 2, 4, 3);
        let err = channel_mix(&s, p.mix())
            .unwrap()
            .max_abs_diff(&mix_oracle(&s, p.mix()))
            .unwrap();
        assert!(err <= 1e-13, "{mode:?}: {err}");
    }
}

#[test]
fn split_relu_examples() {
    let s = SpectralTensor::new(
        1,
        2,
        2,
        vec![c(3.0, -2.0), c(-1.0, -4.0), c(0.5, 2.0), c(-0.0, 7.0)],
    )
    .unwrap();
    let r = split_relu(&s);
    assert_eq!(
        r.data(),
        &[c(3.0, 0.0), c(0.0, 0.0), c(0.5, 2.0), c(0.0, 7.0)]
    );
    let neg =
        SpectralTensor::from_fn(1, 4, 3, |_, i, j| c(-1.0 - i as f64, -0.5 - j as f64)).unwrap();
    assert!(split_relu(&neg).data().iter().all(|v| *v == c(0.0, 0.0)));
    let pos = SpectralTensor::from_fn(1, 4, 3, |_, i, j| c(i as f64, j as f64)).unwrap();
    assert_eq!(split_relu(&pos), pos);
}

#[test]
fn composition_oracle() {
    for (mix, filter) in [
        (MixMode::Complex, FilterMode::Diagonal),
        (MixMode::Stacked, FilterMode::FullMatrix),
    ] {
        let p = random_params(21, 4, 2, mix, filter);
        let x = random_spatial(22, 4, 16, 16);
        let got = shu_forward(&x, &p).unwrap();
        let hint = x.slice_channels(2..4).unwrap();
        let f = inverse_rfft2(
            &hefilter_apply(
                &split_relu(&mix_oracle(&forward_rfft2(&hint).unwrap(), p.mix())),
                p.hefilter(),
            )
            .unwrap(),
            16,
        )
        .unwrap();
        let want = SpatialTensor::concat_channels(&[
            &x.slice_channels(0..2).unwrap(),
            &hint.add(&f).unwrap(),
        ])
        .unwrap();
        assert!(got.max_abs_diff(&want).unwrap() <= 1e-12);
    }
}

#[test]
fn zero_mix_is_exact_identity() {
    for (n, k) in [(1, 1), (4, 2), (3, 3), (32, 32)] {
        let p = ShuParams::zero_init(n, k, MixMode::Complex, FilterMode::Diagonal).unwrap();
        let x = random_spatial(n as u64, n, 8, 8);
        let y = shu_forward(&x, &p).unwrap();
        assert!(y
            .data()
            .iter()
            .zip(x.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn non_negative_spectrum_doubles() {
    // impulse plus offset: every spectral component is real and positive
    let x = SpatialTensor::from_fn(2, 8, 8, |ch, i, j| {
        if (i, j) == (0, 0) {
            3.0 + ch as f64
        } else {
            0.25
        }
    })
    .unwrap();
    assert!(forward_rfft2(&x)
        .unwrap()
        .data()
        .iter()
        .all(|v| v.re >= 0.0 && v.im >= 0.0));
    let p = ShuParams::new(
        2,
        ChannelMix::identity(2, MixMode::Complex).unwrap(),
        HeFilterParams::identity(2, FilterMode::Diagonal).unwrap(),
        None,
    )
    .unwrap();
    let y = shu_forward(&x, &p).unwrap();
    assert!(y.max_abs_diff(&x.scale(2.0)).unwrap() <= 1e-12);
}

#[test]
fn hints_examples() {
    let x = random_spatial(30, 3, 32, 32);
    let cfg = PyramidConfig {
        levels: 4,
        kind: SplitKind::Gaussian,
        sigma_ratio: 0.25,
    };
    let p = random_params(31, 3, 2, MixMode::Complex, FilterMode::Diagonal).with_pyramid(Some(cfg));
    let hints = shu_hints(&x, &p).unwrap();
    assert_eq!(hints.resolutions(), vec![32, 16, 8, 4]);
    let g = spectral_transform(
        &forward_rfft2(&x.slice_channels(1..3).unwrap()).unwrap(),
        &p,
    )
    .unwrap();
    assert!(
        pyramid_merge(&hints)
            .unwrap()
            .max_abs_diff(&hermitian_part(&g))
            .unwrap()
            <= 1e-12
    );

    let one = p.with_pyramid(Some(PyramidConfig { levels: 1, ..cfg }));
    let single = shu_hints(&x, &one).unwrap();
    let f = shu_forward(&x, &one)
        .unwrap()
        .sub(&x)
        .unwrap()
        .slice_channels(1..3)
        .unwrap();
    assert!(single.levels[0].max_abs_diff(&f).unwrap() <= 1e-12);

    let zero = ShuParams::zero_init(3, 2, MixMode::Complex, FilterMode::Diagonal)
        .unwrap()
        .with_pyramid(Some(cfg));
    assert!(shu_hints(&x, &zero)
        .unwrap()
        .levels
        .iter()
        .all(|l| l.data().iter().all(|v| *v == 0.0)));
    assert!(shu_hints(&x, &p.with_pyramid(None)).is_err());
    let bad = random_spatial(1, 3, 12, 12);
    assert!(shu_hints(&bad, &p).is_err());
}

fn hint_pyramid(seed: u64, k: usize, levels: usize) -> SplitPyramid {
    let maps = (0..levels)
        .map(|n| random_spatial(seed + n as u64, k, 16 >> n, 16 >> n))
        .collect();
    SplitPyramid {
        kind: SplitKind::Gaussian,
        sigma_ratio: 0.25,
        source_dims: (k, 16, 16),
        levels: maps,
    }
}

#[test]
fn inject_hints_examples() {
    let features: Vec<SpatialTensor> = [16, 8, 4]
        .iter()
        .map(|&r| random_spatial(r as u64, 3, r, r))
        .collect();
    let hints = hint_pyramid(50, 2, 3);
    let zero_hints = SplitPyramid {
        levels: hints
            .levels
            .iter()
            .map(|l| SpatialTensor::zeros(2, l.height(), l.width()).unwrap())
            .collect(),
        ..hints.clone()
    };
    assert_eq!(inject_hints(&features, &zero_hints).unwrap(), features);

    let zero_features: Vec<SpatialTensor> = features
        .iter()
        .map(|f| SpatialTensor::zeros(3, f.height(), f.width()).unwrap())
        .collect();
    let injected = inject_hints(&zero_features, &hints).unwrap();
    for (out, hint) in injected.iter().zip(&hints.levels) {
        let (h, w) = (hint.height(), hint.width());
        let padded =
            SpatialTensor::concat_channels(&[hint, &SpatialTensor::zeros(1, h, w).unwrap()])
                .unwrap();
        assert_eq!(out, &padded);
    }

    let alpha = 0.375;
    let scaled_f: Vec<SpatialTensor> = features.iter().map(|f| f.scale(alpha)).collect();
    let scaled_h = SplitPyramid {
        levels: hints.levels.iter().map(|l| l.scale(alpha)).collect(),
        ..hints.clone()
    };
    let lhs = inject_hints(&scaled_f, &scaled_h).unwrap();
    let rhs: Vec<SpatialTensor> = inject_hints(&features, &hints)
        .unwrap()
        .iter()
        .map(|f| f.scale(alpha))
        .collect();
    for (l, r) in lhs.iter().zip(&rhs) {
        assert!(l.max_abs_diff(r).unwrap() <= 1e-15);
    }

    assert!(inject_hints(&features[..2], &hints).is_err());
    let thin: Vec<SpatialTensor> = features
        .iter()
        .map(|f| f.slice_channels(0..1).unwrap())
        .collect();
    assert!(inject_hints(&thin, &hints).is_err());
}

#[test]
fn param_validation() {
    assert!(ShuParams::zero_init(2, 3, MixMode::Complex, FilterMode::Diagonal).is_err());
    assert!(ShuParams::zero_init(2, 0, MixMode::Complex, FilterMode::Diagonal).is_err());
    let p = ShuParams::zero_init(4, 2, MixMode::Complex, FilterMode::Diagonal).unwrap();
    assert!(shu_forward(&random_spatial(1, 3, 8, 8), &p).is_err());
    assert!(ShuParams::new(
        4,
        ChannelMix::zeros(2, MixMode::Complex).unwrap(),
        HeFilterParams::identity(3, FilterMode::Diagonal).unwrap(),
        None
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pass_through_channels_are_bitwise_equal(
        seed in any::<u64>(),
        (n, k) in (1usize..=5).prop_flat_map(|n| (Just(n), 1..=n)),
        (h, w) in (1usize..=8, 1usize..=8),
        stacked in any::<bool>(),
        full in any::<bool>(),
    ) {
        let mix = if stacked { MixMode::Stacked } else { MixMode::Complex };
        let filter = if full { FilterMode::FullMatrix } else { FilterMode::Diagonal };
        let p = random_params(seed, n, k, mix, filter);
        let x = random_spatial(seed ^ 1, n, 2 * h, 2 * w);
        let y = shu_forward(&x, &p).unwrap();
        prop_assert_eq!(y.dims(), x.dims());
        prop_assume!(n > k);
        let keep = x.slice_channels(0..n - k).unwrap();
        let got = y.slice_channels(0..n - k).unwrap();
        prop_assert!(got.data().iter().zip(keep.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn split_relu_is_idempotent(seed in any::<u64>()) {
        let s = random_spectral(seed, 2, 8, 5);
        let once = split_relu(&s);
        prop_assert_eq!(split_relu(&once), once);
    }
}
