mod common;

use std::f64::consts::TAU;

use common::*;
use proptest::prelude::*;
use shu_core::fft::{forward_rfft2, hermitian_part, inverse_rfft2};
use shu_core::split::{
    build_gaussian_map, check_pyramid_dims, gaussian_merge, gaussian_split, pyramid_merge,
    pyramid_split, vanilla_merge, vanilla_split, SplitKind,
};
use shu_core::tensor::{spectral_axpy, SpatialTensor, SpectralTensor};
use shu_core::Complex64;

const DYADIC: [usize; 4] = [8, 16, 32, 64];

/// Trigonometric 2x upsampling by zero padding the full DFT, splitting each
/// Nyquist coefficient evenly between `+/-` frequencies. Direct sums only.
fn trig_upsample(m: &SpatialTensor) -> SpatialTensor {
    let (c, h, w) = m.dims();
    let (bh, bw) = (2 * h, 2 * w);
    let coeffs: Vec<Vec<Complex64>> = (0..c)
        .map(|ch| {
            (0..h * w)
                .map(|kl| naive_dft_bin(m, ch, kl / w, kl % w))
                .collect()
        })
        .collect();
    SpatialTensor::from_fn(c, bh, bw, |ch, n, p| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..h {
            for l in 0..w {
                for (kk, wr) in signed_partners(k, h) {
                    for (ll, wc) in signed_partners(l, w) {
                        let phase = (kk * n as i64).rem_euclid(bh as i64) as f64 / bh as f64
                            + (ll * p as i64).rem_euclid(bw as i64) as f64 / bw as f64;
                        acc += coeffs[ch][k * w + l]
                            * (wr * wc)
                            * Complex64::from_polar(1.0, TAU * phase);
                    }
                }
            }
        }
        // the interpolant sampled at half steps: 4 * (inverse DFT of size 2h x 2w)
        4.0 * acc.re / (bh * bw) as f64
    })
    .unwrap()
}

fn signed_partners(k: usize, n: usize) -> Vec<(i64, f64)> {
    let half = n / 2;
    if k == half {
        vec![(half as i64, 0.5), (-(half as i64), 0.5)]
    } else if k < half {
        vec![(k as i64, 1.0)]
    } else {
        vec![(k as i64 - n as i64, 1.0)]
    }
}

fn pyramid_oracle_sum(levels: &[SpatialTensor]) -> SpatialTensor {
    let mut acc = levels.last().unwrap().clone();
    for level in levels.iter().rev().skip(1) {
        acc = level.add(&trig_upsample(&acc).scale(0.25)).unwrap();
    }
    acc
}

fn impulse(h: usize, half: usize, at: (usize, usize)) -> SpectralTensor {
    SpectralTensor::from_fn(1, h, half, |_, i, j| {
        if (i, j) == at {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
    .unwrap()
}

#[test]
fn merge_inverts_split_all_dyadic_sizes() {
    let mut seed = 0;
    for h in DYADIC {
        for w in DYADIC {
            for c in 1..=4 {
                seed += 1;
                let s = random_spectral(seed, c, h, w / 2 + 1);
                let (hi, lo) = vanilla_split(&s).unwrap();
                assert_eq!(lo.dims(), (c, h / 2, w / 4 + 1));
                assert_eq!(vanilla_merge(&hi, &lo).unwrap(), s, "vanilla {c}x{h}x{w}");
                for factor in [0.5, 2.0, 8.0, 1e9] {
                    let sigma = factor * h as f64 / 4.0;
                    let (hi, lo) = gaussian_split(&s, sigma).unwrap();
                    let err = gaussian_merge(&hi, &lo).unwrap().max_abs_diff(&s).unwrap();
                    assert!(err <= 1e-12, "gaussian {c}x{h}x{w} sigma {sigma}: {err}");
                }
            }
        }
    }
}

#[test]
fn split_examples() {
    let (hi, lo) = vanilla_split(&impulse(8, 5, (4, 0))).unwrap();
    assert_eq!(hi.get(0, 4, 0), Complex64::new(0.0, 0.0));
    assert_eq!(lo.get(0, 2, 0), Complex64::new(1.0, 0.0));
    let corner = impulse(8, 5, (0, 4));
    let (hi, lo) = vanilla_split(&corner).unwrap();
    assert_eq!(hi, corner);
    assert!(lo.data().iter().all(|v| v.norm() == 0.0));

    let s = random_spectral(3, 1, 16, 9);
    let (hi, lo) = gaussian_split(&s, 2.0).unwrap();
    assert_eq!(hi.get(0, 8, 0), Complex64::new(0.0, 0.0));
    assert_eq!(lo.get(0, 4, 0), s.get(0, 8, 0));
    let (hi, lo) = gaussian_split(&s, 1e-9).unwrap();
    for i in 0..16 {
        for j in 0..9 {
            if (i, j) != (8, 0) {
                assert_eq!(hi.get(0, i, j), s.get(0, i, j));
            }
        }
    }
    assert_eq!(lo.stored_energy(), s.get(0, 8, 0).norm_sqr());
}

#[test]
fn gaussian_map_examples() {
    let m = build_gaussian_map(16, 16, false, 3.0).unwrap();
    assert_eq!((m.height(), m.width()), (16, 9));
    assert_eq!(m.get(8, 0), 1.0);
    assert!((m.get(8, 3) - (-0.5f64).exp()).abs() < 1e-15);
    assert!((m.get(5, 0) - (-0.5f64).exp()).abs() < 1e-15);
    let flat = build_gaussian_map(16, 16, false, 1e9).unwrap();
    assert!(flat.values().iter().all(|v| (v - 1.0).abs() <= 1e-9));
    let block = build_gaussian_map(16, 16, true, 3.0).unwrap();
    assert_eq!((block.height(), block.width()), (8, 5));
    assert_eq!(block.get(4, 0), 1.0);
    for i in 0..8 {
        for j in 0..5 {
            assert_eq!(block.get(i, j), m.get(i + 4, j));
        }
    }
    assert!(build_gaussian_map(16, 16, false, 0.0).is_err());
    assert!(build_gaussian_map(16, 16, false, -1.0).is_err());
}

#[test]
fn gaussian_map_is_radially_non_increasing() {
    let m = build_gaussian_map(32, 32, false, 4.0).unwrap();
    let mut pairs: Vec<(usize, f64)> = (0..32)
        .flat_map(|i| (0..17).map(move |j| (i, j)))
        .map(|(i, j)| {
            (
                ((i as i64 - 16).pow(2) + (j as i64).pow(2)) as usize,
                m.get(i, j),
            )
        })
        .collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
    assert!(pairs.windows(2).all(|w| w[1].1 <= w[0].1));
}

#[test]
fn pyramid_matches_trigonometric_reconstruction_oracle() {
    for (h, levels, kind) in [
        (16, 3, SplitKind::Gaussian),
        (16, 3, SplitKind::Vanilla),
        (32, 4, SplitKind::Gaussian),
    ] {
        let x = random_spatial(h as u64 + levels as u64, 2, h, h);
        let p = pyramid_split(&forward_rfft2(&x).unwrap(), levels, kind, 0.25).unwrap();
        let res: Vec<usize> = p.levels.iter().map(|l| l.height()).collect();
        assert_eq!(res, (0..levels).map(|n| h >> n).collect::<Vec<_>>());
        let sum = pyramid_oracle_sum(&p.levels);
        let err = sum.max_abs_diff(&x).unwrap();
        assert!(err <= 1e-12, "{h} {kind}: {err}");
    }
}

#[test]
fn two_level_hi_map_is_difference_of_signal_and_upsampled_lo() {
    for kind in [SplitKind::Gaussian, SplitKind::Vanilla] {
        let x = random_spatial(41, 1, 16, 16);
        let p = pyramid_split(&forward_rfft2(&x).unwrap(), 2, kind, 0.25).unwrap();
        let lo_up = trig_upsample(&p.levels[1]).scale(0.25);
        let err = p.levels[0].max_abs_diff(&x.sub(&lo_up).unwrap()).unwrap();
        assert!(err <= 1e-12, "{kind}: {err}");
    }
}

#[test]
fn default_ladder_and_single_level() {
    let x = random_spatial(9, 1, 64, 64);
    let s = forward_rfft2(&x).unwrap();
    let p = pyramid_split(&s, 5, SplitKind::Gaussian, 0.25).unwrap();
    assert_eq!(p.resolutions(), vec![64, 32, 16, 8, 4]);
    assert!(pyramid_merge(&p).unwrap().max_abs_diff(&s).unwrap() <= 1e-12);

    let one = pyramid_split(&s, 1, SplitKind::Gaussian, 0.25).unwrap();
    assert_eq!(one.levels.len(), 1);
    assert_eq!(one.levels[0], inverse_rfft2(&s, 64).unwrap());

    let zero = pyramid_split(
        &SpectralTensor::zeros(2, 16, 9).unwrap(),
        3,
        SplitKind::Vanilla,
        0.25,
    )
    .unwrap();
    assert!(pyramid_merge(&zero)
        .unwrap()
        .data()
        .iter()
        .all(|v| v.norm() == 0.0));
}

#[test]
fn pyramid_merge_of_arbitrary_spectrum_is_its_real_signal_part() {
    let s = random_spectral(12, 2, 32, 17);
    for kind in [SplitKind::Gaussian, SplitKind::Vanilla] {
        let p = pyramid_split(&s, 4, kind, 0.25).unwrap();
        let err = pyramid_merge(&p)
            .unwrap()
            .max_abs_diff(&hermitian_part(&s))
            .unwrap();
        assert!(err <= 1e-12, "{kind}: {err}");
    }
}

#[test]
fn pyramid_dimension_errors() {
    assert!(check_pyramid_dims(64, 64, 5).is_ok());
    assert!(check_pyramid_dims(64, 64, 6).is_err());
    assert!(check_pyramid_dims(12, 12, 3).is_err());
    assert!(check_pyramid_dims(8, 8, 0).is_err());
    let s = random_spectral(1, 1, 12, 7);
    assert!(pyramid_split(&s, 3, SplitKind::Vanilla, 0.25).is_err());
    assert!(pyramid_split(&random_spectral(1, 1, 16, 9), 2, SplitKind::Gaussian, 0.0).is_err());
}

/// Cosine with row frequency `p` and column frequency `q`.
fn cosine(h: usize, w: usize, p: usize, q: usize) -> SpatialTensor {
    SpatialTensor::from_fn(1, h, w, |_, i, j| {
        (TAU * ((p * i) as f64 / h as f64 + (q * j) as f64 / w as f64)).cos()
    })
    .unwrap()
}

#[test]
fn low_cosines_route_to_lo() {
    let (h, w) = (64, 64);
    for p in 0..h / 8 {
        for q in 0..w / 8 {
            let s = forward_rfft2(&cosine(h, w, p, q)).unwrap();
            let (_, lo) = vanilla_split(&s).unwrap();
            let frac = lo.stored_energy() / s.stored_energy();
            assert!(frac >= 0.99, "({p},{q}): {frac}");
        }
    }
}

#[test]
fn high_cosines_route_to_hi() {
    let (h, w) = (32, 32);
    for p in 0..=h / 2 {
        for q in 0..=w / 2 {
            if p <= h / 4 && q <= w / 4 {
                continue;
            }
            // synthesized spectrum: exact block membership
            let half = w / 2 + 1;
            let rows = [(h / 2 + p) % h, (h / 2 + h - p) % h];
            let synth = SpectralTensor::from_fn(1, h, half, |_, i, j| {
                if j == q && rows.contains(&i) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .unwrap();
            let (hi, lo) = vanilla_split(&synth).unwrap();
            assert_eq!(hi, synth, "({p},{q})");
            assert!(lo.data().iter().all(|v| v.norm() == 0.0));

            // FFT-generated: only rounding noise reaches the block
            let s = forward_rfft2(&cosine(h, w, p, q)).unwrap();
            let (_, lo) = vanilla_split(&s).unwrap();
            assert!(lo.stored_energy() <= 1e-24 * s.stored_energy(), "({p},{q})");
        }
    }
}

#[test]
fn spectral_gaussian_equals_circular_convolution() {
    for (h, w) in [(4, 4), (8, 16), (16, 8), (32, 32)] {
        let x = random_spatial((h * w) as u64, 2, h, w);
        for sigma in [0.7, 2.0, 5.0] {
            let map = build_gaussian_map(h, w, false, sigma)
                .unwrap()
                .to_spectrum(2)
                .unwrap();
            let kernel = inverse_rfft2(&map, w).unwrap();
            let sx = forward_rfft2(&x).unwrap();
            let product = SpectralTensor::from_fn(2, h, w / 2 + 1, |c, i, j| {
                sx.get(c, i, j) * map.get(c, i, j)
            })
            .unwrap();
            let spectral = inverse_rfft2(&product, w).unwrap();
            let spatial = circular_convolve(&x, &kernel);
            let err = spectral.max_abs_diff(&spatial).unwrap();
            assert!(err <= 1e-10, "{h}x{w} sigma {sigma}: {err}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn splits_are_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0, sigma in 0.5f64..20.0) {
        let s1 = random_spectral(seed, 2, 16, 9);
        let s2 = random_spectral(seed.wrapping_add(7), 2, 16, 9);
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let mix = spectral_axpy(ca, &s1, cb, &s2).unwrap();
        for f in [vanilla_split as fn(&SpectralTensor) -> _, |s: &SpectralTensor| gaussian_split(s, 3.0)] {
            let (h, l) = f(&mix).unwrap();
            let (h1, l1) = f(&s1).unwrap();
            let (h2, l2) = f(&s2).unwrap();
            prop_assert!(h.max_abs_diff(&spectral_axpy(ca, &h1, cb, &h2).unwrap()).unwrap() <= 1e-12);
            prop_assert!(l.max_abs_diff(&spectral_axpy(ca, &l1, cb, &l2).unwrap()).unwrap() <= 1e-12);
        }
        let (_, lo) = gaussian_split(&s1, sigma).unwrap();
        prop_assert_eq!(lo.dims(), (2, 8, 5));
    }

    #[test]
    fn pyramid_round_trip_real_signals(
        seed in any::<u64>(),
        (h, w) in (0usize..3, 0usize..3).prop_map(|(a, b)| (16 << a, 16 << b)),
        c in 1usize..=3,
        levels in 1usize..=3,
        vanilla in any::<bool>(),
        ratio in 0.05f64..2.0,
    ) {
        let kind = if vanilla { SplitKind::Vanilla } else { SplitKind::Gaussian };
        let s = forward_rfft2(&random_spatial(seed, c, h, w)).unwrap();
        let p = pyramid_split(&s, levels, kind, ratio).unwrap();
        prop_assert!(pyramid_merge(&p).unwrap().max_abs_diff(&s).unwrap() <= 1e-12);
    }
}
