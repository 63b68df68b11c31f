//! Independent oracles shared by the integration tests. Nothing here calls
//! the FFT under test.

#![allow(dead_code)]

use std::f64::consts::TAU;

use shu_core::rng::CounterRng;
use shu_core::tensor::{SpatialTensor, SpectralTensor};
use shu_core::Complex64;

pub fn random_spatial(seed: u64, c: usize, h: usize, w: usize) -> SpatialTensor {
    let mut rng = CounterRng::new(seed);
    SpatialTensor::from_fn(c, h, w, |_, _, _| rng.uniform(-1.0, 1.0)).unwrap()
}

pub fn random_spectral(seed: u64, c: usize, h: usize, half: usize) -> SpectralTensor {
    let mut rng = CounterRng::new(seed);
    SpectralTensor::from_fn(c, h, half, |_, _, _| {
        Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
    })
    .unwrap()
}

/// Natural-order frequency held by stored row `r`.
pub fn row_frequency(r: usize, h: usize) -> usize {
    (r + h / 2) % h
}

/// Textbook double-sum DFT bin `X[k, l] = sum x[n, m] exp(-2 pi i (kn/H + lm/W))`.
pub fn naive_dft_bin(x: &SpatialTensor, c: usize, k: usize, l: usize) -> Complex64 {
    let (_, h, w) = x.dims();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..h {
        for m in 0..w {
            // reduce the phase index exactly before converting to an angle
            let phase = ((k * n) % h) as f64 / h as f64 + ((l * m) % w) as f64 / w as f64;
            acc += x.get(c, n, m) * Complex64::from_polar(1.0, -TAU * phase);
        }
    }
    acc
}

/// Row-shifted half spectrum by direct summation.
pub fn naive_rfft2(x: &SpatialTensor) -> SpectralTensor {
    let (c, h, w) = x.dims();
    SpectralTensor::from_fn(c, h, w / 2 + 1, |ch, r, j| {
        naive_dft_bin(x, ch, row_frequency(r, h), j)
    })
    .unwrap()
}

/// Full natural-order spectrum of channel `c` rebuilt from the stored half
/// by conjugate reflection, indexed `[k * W + l]`.
pub fn reflect_full(s: &SpectralTensor, c: usize) -> Vec<Complex64> {
    let (_, h, half) = s.dims();
    let w = s.spatial_width();
    let mut full = vec![Complex64::new(0.0, 0.0); h * w];
    for r in 0..h {
        let k = row_frequency(r, h);
        for j in 0..half {
            full[k * w + j] = s.get(c, r, j);
        }
    }
    for k in 0..h {
        for l in half..w {
            full[k * w + l] = full[((h - k) % h) * w + (w - l)].conj();
        }
    }
    full
}

/// Circular convolution `(x * g)[n, m] = sum x[a, b] g[n - a, m - b]`.
pub fn circular_convolve(x: &SpatialTensor, g: &SpatialTensor) -> SpatialTensor {
    let (c, h, w) = x.dims();
    SpatialTensor::from_fn(c, h, w, |ch, n, m| {
        let mut acc = 0.0;
        for a in 0..h {
            for b in 0..w {
                acc += x.get(ch, a, b) * g.get(ch, (n + h - a) % h, (m + w - b) % w);
            }
        }
        acc
    })
    .unwrap()
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Real inner product on stacked `(re, im)` components.
pub fn spectral_inner(a: &SpectralTensor, b: &SpectralTensor) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

pub fn spatial_inner(a: &SpatialTensor, b: &SpatialTensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}
