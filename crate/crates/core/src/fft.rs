//! 2D real FFT in the row-shifted half-spectrum layout.
//!
//! Forward transforms are unnormalized (the DC bin is the sum of all
//! samples); the inverse applies `1 / (H * W)`. Row and column passes use
//! `rustfft` complex transforms.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::{SpatialTensor, SpectralTensor};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

struct Plans {
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn forward(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            row: planner.plan_fft_forward(width),
            col: planner.plan_fft_forward(height),
        }
    }

    fn inverse(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            row: planner.plan_fft_inverse(width),
            col: planner.plan_fft_inverse(height),
        }
    }
}

/// Forward 2D real DFT of every channel.
pub fn forward_rfft2(x: &SpatialTensor) -> Result<SpectralTensor> {
    let (channels, height, width) = x.dims();
    if height % 2 != 0 || width % 2 != 0 {
        return Err(Error::shape(format!(
            "FFT requires even dims, got {height}x{width}"
        )));
    }
    let half = width / 2 + 1;
    let plans = Plans::forward(height, width);
    let mut out = vec![ZERO; channels * height * half];
    let mut row = vec![ZERO; width];
    let mut col = vec![ZERO; height];
    for c in 0..channels {
        let plane = x.channel(c);
        let dst = &mut out[c * height * half..(c + 1) * height * half];
        // Rows: real input, keep the non-redundant half. Stored unshifted
        // until the column pass.
        for i in 0..height {
            for (v, &s) in row.iter_mut().zip(&plane[i * width..(i + 1) * width]) {
                *v = Complex64::new(s, 0.0);
            }
            plans.row.process(&mut row);
            dst[i * half..(i + 1) * half].copy_from_slice(&row[..half]);
        }
        for j in 0..half {
            for (i, v) in col.iter_mut().enumerate() {
                *v = dst[i * half + j];
            }
            plans.col.process(&mut col);
            for (k, v) in col.iter().enumerate() {
                dst[((k + height / 2) % height) * half + j] = *v;
            }
        }
    }
    Ok(SpectralTensor::from_parts(channels, height, width, out))
}

/// Inverse of [`forward_rfft2`] producing a `target_width`-wide signal.
///
/// Columns `1..W/2` are mirrored by conjugate reflection; the DC and Nyquist
/// columns are taken as stored and the real part of the result is returned.
/// For spectra of real signals this is the exact inverse.
pub fn inverse_rfft2(s: &SpectralTensor, target_width: usize) -> Result<SpatialTensor> {
    let (channels, height, half) = s.dims();
    if !target_width.is_multiple_of(2) || target_width / 2 + 1 != half {
        return Err(Error::shape(format!(
            "target width {target_width} inconsistent with {half} stored columns"
        )));
    }
    let width = target_width;
    let plans = Plans::inverse(height, width);
    let norm = 1.0 / (height * width) as f64;
    let mut out = vec![0.0; channels * height * width];
    let mut work = vec![ZERO; height * half];
    let mut col = vec![ZERO; height];
    let mut row = vec![ZERO; width];
    for c in 0..channels {
        let src = s.channel(c);
        for j in 0..half {
            for (k, v) in col.iter_mut().enumerate() {
                *v = src[((k + height / 2) % height) * half + j];
            }
            plans.col.process(&mut col);
            for (i, v) in col.iter().enumerate() {
                work[i * half + j] = *v;
            }
        }
        let dst = &mut out[c * height * width..(c + 1) * height * width];
        for i in 0..height {
            let src_row = &work[i * half..(i + 1) * half];
            row[..half].copy_from_slice(src_row);
            for j in 1..width / 2 {
                row[width - j] = src_row[j].conj();
            }
            plans.row.process(&mut row);
            for (d, v) in dst[i * width..(i + 1) * width].iter_mut().zip(&row) {
                *d = v.re * norm;
            }
        }
    }
    Ok(SpatialTensor::from_parts(channels, height, width, out))
}

/// Multiplicity of stored column `j` in the full spectrum: 1 for the DC and
/// Nyquist columns, 2 for interior columns.
pub fn column_multiplicity(j: usize, spatial_width: usize) -> f64 {
    if j == 0 || j == spatial_width / 2 {
        1.0
    } else {
        2.0
    }
}

/// Gradient with respect to the stored spectrum of a loss on the output of
/// [`inverse_rfft2`], given the spatial gradient `upstream`.
pub fn inverse_rfft2_backward(upstream: &SpatialTensor) -> Result<SpectralTensor> {
    let g = forward_rfft2(upstream)?;
    let width = g.spatial_width();
    let norm = 1.0 / (g.height() * width) as f64;
    let half = g.spec_width();
    let mut data = g.into_data();
    for (idx, v) in data.iter_mut().enumerate() {
        *v *= column_multiplicity(idx % half, width) * norm;
    }
    Ok(SpectralTensor::from_parts(
        upstream.channels(),
        upstream.height(),
        width,
        data,
    ))
}

/// Gradient with respect to the spatial input of a loss on the output of
/// [`forward_rfft2`], given the spectral gradient `upstream` (real part holds
/// the derivative with respect to the real component, imaginary part the one
/// with respect to the imaginary component).
pub fn forward_rfft2_backward(upstream: &SpectralTensor) -> Result<SpatialTensor> {
    let width = upstream.spatial_width();
    let half = upstream.spec_width();
    let scale = (upstream.height() * width) as f64;
    let data = upstream
        .data()
        .iter()
        .enumerate()
        .map(|(idx, v)| v * (scale / column_multiplicity(idx % half, width)))
        .collect();
    let weighted = SpectralTensor::from_parts(upstream.channels(), upstream.height(), width, data);
    inverse_rfft2(&weighted, width)
}

/// Projection of a half spectrum onto the spectra of real signals, i.e.
/// `forward_rfft2(inverse_rfft2(s))`, computed directly.
///
/// Only the DC and Nyquist columns change: each bin becomes the average of
/// itself and the conjugate of its row-mirrored partner.
pub fn hermitian_part(s: &SpectralTensor) -> SpectralTensor {
    let (channels, height, half) = s.dims();
    let mut data = s.data().to_vec();
    for c in 0..channels {
        let plane = &mut data[c * height * half..(c + 1) * height * half];
        for j in [0, half - 1] {
            let column: Vec<Complex64> = (0..height).map(|r| plane[r * half + j]).collect();
            for r in 0..height {
                let mirror = (height - r) % height;
                plane[r * half + j] = (column[r] + column[mirror].conj()) * 0.5;
            }
        }
    }
    SpectralTensor::from_parts(channels, height, s.spatial_width(), data)
}

/// Reconstitutes the full `H x W` spectrum of one channel in natural
/// (unshifted) order, indexed `[k * W + l]`.
pub fn full_spectrum(s: &SpectralTensor, channel: usize) -> Vec<Complex64> {
    let (height, half) = (s.height(), s.spec_width());
    let width = s.spatial_width();
    let plane = s.channel(channel);
    let stored = |k: usize, l: usize| plane[((k + height / 2) % height) * half + l];
    let mut full = vec![ZERO; height * width];
    for k in 0..height {
        for l in 0..width {
            full[k * width + l] = if l < half {
                stored(k, l)
            } else {
                stored((height - k) % height, width - l).conj()
            };
        }
    }
    full
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_tensor(channels: usize, h: usize, w: usize, seed: u64) -> SpatialTensor {
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        SpatialTensor::from_fn(channels, h, w, |_, _, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .unwrap()
    }

    #[test]
    fn constant_image_has_only_dc() {
        let x = SpatialTensor::new(1, 4, 4, vec![1.0; 16]).unwrap();
        let s = forward_rfft2(&x).unwrap();
        assert_eq!(s.dims(), (1, 4, 3));
        for i in 0..4 {
            for j in 0..3 {
                let v = s.get(0, i, j);
                if (i, j) == (2, 0) {
                    assert_eq!(v, Complex64::new(16.0, 0.0));
                } else {
                    assert!(v.norm() < 1e-15, "bin ({i},{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let x = SpatialTensor::zeros(2, 8, 8).unwrap();
        let s = forward_rfft2(&x).unwrap();
        assert!(s.data().iter().all(|v| v.norm() == 0.0));
        let back = inverse_rfft2(&s, 8).unwrap();
        assert!(back.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_dc_bin_inverts_to_constant() {
        let mut data = vec![ZERO; 12];
        data[2 * 3] = Complex64::new(16.0, 0.0);
        let s = SpectralTensor::new(1, 4, 3, data).unwrap();
        let x = inverse_rfft2(&s, 4).unwrap();
        for v in x.data() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_rejects_wrong_width() {
        let s = SpectralTensor::zeros(1, 4, 3).unwrap();
        assert!(matches!(inverse_rfft2(&s, 6), Err(Error::Shape(_))));
        assert!(matches!(inverse_rfft2(&s, 5), Err(Error::Shape(_))));
    }

    #[test]
    fn hermitian_part_matches_round_trip() {
        let s = SpectralTensor::from_fn(2, 8, 5, |c, i, j| {
            Complex64::new(
                (c + i * 3 + j) as f64 * 0.37 - 2.0,
                (i as f64 - j as f64 * 1.3).sin(),
            )
        })
        .unwrap();
        let via_fft = forward_rfft2(&inverse_rfft2(&s, 8).unwrap()).unwrap();
        let direct = hermitian_part(&s);
        assert!(via_fft.max_abs_diff(&direct).unwrap() < 1e-12);
        // interior columns untouched
        for i in 0..8 {
            for j in 1..4 {
                assert_eq!(direct.get(1, i, j), s.get(1, i, j));
            }
        }
    }

    #[test]
    fn full_spectrum_is_hermitian_for_real_input() {
        let x = lcg_tensor(1, 6, 8, 3);
        let s = forward_rfft2(&x).unwrap();
        let full = full_spectrum(&s, 0);
        for k in 0..6 {
            for l in 0..8 {
                let mirror = full[((6 - k) % 6) * 8 + (8 - l) % 8];
                assert!((full[k * 8 + l] - mirror.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_small() {
        let x = lcg_tensor(3, 6, 10, 11);
        let back = inverse_rfft2(&forward_rfft2(&x).unwrap(), 10).unwrap();
        assert!(back.max_abs_diff(&x).unwrap() < 1e-13);
    }
}
