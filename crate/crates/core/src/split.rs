//! Vanilla and Gaussian spectral splits, their inverses, and the dyadic
//! pyramid of spatial hint maps built from them.
//!
//! A split moves the low-frequency block of an `H x (W/2 + 1)` half spectrum,
//! stored rows `[H/4, 3H/4)` and columns `[0, W/4]`, into a half spectrum of
//! an `H/2 x W/2` signal. In the row-shifted layout the block is already a
//! valid half spectrum of the smaller signal: its DC lands at
//! `(H/4, 0)` and its last column is the smaller signal's Nyquist column.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{forward_rfft2, hermitian_part, inverse_rfft2};
use crate::tensor::{SpatialTensor, SpectralTensor};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    Vanilla,
    Gaussian,
}

impl SplitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Vanilla => "vanilla",
            SplitKind::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(SplitKind::Vanilla),
            "gaussian" => Ok(SplitKind::Gaussian),
            other => Err(Error::invalid(format!("unknown split kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for SplitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Peak-normalized isotropic Gaussian over spectrum bins, centred on the
/// zero frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMap {
    height: usize,
    width: usize,
    sigma: f64,
    values: Vec<f64>,
}

impl GaussianMap {
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of columns.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.width + j]
    }

    /// The map as a real-valued half spectrum with `channels` copies.
    pub fn to_spectrum(&self, channels: usize) -> Result<SpectralTensor> {
        SpectralTensor::from_fn(channels, self.height, self.width, |_, i, j| {
            Complex64::new(self.get(i, j), 0.0)
        })
    }
}

/// Gaussian weight map for an `height x width` spatial signal.
///
/// With `block == false` the map covers the whole `height x (width/2 + 1)`
/// half spectrum; with `block == true` it covers only the low-frequency block
/// (`height/2 x (width/4 + 1)`), sampled from the same function so that the
/// centre lands at block bin `(height/4, 0)`.
pub fn build_gaussian_map(
    height: usize,
    width: usize,
    block: bool,
    sigma: f64,
) -> Result<GaussianMap> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::invalid(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let (rows, cols, row_offset) = if block {
        check_splittable(height, width)?;
        (height / 2, width / 4 + 1, height / 4)
    } else {
        (height, width / 2 + 1, 0)
    };
    let centre = (height / 2) as f64;
    let two_var = 2.0 * sigma * sigma;
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let di = (i + row_offset) as f64 - centre;
        for j in 0..cols {
            let dj = j as f64;
            values.push((-(di * di + dj * dj) / two_var).exp());
        }
    }
    Ok(GaussianMap {
        height: rows,
        width: cols,
        sigma,
        values,
    })
}

fn check_splittable(height: usize, width: usize) -> Result<()> {
    if height < 4 || width < 4 || !height.is_multiple_of(4) || !width.is_multiple_of(4) {
        return Err(Error::shape(format!(
            "split needs dims divisible by 4, got {height}x{width}"
        )));
    }
    Ok(())
}

struct Block {
    rows: std::ops::Range<usize>,
    cols: usize,
}

fn block_of(s: &SpectralTensor) -> Result<Block> {
    check_splittable(s.height(), s.spatial_width())?;
    let h = s.height();
    Ok(Block {
        rows: h / 4..3 * h / 4,
        cols: s.spatial_width() / 4 + 1,
    })
}

fn split_with(
    s: &SpectralTensor,
    weight: impl Fn(usize, usize) -> f64,
) -> Result<(SpectralTensor, SpectralTensor)> {
    let block = block_of(s)?;
    let (channels, height, half) = s.dims();
    let mut hi = s.data().to_vec();
    let mut lo = Vec::with_capacity(channels * block.rows.len() * block.cols);
    for c in 0..channels {
        for (bi, i) in block.rows.clone().enumerate() {
            for j in 0..block.cols {
                let idx = (c * height + i) * half + j;
                let v = hi[idx];
                let low = v * weight(bi, j);
                lo.push(low);
                hi[idx] = v - low;
            }
        }
    }
    Ok((
        SpectralTensor::from_parts(channels, height, s.spatial_width(), hi),
        SpectralTensor::from_parts(channels, height / 2, s.spatial_width() / 2, lo),
    ))
}

/// Moves the low-frequency block verbatim into `lo` and zeroes it in `hi`.
pub fn vanilla_split(s: &SpectralTensor) -> Result<(SpectralTensor, SpectralTensor)> {
    split_with(s, |_, _| 1.0)
}

/// Adds `lo` back into the low-frequency block of `hi`.
pub fn vanilla_merge(hi: &SpectralTensor, lo: &SpectralTensor) -> Result<SpectralTensor> {
    let block = block_of(hi)?;
    let expected = (hi.channels(), block.rows.len(), block.cols);
    if lo.dims() != expected {
        return Err(Error::shape(format!(
            "low band dims {:?} do not match block {expected:?}",
            lo.dims()
        )));
    }
    let (channels, height, half) = hi.dims();
    let mut out = hi.data().to_vec();
    let src = lo.data();
    let mut n = 0;
    for c in 0..channels {
        for i in block.rows.clone() {
            for j in 0..block.cols {
                out[(c * height + i) * half + j] += src[n];
                n += 1;
            }
        }
    }
    Ok(SpectralTensor::from_parts(
        channels,
        height,
        hi.spatial_width(),
        out,
    ))
}

/// Gaussian-weighted split: inside the block `lo = s * N` and
/// `hi = s - lo`; outside it `hi = s`.
pub fn gaussian_split(s: &SpectralTensor, sigma: f64) -> Result<(SpectralTensor, SpectralTensor)> {
    let map = build_gaussian_map(s.height(), s.spatial_width(), true, sigma)?;
    split_with(s, |i, j| map.get(i, j))
}

/// Inverse of [`gaussian_split`]. The two masks sum to one, so merging is
/// the same block addition as [`vanilla_merge`].
pub fn gaussian_merge(hi: &SpectralTensor, lo: &SpectralTensor) -> Result<SpectralTensor> {
    vanilla_merge(hi, lo)
}

/// Places the half spectrum of a `H/2 x W/2` real signal at the
/// low-frequency position of an `H x W` half spectrum.
///
/// The smaller signal's Nyquist row and Nyquist column are self-conjugate
/// there but not in the larger spectrum, so their values are split evenly
/// between the `+/-` frequencies. The result is the spectrum of the
/// trigonometric 2x upsampling of the small signal (scaled by 4 because
/// the inverse normalization differs) and is itself the spectrum of a real
/// signal whenever the input is.
pub fn embed_low_band(lo: &SpectralTensor) -> Result<SpectralTensor> {
    let (channels, h, half) = lo.dims();
    let w = lo.spatial_width();
    if h % 2 != 0 || !w.is_multiple_of(2) {
        return Err(Error::shape(format!("low band dims {h}x{w} must be even")));
    }
    let (height, width) = (2 * h, 2 * w);
    let big_half = width / 2 + 1;
    let mut out = vec![ZERO; channels * height * big_half];
    let src = lo.data();
    for c in 0..channels {
        for r in 0..h {
            let nyquist_row = r == 0;
            for j in 0..half {
                let nyquist_col = j == half - 1;
                let mut v = src[(c * h + r) * half + j];
                if nyquist_row {
                    v *= 0.5;
                }
                if nyquist_col {
                    v *= 0.5;
                }
                let row = r + h / 2;
                out[(c * height + row) * big_half + j] += v;
                if nyquist_row {
                    // stored row 0 is frequency -h/2; its partner +h/2 sits
                    // just past the block in the larger spectrum
                    out[(c * height + row + h) * big_half + j] += v;
                }
            }
        }
    }
    Ok(SpectralTensor::from_parts(channels, height, width, out))
}

/// Multi-resolution decomposition of a spectrum into spatial hint maps.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPyramid {
    pub kind: SplitKind,
    pub sigma_ratio: f64,
    pub source_dims: (usize, usize, usize),
    /// Finest first; each level halves height and width.
    pub levels: Vec<SpatialTensor>,
}

impl SplitPyramid {
    /// Heights of the levels, finest first.
    pub fn resolutions(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.height()).collect()
    }

    fn validate(&self) -> Result<()> {
        let (c, h, w) = self.source_dims;
        if self.levels.is_empty() {
            return Err(Error::shape("pyramid has no levels"));
        }
        for (n, level) in self.levels.iter().enumerate() {
            let expected = (c, h >> n, w >> n);
            if level.dims() != expected || (h >> n) << n != h || (w >> n) << n != w {
                return Err(Error::shape(format!(
                    "pyramid level {n} has dims {:?}, expected {expected:?}",
                    level.dims()
                )));
            }
        }
        Ok(())
    }
}

/// Checks that a `height x width` signal supports `levels` pyramid levels.
pub fn check_pyramid_dims(height: usize, width: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::invalid("pyramid needs at least one level"));
    }
    let (mut h, mut w) = (height, width);
    for _ in 1..levels {
        check_splittable(h, w).map_err(|_| {
            Error::shape(format!(
                "{height}x{width} does not support {levels} dyadic levels"
            ))
        })?;
        h /= 2;
        w /= 2;
    }
    if levels > 1 && (h < 4 || w < 4) {
        return Err(Error::shape(format!(
            "{levels} levels of {height}x{width} would go below 4x4"
        )));
    }
    Ok(())
}

/// Recursively splits the low branch of `s` and converts each piece into a
/// spatial map at its own resolution.
///
/// Before each piece is inverted, the part of the low band that a real
/// `H/2 x W/2` signal cannot carry (the anti-symmetric component of its DC
/// and Nyquist columns) is left in the high band, and the low band is
/// re-embedded with [`embed_low_band`]. This keeps every piece a real-signal
/// spectrum, so [`pyramid_merge`] recovers the real-signal part of `s`
/// exactly. For `s` produced by [`forward_rfft2`] that is `s` itself.
///
/// The split at a level whose low band has height `h` uses
/// `sigma = sigma_ratio * h`. Low-band maps use their own `1 / (h * w)`
/// inverse normalization, so their amplitude is `(H * W) / (h * w)` times
/// that of the same band viewed at the finer resolution.
pub fn pyramid_split(
    s: &SpectralTensor,
    levels: usize,
    kind: SplitKind,
    sigma_ratio: f64,
) -> Result<SplitPyramid> {
    let (channels, height, _) = s.dims();
    let width = s.spatial_width();
    check_pyramid_dims(height, width, levels)?;
    if kind == SplitKind::Gaussian && !(sigma_ratio > 0.0 && sigma_ratio.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma ratio must be positive, got {sigma_ratio}"
        )));
    }
    let mut maps = Vec::with_capacity(levels);
    let mut current = s.clone();
    for _ in 1..levels {
        let (_, lo) = match kind {
            SplitKind::Vanilla => vanilla_split(&current)?,
            SplitKind::Gaussian => {
                gaussian_split(&current, sigma_ratio * (current.height() / 2) as f64)?
            }
        };
        let lo = hermitian_part(&lo);
        let band = current.sub(&embed_low_band(&lo)?)?;
        maps.push(inverse_rfft2(&band, band.spatial_width())?);
        current = lo;
    }
    maps.push(inverse_rfft2(&current, current.spatial_width())?);
    Ok(SplitPyramid {
        kind,
        sigma_ratio,
        source_dims: (channels, height, width),
        levels: maps,
    })
}

/// Inverse of [`pyramid_split`]: transforms every level back to its
/// spectrum and folds the levels up from the coarsest.
pub fn pyramid_merge(p: &SplitPyramid) -> Result<SpectralTensor> {
    p.validate()?;
    let mut levels = p.levels.iter().rev();
    let coarsest = levels.next().expect("validated non-empty");
    let mut acc = forward_rfft2(coarsest)?;
    for level in levels {
        acc = forward_rfft2(level)?.add(&embed_low_band(&acc)?)?;
    }
    Ok(acc)
}
