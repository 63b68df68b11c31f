//! Heterogeneous filtering: a frequency-dependent channel map obtained by
//! bilinear interpolation of weights pinned on an evenly spaced anchor grid.
//!
//! Anchor `(r, c)` sits at normalized coordinates
//! `(r / (rows - 1), c / (cols - 1))` of the stored half spectrum, where row
//! coordinate 0 is stored row 0, row coordinate 1 is stored row `H - 1`,
//! column coordinate 0 is the DC column and column coordinate 1 is the
//! Nyquist column `W/2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sht::ShtArray;
use crate::tensor::SpectralTensor;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub const HEF_MAGIC: &[u8; 4] = b"HEF1";
const HEF_HEADER_LEN: usize = 16;

/// How each anchor mixes channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// One complex scale per channel.
    #[default]
    Diagonal,
    /// A full `K x K` complex matrix.
    FullMatrix,
}

impl FilterMode {
    fn code(self) -> u8 {
        match self {
            FilterMode::Diagonal => 0,
            FilterMode::FullMatrix => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(FilterMode::Diagonal),
            1 => Ok(FilterMode::FullMatrix),
            other => Err(Error::format(format!("unknown filter mode {other}"))),
        }
    }
}

impl std::str::FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(FilterMode::Diagonal),
            "full" | "full_matrix" | "full-matrix" => Ok(FilterMode::FullMatrix),
            other => Err(Error::invalid(format!("unknown filter mode '{other}'"))),
        }
    }
}

/// Anchor weights of a heterogeneous filter.
#[derive(Debug, Clone, PartialEq)]
pub struct HeFilterParams {
    grid_rows: usize,
    grid_cols: usize,
    channels: usize,
    mode: FilterMode,
    /// Anchor-major; each anchor holds `K` (diagonal) or `K * K` row-major
    /// (full matrix) weights.
    anchors: Vec<Complex64>,
}

impl HeFilterParams {
    pub const DEFAULT_ROWS: usize = 3;
    pub const DEFAULT_COLS: usize = 2;

    pub fn new(
        grid_rows: usize,
        grid_cols: usize,
        channels: usize,
        mode: FilterMode,
        anchors: Vec<Complex64>,
    ) -> Result<Self> {
        if grid_rows < 2 || grid_cols < 2 {
            return Err(Error::invalid(format!(
                "anchor grid must be at least 2x2, got {grid_rows}x{grid_cols}"
            )));
        }
        if channels == 0 {
            return Err(Error::invalid("filter channel count must be positive"));
        }
        let per = per_anchor(mode, channels);
        if anchors.len() != grid_rows * grid_cols * per {
            return Err(Error::shape(format!(
                "expected {} anchor weights, got {}",
                grid_rows * grid_cols * per,
                anchors.len()
            )));
        }
        if anchors
            .iter()
            .any(|w| !w.re.is_finite() || !w.im.is_finite())
        {
            return Err(Error::NonFinite("filter anchor weight".into()));
        }
        Ok(Self {
            grid_rows,
            grid_cols,
            channels,
            mode,
            anchors,
        })
    }

    /// Every anchor set to `value` times the identity map.
    pub fn uniform(
        grid_rows: usize,
        grid_cols: usize,
        channels: usize,
        mode: FilterMode,
        value: Complex64,
    ) -> Result<Self> {
        Self::from_anchor_fn(grid_rows, grid_cols, channels, mode, |_, _| value)
    }

    pub fn identity(channels: usize, mode: FilterMode) -> Result<Self> {
        Self::uniform(Self::DEFAULT_ROWS, Self::DEFAULT_COLS, channels, mode, ONE)
    }

    /// Anchor `(r, c)` set to `f(r, c)` times the identity map.
    pub fn from_anchor_fn(
        grid_rows: usize,
        grid_cols: usize,
        channels: usize,
        mode: FilterMode,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let per = per_anchor(mode, channels);
        let mut anchors = Vec::with_capacity(grid_rows * grid_cols * per);
        for r in 0..grid_rows {
            for c in 0..grid_cols {
                let v = f(r, c);
                match mode {
                    FilterMode::Diagonal => anchors.extend(std::iter::repeat_n(v, channels)),
                    FilterMode::FullMatrix => {
                        for a in 0..channels {
                            for b in 0..channels {
                                anchors.push(if a == b { v } else { ZERO });
                            }
                        }
                    }
                }
            }
        }
        Self::new(grid_rows, grid_cols, channels, mode, anchors)
    }

    pub fn grid_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> usize {
        self.grid_cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    pub fn anchors(&self) -> &[Complex64] {
        &self.anchors
    }

    pub fn anchor_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn weights_per_anchor(&self) -> usize {
        per_anchor(self.mode, self.channels)
    }

    /// Weights of anchor `(r, c)`.
    pub fn anchor(&self, r: usize, c: usize) -> &[Complex64] {
        let per = self.weights_per_anchor();
        let idx = r * self.grid_cols + c;
        &self.anchors[idx * per..(idx + 1) * per]
    }

    /// Same grid and mode with all weights zero; the shape of a parameter
    /// gradient.
    pub fn zeros_like(&self) -> Self {
        Self {
            anchors: vec![ZERO; self.anchors.len()],
            ..self.clone()
        }
    }

    pub(crate) fn with_anchors(&self, anchors: Vec<Complex64>) -> Self {
        debug_assert_eq!(anchors.len(), self.anchors.len());
        Self {
            anchors,
            ..self.clone()
        }
    }

    /// Interpolated weights at stored bin `(row, col)` of an
    /// `height x (W/2 + 1)` spectrum.
    pub fn weights_at(
        &self,
        row: usize,
        col: usize,
        height: usize,
        spec_width: usize,
    ) -> Vec<Complex64> {
        let (r0, r1, tr) = axis_position(row, height, self.grid_rows);
        let (c0, c1, tc) = axis_position(col, spec_width, self.grid_cols);
        let per = self.weights_per_anchor();
        let a00 = self.anchor(r0, c0);
        let a01 = self.anchor(r0, c1);
        let a10 = self.anchor(r1, c0);
        let a11 = self.anchor(r1, c1);
        (0..per)
            .map(|n| {
                let top = lerp(a00[n], a01[n], tc);
                let bottom = lerp(a10[n], a11[n], tc);
                lerp(top, bottom, tr)
            })
            .collect()
    }

    /// Serializes as the 16-byte `HEF1` extension followed by a complex
    /// `.sht` container of shape `(rows * cols, K, K)`. Diagonal weights are
    /// stored in row 0 of each anchor's `K x K` slab.
    pub fn to_bytes(&self) -> Vec<u8> {
        let k = self.channels;
        let mut out = Vec::with_capacity(HEF_HEADER_LEN);
        out.extend_from_slice(HEF_MAGIC);
        out.push(self.mode.code());
        out.push(self.grid_rows as u8);
        out.push(self.grid_cols as u8);
        out.push(0);
        out.extend_from_slice(&(k as u32).to_le_bytes());
        out.extend_from_slice(&[0u8; 4]);
        let mut slab = vec![ZERO; self.anchor_count() * k * k];
        for a in 0..self.anchor_count() {
            let dst = &mut slab[a * k * k..(a + 1) * k * k];
            match self.mode {
                FilterMode::Diagonal => dst[..k].copy_from_slice(&self.anchors[a * k..(a + 1) * k]),
                FilterMode::FullMatrix => {
                    dst.copy_from_slice(&self.anchors[a * k * k..(a + 1) * k * k])
                }
            }
        }
        let array =
            ShtArray::complex([self.anchor_count(), k, k], slab).expect("slab sized from dims");
        out.extend_from_slice(&array.encode());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEF_HEADER_LEN {
            return Err(Error::format("truncated HEF1 header"));
        }
        if &bytes[..4] != HEF_MAGIC {
            return Err(Error::format("bad HEF1 magic"));
        }
        let mode = FilterMode::from_code(bytes[4])?;
        let (rows, cols) = (bytes[5] as usize, bytes[6] as usize);
        let k = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let array = ShtArray::decode(&bytes[HEF_HEADER_LEN..])?;
        if array.dims != [rows * cols, k, k] {
            return Err(Error::format(format!(
                "HEF1 payload dims {:?} disagree with header ({rows}x{cols}, K={k})",
                array.dims
            )));
        }
        let slab = match array.data {
            crate::sht::ShtData::Complex(v) => v,
            crate::sht::ShtData::Real(_) => {
                return Err(Error::format("HEF1 payload must be complex"))
            }
        };
        let anchors = match mode {
            FilterMode::Diagonal => (0..rows * cols)
                .flat_map(|a| slab[a * k * k..a * k * k + k].iter().copied())
                .collect(),
            FilterMode::FullMatrix => slab,
        };
        Self::new(rows, cols, k, mode, anchors)
    }
}

fn per_anchor(mode: FilterMode, channels: usize) -> usize {
    match mode {
        FilterMode::Diagonal => channels,
        FilterMode::FullMatrix => channels * channels,
    }
}

/// Lower anchor, upper anchor and fractional offset of bin `index` among
/// `bins` evenly mapped onto `anchors` anchors. The offset lies in `[0, 1)`
/// and is exactly 0 when the bin coincides with an anchor.
fn axis_position(index: usize, bins: usize, anchors: usize) -> (usize, usize, f64) {
    let num = index * (anchors - 1);
    let den = bins - 1;
    let lower = num / den;
    let upper = (lower + 1).min(anchors - 1);
    (lower, upper, (num % den) as f64 / den as f64)
}

fn lerp(a: Complex64, b: Complex64, t: f64) -> Complex64 {
    a + (b - a) * t
}

/// Bilinear coefficients of the four anchors surrounding a bin, as
/// `(flat anchor index, coefficient)`.
fn bin_coefficients(
    row: usize,
    col: usize,
    height: usize,
    spec_width: usize,
    p: &HeFilterParams,
) -> [(usize, f64); 4] {
    let (r0, r1, tr) = axis_position(row, height, p.grid_rows);
    let (c0, c1, tc) = axis_position(col, spec_width, p.grid_cols);
    let g = p.grid_cols;
    [
        (r0 * g + c0, (1.0 - tr) * (1.0 - tc)),
        (r0 * g + c1, (1.0 - tr) * tc),
        (r1 * g + c0, tr * (1.0 - tc)),
        (r1 * g + c1, tr * tc),
    ]
}

fn check_channels(s: &SpectralTensor, p: &HeFilterParams) -> Result<()> {
    if s.channels() != p.channels {
        return Err(Error::shape(format!(
            "spectrum has {} channels, filter expects {}",
            s.channels(),
            p.channels
        )));
    }
    Ok(())
}

/// Applies the interpolated per-bin channel map to every bin of `s`.
pub fn hefilter_apply(s: &SpectralTensor, p: &HeFilterParams) -> Result<SpectralTensor> {
    check_channels(s, p)?;
    let (k, height, half) = s.dims();
    let plane = height * half;
    let src = s.data();
    let mut out = vec![ZERO; src.len()];
    for i in 0..height {
        for j in 0..half {
            let w = p.weights_at(i, j, height, half);
            let bin = i * half + j;
            match p.mode {
                FilterMode::Diagonal => {
                    for c in 0..k {
                        out[c * plane + bin] = w[c] * src[c * plane + bin];
                    }
                }
                FilterMode::FullMatrix => {
                    for a in 0..k {
                        let mut acc = ZERO;
                        for b in 0..k {
                            acc += w[a * k + b] * src[b * plane + bin];
                        }
                        out[a * plane + bin] = acc;
                    }
                }
            }
        }
    }
    Ok(SpectralTensor::from_parts(
        k,
        height,
        s.spatial_width(),
        out,
    ))
}

/// Gradients of a real loss through [`hefilter_apply`].
///
/// `upstream` carries `dL/d re` in the real part and `dL/d im` in the
/// imaginary part of each output bin; the returned gradients use the same
/// convention. Anchor gradients are accumulated bin by bin in row-major
/// order.
pub fn hefilter_backward(
    s: &SpectralTensor,
    p: &HeFilterParams,
    upstream: &SpectralTensor,
) -> Result<(SpectralTensor, HeFilterParams)> {
    check_channels(s, p)?;
    s.check_same_dims(upstream)?;
    let (k, height, half) = s.dims();
    let plane = height * half;
    let (src, up) = (s.data(), upstream.data());
    let per = p.weights_per_anchor();
    let mut grad_in = vec![ZERO; src.len()];
    let mut grad_anchor = vec![ZERO; p.anchors.len()];
    let mut grad_w = vec![ZERO; per];
    for i in 0..height {
        for j in 0..half {
            let w = p.weights_at(i, j, height, half);
            let bin = i * half + j;
            match p.mode {
                FilterMode::Diagonal => {
                    for c in 0..k {
                        let g = up[c * plane + bin];
                        grad_in[c * plane + bin] = w[c].conj() * g;
                        grad_w[c] = src[c * plane + bin].conj() * g;
                    }
                }
                FilterMode::FullMatrix => {
                    for b in 0..k {
                        let mut acc = ZERO;
                        for a in 0..k {
                            acc += w[a * k + b].conj() * up[a * plane + bin];
                        }
                        grad_in[b * plane + bin] = acc;
                    }
                    for a in 0..k {
                        let g = up[a * plane + bin];
                        for b in 0..k {
                            grad_w[a * k + b] = g * src[b * plane + bin].conj();
                        }
                    }
                }
            }
            for (anchor, coef) in bin_coefficients(i, j, height, half, p) {
                if coef == 0.0 {
                    continue;
                }
                let dst = &mut grad_anchor[anchor * per..(anchor + 1) * per];
                for (d, g) in dst.iter_mut().zip(&grad_w) {
                    *d += g * coef;
                }
            }
        }
    }
    Ok((
        SpectralTensor::from_parts(k, height, s.spatial_width(), grad_in),
        p.with_anchors(grad_anchor),
    ))
}
