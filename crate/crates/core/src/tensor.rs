//! Real spatial tensors and complex half-spectrum tensors.
//!
//! Both types are immutable `C x H x W` arrays stored row-major. A
//! [`SpectralTensor`] holds the `W/2 + 1` non-redundant columns of the 2D DFT
//! of a real `H x W` signal, with rows shifted so that the zero-frequency row
//! sits at index `H/2` while columns stay unshifted (DC at column 0). The
//! remaining columns are implied by conjugate reflection.

use num_complex::Complex64;

use crate::error::{Error, Result};

fn check_even(name: &str, value: usize) -> Result<()> {
    if value < 2 || !value.is_multiple_of(2) {
        return Err(Error::shape(format!(
            "{name} must be even and >= 2, got {value}"
        )));
    }
    Ok(())
}

/// Real-valued `C x H x W` tensor with even `H` and `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SpatialTensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::shape("channel count must be positive"));
        }
        check_even("height", height)?;
        check_even("width", width)?;
        if data.len() != channels * height * width {
            return Err(Error::shape(format!(
                "data length {} does not match {channels}x{height}x{width}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("spatial entry {pos}")));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(
            channels,
            height,
            width,
            vec![0.0; channels * height * width],
        )
    }

    /// Builds a tensor from `f(channel, row, col)`.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for i in 0..height {
                for j in 0..width {
                    data.push(f(c, i, j));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    /// Constructor for results of internal operations whose inputs were
    /// already validated.
    pub(crate) fn from_parts(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), channels * height * width);
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> f64 {
        self.data[(c * self.height + i) * self.width + j]
    }

    /// Channels `range` as a new tensor.
    pub fn slice_channels(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.channels {
            return Err(Error::shape(format!(
                "channel range {range:?} invalid for {} channels",
                self.channels
            )));
        }
        let n = self.plane_len();
        let data = self.data[range.start * n..range.end * n].to_vec();
        Ok(Self::from_parts(range.len(), self.height, self.width, data))
    }

    /// Stacks tensors of identical spatial size along the channel axis.
    pub fn concat_channels(parts: &[&SpatialTensor]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("nothing to concatenate"))?;
        let (h, w) = (first.height, first.width);
        let mut data = Vec::new();
        let mut channels = 0;
        for p in parts {
            if p.height != h || p.width != w {
                return Err(Error::shape(format!(
                    "cannot concatenate {}x{} with {h}x{w}",
                    p.height, p.width
                )));
            }
            channels += p.channels;
            data.extend_from_slice(&p.data);
        }
        Ok(Self::from_parts(channels, h, w, data))
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::shape(format!(
                "dimension mismatch: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_parts(
            self.channels,
            self.height,
            self.width,
            data,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_parts(
            self.channels,
            self.height,
            self.width,
            data,
        ))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let data = self.data.iter().map(|v| alpha * v).collect();
        Self::from_parts(self.channels, self.height, self.width, data)
    }

    /// Real inner product over all entries, accumulated in twice-working
    /// precision.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(accurate_dot(
            self.data.iter().zip(&other.data).map(|(a, b)| (*a, *b)),
        ))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Complex `C x H x (W/2 + 1)` half spectrum in the row-shifted layout.
///
/// Stored row `r` holds frequency index `(r + H/2) mod H`, so DC sits at
/// `(H/2, 0)`. Negating a frequency maps stored row `r` to `(H - r) mod H`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl SpectralTensor {
    /// Creates a half spectrum with `spec_width = W/2 + 1` stored columns.
    pub fn new(
        channels: usize,
        height: usize,
        spec_width: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(Error::shape("channel count must be positive"));
        }
        check_even("spectrum height", height)?;
        if spec_width < 2 {
            return Err(Error::shape(format!(
                "spectrum width must be >= 2, got {spec_width}"
            )));
        }
        if data.len() != channels * height * spec_width {
            return Err(Error::shape(format!(
                "data length {} does not match {channels}x{height}x{spec_width}",
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::NonFinite(format!("spectral entry {pos}")));
        }
        Ok(Self {
            channels,
            height,
            width: 2 * (spec_width - 1),
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, spec_width: usize) -> Result<Self> {
        Self::new(
            channels,
            height,
            spec_width,
            vec![Complex64::new(0.0, 0.0); channels * height * spec_width],
        )
    }

    /// Builds a spectrum from `f(channel, row, col)` over the stored half.
    pub fn from_fn(
        channels: usize,
        height: usize,
        spec_width: usize,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * spec_width);
        for c in 0..channels {
            for i in 0..height {
                for j in 0..spec_width {
                    data.push(f(c, i, j));
                }
            }
        }
        Self::new(channels, height, spec_width, data)
    }

    pub(crate) fn from_parts(
        channels: usize,
        height: usize,
        spatial_width: usize,
        data: Vec<Complex64>,
    ) -> Self {
        debug_assert_eq!(data.len(), channels * height * (spatial_width / 2 + 1));
        Self {
            channels,
            height,
            width: spatial_width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of stored columns, `W/2 + 1`.
    pub fn spec_width(&self) -> usize {
        self.width / 2 + 1
    }

    /// Width `W` of the real signal this half spectrum describes.
    pub fn spatial_width(&self) -> usize {
        self.width
    }

    /// `(channels, height, spec_width)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.spec_width())
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.spec_width()
    }

    pub fn channel(&self, c: usize) -> &[Complex64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> Complex64 {
        self.data[(c * self.height + i) * self.spec_width() + j]
    }

    /// Stored row holding the zero-frequency row.
    pub fn dc_row(&self) -> usize {
        self.height / 2
    }

    pub fn slice_channels(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.channels {
            return Err(Error::shape(format!(
                "channel range {range:?} invalid for {} channels",
                self.channels
            )));
        }
        let n = self.plane_len();
        let data = self.data[range.start * n..range.end * n].to_vec();
        Ok(Self::from_parts(range.len(), self.height, self.width, data))
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::shape(format!(
                "spectral dimension mismatch: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    pub(crate) fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_parts(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub(crate) fn zip_map(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.check_same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_parts(
            self.channels,
            self.height,
            self.width,
            data,
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        self.map(|v| alpha * v)
    }

    /// Real inner product on stacked `(re, im)` components, accumulated in
    /// twice-working precision.
    pub fn real_dot(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(accurate_dot(
            self.data
                .iter()
                .zip(&other.data)
                .flat_map(|(a, b)| [(a.re, b.re), (a.im, b.im)]),
        ))
    }

    /// Sum of squared magnitudes of the stored bins.
    pub fn stored_energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Elementwise `alpha * a + beta * b`.
pub fn spectral_axpy(
    alpha: Complex64,
    a: &SpectralTensor,
    beta: Complex64,
    b: &SpectralTensor,
) -> Result<SpectralTensor> {
    a.zip_map(b, |x, y| alpha * x + beta * y)
}

/// Dot product with error-free product and sum transformations, as accurate
/// as if computed in twice the working precision and then rounded.
pub(crate) fn accurate_dot(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut sum, mut err) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        let p = a * b;
        let p_err = a.mul_add(b, -p);
        let t = sum + p;
        let z = t - sum;
        err += (sum - (t - z)) + (p - z) + p_err;
        sum = t;
    }
    sum + err
}
