//! Spectral hint unit.
//!
//! For an `N`-channel input `x` and hint width `K`, the unit computes
//!
//! ```text
//! x' = concat(x[0..N-K], x[N-K..N] + f(x[N-K..N]))
//! f  = inverse_rfft2 . g . forward_rfft2
//! g  = hefilter . split_relu . channel_mix
//! ```
//!
//! There are no bias terms, so a zero channel mix makes `f` vanish and the
//! unit an exact identity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{forward_rfft2, inverse_rfft2};
use crate::hefilter::{hefilter_apply, FilterMode, HeFilterParams};
use crate::split::{pyramid_split, SplitKind, SplitPyramid};
use crate::tensor::{SpatialTensor, SpectralTensor};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixMode {
    /// A complex `K x K` matrix applied to the complex channel vector.
    #[default]
    Complex,
    /// A real `2K x 2K` matrix applied to `(re_1..re_K, im_1..im_K)`.
    Stacked,
}

impl MixMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MixMode::Complex => "complex",
            MixMode::Stacked => "stacked",
        }
    }
}

impl std::str::FromStr for MixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(MixMode::Complex),
            "stacked" => Ok(MixMode::Stacked),
            other => Err(Error::invalid(format!("unknown mix mode '{other}'"))),
        }
    }
}

/// Channel mixing shared by every frequency bin (the 1x1 convolution in the
/// frequency domain).
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelMix {
    Complex { k: usize, weights: Vec<Complex64> },
    Stacked { k: usize, weights: Vec<f64> },
}

impl ChannelMix {
    pub fn complex(k: usize, weights: Vec<Complex64>) -> Result<Self> {
        if k == 0 || weights.len() != k * k {
            return Err(Error::shape(format!(
                "complex mix needs {k}x{k} weights, got {}",
                weights.len()
            )));
        }
        if weights
            .iter()
            .any(|w| !w.re.is_finite() || !w.im.is_finite())
        {
            return Err(Error::NonFinite("mix weight".into()));
        }
        Ok(ChannelMix::Complex { k, weights })
    }

    pub fn stacked(k: usize, weights: Vec<f64>) -> Result<Self> {
        if k == 0 || weights.len() != 4 * k * k {
            return Err(Error::shape(format!(
                "stacked mix needs {n}x{n} weights, got {}",
                weights.len(),
                n = 2 * k
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("mix weight".into()));
        }
        Ok(ChannelMix::Stacked { k, weights })
    }

    pub fn zeros(k: usize, mode: MixMode) -> Result<Self> {
        match mode {
            MixMode::Complex => Self::complex(k, vec![ZERO; k * k]),
            MixMode::Stacked => Self::stacked(k, vec![0.0; 4 * k * k]),
        }
    }

    pub fn identity(k: usize, mode: MixMode) -> Result<Self> {
        match mode {
            MixMode::Complex => Self::complex(
                k,
                (0..k * k)
                    .map(|n| {
                        if n / k == n % k {
                            Complex64::new(1.0, 0.0)
                        } else {
                            ZERO
                        }
                    })
                    .collect(),
            ),
            MixMode::Stacked => {
                let n = 2 * k;
                Self::stacked(
                    k,
                    (0..n * n)
                        .map(|i| if i / n == i % n { 1.0 } else { 0.0 })
                        .collect(),
                )
            }
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            ChannelMix::Complex { k, .. } | ChannelMix::Stacked { k, .. } => *k,
        }
    }

    pub fn mode(&self) -> MixMode {
        match self {
            ChannelMix::Complex { .. } => MixMode::Complex,
            ChannelMix::Stacked { .. } => MixMode::Stacked,
        }
    }

    /// Number of real parameters.
    pub fn real_len(&self) -> usize {
        match self {
            ChannelMix::Complex { weights, .. } => 2 * weights.len(),
            ChannelMix::Stacked { weights, .. } => weights.len(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.channels(), self.mode()).expect("same shape")
    }
}

fn check_mix(s: &SpectralTensor, mix: &ChannelMix) -> Result<()> {
    if s.channels() != mix.channels() {
        return Err(Error::shape(format!(
            "spectrum has {} channels, mix expects {}",
            s.channels(),
            mix.channels()
        )));
    }
    Ok(())
}

/// Applies the same channel map at every bin.
pub fn channel_mix(s: &SpectralTensor, mix: &ChannelMix) -> Result<SpectralTensor> {
    check_mix(s, mix)?;
    let (k, height, _) = s.dims();
    let plane = s.plane_len();
    let src = s.data();
    let mut out = vec![ZERO; src.len()];
    match mix {
        ChannelMix::Complex { weights, .. } => {
            for bin in 0..plane {
                for a in 0..k {
                    let mut acc = ZERO;
                    for b in 0..k {
                        acc += weights[a * k + b] * src[b * plane + bin];
                    }
                    out[a * plane + bin] = acc;
                }
            }
        }
        ChannelMix::Stacked { weights, .. } => {
            let n = 2 * k;
            let mut v = vec![0.0; n];
            for bin in 0..plane {
                for b in 0..k {
                    v[b] = src[b * plane + bin].re;
                    v[k + b] = src[b * plane + bin].im;
                }
                for a in 0..k {
                    let row_re = &weights[a * n..(a + 1) * n];
                    let row_im = &weights[(k + a) * n..(k + a + 1) * n];
                    let re = row_re.iter().zip(&v).map(|(w, x)| w * x).sum();
                    let im = row_im.iter().zip(&v).map(|(w, x)| w * x).sum();
                    out[a * plane + bin] = Complex64::new(re, im);
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

/// Gradients of a real loss through [`channel_mix`]; same complex
/// convention as [`crate::hefilter::hefilter_backward`].
pub fn channel_mix_backward(
    s: &SpectralTensor,
    mix: &ChannelMix,
    upstream: &SpectralTensor,
) -> Result<(SpectralTensor, ChannelMix)> {
    check_mix(s, mix)?;
    s.check_same_dims(upstream)?;
    let (k, height, _) = s.dims();
    let plane = s.plane_len();
    let (src, up) = (s.data(), upstream.data());
    let mut grad_in = vec![ZERO; src.len()];
    let grad_mix = match mix {
        ChannelMix::Complex { weights, .. } => {
            let mut gw = vec![ZERO; k * k];
            for bin in 0..plane {
                for b in 0..k {
                    let mut acc = ZERO;
                    for a in 0..k {
                        acc += weights[a * k + b].conj() * up[a * plane + bin];
                    }
                    grad_in[b * plane + bin] = acc;
                }
                for a in 0..k {
                    let g = up[a * plane + bin];
                    for b in 0..k {
                        gw[a * k + b] += g * src[b * plane + bin].conj();
                    }
                }
            }
            ChannelMix::Complex { k, weights: gw }
        }
        ChannelMix::Stacked { weights, .. } => {
            let n = 2 * k;
            let mut gw = vec![0.0; n * n];
            let (mut v, mut g) = (vec![0.0; n], vec![0.0; n]);
            for bin in 0..plane {
                for c in 0..k {
                    v[c] = src[c * plane + bin].re;
                    v[k + c] = src[c * plane + bin].im;
                    g[c] = up[c * plane + bin].re;
                    g[k + c] = up[c * plane + bin].im;
                }
                for q in 0..n {
                    let gq: f64 = (0..n).map(|p| weights[p * n + q] * g[p]).sum();
                    if q < k {
                        grad_in[q * plane + bin].re = gq;
                    } else {
                        grad_in[(q - k) * plane + bin].im = gq;
                    }
                }
                for p in 0..n {
                    for q in 0..n {
                        gw[p * n + q] += g[p] * v[q];
                    }
                }
            }
            ChannelMix::Stacked { k, weights: gw }
        }
    };
    Ok((
        SpectralTensor::from_parts(k, height, s.spatial_width(), grad_in),
        grad_mix,
    ))
}

/// ReLU applied separately to the real and imaginary part of every bin.
pub fn split_relu(s: &SpectralTensor) -> SpectralTensor {
    s.map(|v| Complex64::new(v.re.max(0.0), v.im.max(0.0)))
}

/// Backward of [`split_relu`]; the derivative at exactly 0 is taken as 0.
pub fn split_relu_backward(
    s: &SpectralTensor,
    upstream: &SpectralTensor,
) -> Result<SpectralTensor> {
    s.zip_map(upstream, |v, g| {
        Complex64::new(
            if v.re > 0.0 { g.re } else { 0.0 },
            if v.im > 0.0 { g.im } else { 0.0 },
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReluMode {
    #[default]
    SplitReIm,
}

impl ReluMode {
    pub fn as_str(self) -> &'static str {
        "split_re_im"
    }
}

/// Configuration of the multi-resolution hint variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PyramidConfig {
    pub levels: usize,
    pub kind: SplitKind,
    pub sigma_ratio: f64,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self {
            levels: 5,
            kind: SplitKind::Gaussian,
            sigma_ratio: 0.25,
        }
    }
}

/// Parameters of one spectral hint unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuParams {
    total_channels: usize,
    mix: ChannelMix,
    hefilter: HeFilterParams,
    relu_mode: ReluMode,
    pyramid: Option<PyramidConfig>,
}

impl ShuParams {
    pub const DEFAULT_HINT_CHANNELS: usize = 32;

    pub fn new(
        total_channels: usize,
        mix: ChannelMix,
        hefilter: HeFilterParams,
        pyramid: Option<PyramidConfig>,
    ) -> Result<Self> {
        let k = mix.channels();
        if k == 0 || k > total_channels {
            return Err(Error::invalid(format!(
                "hint channels {k} must be in 1..={total_channels}"
            )));
        }
        if hefilter.channels() != k {
            return Err(Error::shape(format!(
                "mix has {k} channels but filter has {}",
                hefilter.channels()
            )));
        }
        Ok(Self {
            total_channels,
            mix,
            hefilter,
            relu_mode: ReluMode::SplitReIm,
            pyramid,
        })
    }

    /// Zero mix and identity filter on the default 3x2 grid: the unit starts
    /// as an exact identity.
    pub fn zero_init(
        total_channels: usize,
        hint_channels: usize,
        mix_mode: MixMode,
        filter_mode: FilterMode,
    ) -> Result<Self> {
        Self::new(
            total_channels,
            ChannelMix::zeros(hint_channels, mix_mode)?,
            HeFilterParams::identity(hint_channels, filter_mode)?,
            None,
        )
    }

    pub fn total_channels(&self) -> usize {
        self.total_channels
    }

    pub fn hint_channels(&self) -> usize {
        self.mix.channels()
    }

    pub fn mix(&self) -> &ChannelMix {
        &self.mix
    }

    pub fn hefilter(&self) -> &HeFilterParams {
        &self.hefilter
    }

    pub fn relu_mode(&self) -> ReluMode {
        self.relu_mode
    }

    pub fn pyramid(&self) -> Option<PyramidConfig> {
        self.pyramid
    }

    pub fn with_mix(&self, mix: ChannelMix) -> Result<Self> {
        Self::new(
            self.total_channels,
            mix,
            self.hefilter.clone(),
            self.pyramid,
        )
    }

    pub fn with_hefilter(&self, hefilter: HeFilterParams) -> Result<Self> {
        Self::new(
            self.total_channels,
            self.mix.clone(),
            hefilter,
            self.pyramid,
        )
    }

    pub fn with_pyramid(&self, pyramid: Option<PyramidConfig>) -> Self {
        Self {
            pyramid,
            ..self.clone()
        }
    }

    fn check_input(&self, x: &SpatialTensor) -> Result<()> {
        if x.channels() != self.total_channels {
            return Err(Error::shape(format!(
                "input has {} channels, unit expects {}",
                x.channels(),
                self.total_channels
            )));
        }
        Ok(())
    }
}

/// `g = hefilter . split_relu . channel_mix` on a `K`-channel spectrum.
pub fn spectral_transform(s: &SpectralTensor, p: &ShuParams) -> Result<SpectralTensor> {
    let mixed = channel_mix(s, &p.mix)?;
    hefilter_apply(&split_relu(&mixed), &p.hefilter)
}

/// Forward pass of the unit; output has the input's shape.
pub fn shu_forward(x: &SpatialTensor, p: &ShuParams) -> Result<SpatialTensor> {
    p.check_input(x)?;
    let n = p.total_channels;
    let k = p.hint_channels();
    let hint = x.slice_channels(n - k..n)?;
    let g = spectral_transform(&forward_rfft2(&hint)?, p)?;
    let updated = hint.add(&inverse_rfft2(&g, x.width())?)?;
    if k == n {
        return Ok(updated);
    }
    SpatialTensor::concat_channels(&[&x.slice_channels(0..n - k)?, &updated])
}

/// Hint maps of the multi-resolution variant: `g` on the last `K` channels,
/// then a spectral pyramid split instead of a single inverse transform.
pub fn shu_hints(x: &SpatialTensor, p: &ShuParams) -> Result<SplitPyramid> {
    p.check_input(x)?;
    let cfg = p
        .pyramid
        .ok_or_else(|| Error::invalid("unit has no pyramid configuration"))?;
    let n = p.total_channels;
    let hint = x.slice_channels(n - p.hint_channels()..n)?;
    let g = spectral_transform(&forward_rfft2(&hint)?, p)?;
    pyramid_split(&g, cfg.levels, cfg.kind, cfg.sigma_ratio)
}

/// Adds each hint level into the first `K` channels of the feature map with
/// the same spatial size. Feature maps without a matching level are
/// returned unchanged.
pub fn inject_hints(
    features: &[SpatialTensor],
    hints: &SplitPyramid,
) -> Result<Vec<SpatialTensor>> {
    let mut out = features.to_vec();
    for level in &hints.levels {
        let (k, h, w) = level.dims();
        let target = out
            .iter_mut()
            .find(|f| f.height() == h && f.width() == w)
            .ok_or_else(|| Error::shape(format!("no feature map at resolution {h}x{w}")))?;
        if target.channels() < k {
            return Err(Error::shape(format!(
                "feature map at {h}x{w} has {} channels, hints need {k}",
                target.channels()
            )));
        }
        let mut data = target.data().to_vec();
        for (d, v) in data.iter_mut().zip(level.data()) {
            *d += v;
        }
        *target = SpatialTensor::from_parts(target.channels(), h, w, data);
    }
    Ok(out)
}
