//! Backward pass through the spectral hint unit, a central-difference
//! oracle, and planted-weight recovery by gradient descent.
//!
//! Complex quantities follow one gradient convention throughout: the real
//! part of a gradient entry is `dL/d re`, the imaginary part `dL/d im`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{forward_rfft2, forward_rfft2_backward, inverse_rfft2, inverse_rfft2_backward};
use crate::hefilter::{hefilter_apply, hefilter_backward, HeFilterParams};
use crate::rng::CounterRng;
use crate::shu::{
    channel_mix, channel_mix_backward, shu_forward, split_relu, split_relu_backward, ChannelMix,
    ShuParams,
};
use crate::tensor::{SpatialTensor, SpectralTensor};

/// Every learnable real parameter of a [`ShuParams`] in a fixed order:
/// the channel mix (row-major; complex entries as `re, im` pairs), then the
/// filter anchors (anchor-major, row-major over the grid, each weight as a
/// `re, im` pair).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn from_params(p: &ShuParams) -> Self {
        let mut out = mix_values(p.mix());
        out.extend(p.hefilter().anchors().iter().flat_map(|w| [w.re, w.im]));
        Self(out)
    }

    /// Writes the values back into a copy of `template`.
    pub fn to_params(&self, template: &ShuParams) -> Result<ShuParams> {
        let n_mix = template.mix().real_len();
        let n_hef = 2 * template.hefilter().anchors().len();
        if self.0.len() != n_mix + n_hef {
            return Err(Error::shape(format!(
                "parameter vector has {} entries, expected {}",
                self.0.len(),
                n_mix + n_hef
            )));
        }
        let (mix_part, hef_part) = self.0.split_at(n_mix);
        let k = template.hint_channels();
        let mix = match template.mix() {
            ChannelMix::Complex { .. } => ChannelMix::complex(k, pairs(mix_part))?,
            ChannelMix::Stacked { .. } => ChannelMix::stacked(k, mix_part.to_vec())?,
        };
        let h = template.hefilter();
        let hef = HeFilterParams::new(h.grid_rows(), h.grid_cols(), k, h.mode(), pairs(hef_part))?;
        template.with_mix(mix)?.with_hefilter(hef)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Range of the filter anchors within the vector.
    pub fn anchor_range(p: &ShuParams) -> std::ops::Range<usize> {
        let start = p.mix().real_len();
        start..start + 2 * p.hefilter().anchors().len()
    }
}

fn mix_values(mix: &ChannelMix) -> Vec<f64> {
    match mix {
        ChannelMix::Complex { weights, .. } => weights.iter().flat_map(|w| [w.re, w.im]).collect(),
        ChannelMix::Stacked { weights, .. } => weights.clone(),
    }
}

fn pairs(values: &[f64]) -> Vec<Complex64> {
    values
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

/// Intermediate spectra of the spectral branch.
struct BranchCache {
    input: SpectralTensor,
    mixed: SpectralTensor,
    rectified: SpectralTensor,
}

fn branch_forward(s: &SpectralTensor, p: &ShuParams) -> Result<(BranchCache, SpectralTensor)> {
    let mixed = channel_mix(s, p.mix())?;
    let rectified = split_relu(&mixed);
    let out = hefilter_apply(&rectified, p.hefilter())?;
    Ok((
        BranchCache {
            input: s.clone(),
            mixed,
            rectified,
        },
        out,
    ))
}

/// Backward through `g`; returns the gradient at the branch input and the
/// parameter gradient in [`ParamVector`] order.
fn branch_backward(
    cache: &BranchCache,
    p: &ShuParams,
    grad_out: &SpectralTensor,
) -> Result<(SpectralTensor, ParamVector)> {
    let (g_rect, g_hef) = hefilter_backward(&cache.rectified, p.hefilter(), grad_out)?;
    let g_mixed = split_relu_backward(&cache.mixed, &g_rect)?;
    let (g_in, g_mix) = channel_mix_backward(&cache.input, p.mix(), &g_mixed)?;
    let mut flat = mix_values(&g_mix);
    flat.extend(g_hef.anchors().iter().flat_map(|w| [w.re, w.im]));
    Ok((g_in, ParamVector(flat)))
}

/// Exact gradient of `L` through [`shu_forward`] given `upstream = dL/dx'`.
///
/// Returns `dL/dx` and `dL/dtheta` in [`ParamVector`] order.
pub fn backward_pipeline(
    x: &SpatialTensor,
    p: &ShuParams,
    upstream: &SpatialTensor,
) -> Result<(SpatialTensor, ParamVector)> {
    if upstream.dims() != x.dims() {
        return Err(Error::shape(format!(
            "upstream dims {:?} differ from input {:?}",
            upstream.dims(),
            x.dims()
        )));
    }
    if x.channels() != p.total_channels() {
        return Err(Error::shape(format!(
            "input has {} channels, unit expects {}",
            x.channels(),
            p.total_channels()
        )));
    }
    let n = p.total_channels();
    let k = p.hint_channels();
    let hint = x.slice_channels(n - k..n)?;
    let (cache, _) = branch_forward(&forward_rfft2(&hint)?, p)?;
    let up_hint = upstream.slice_channels(n - k..n)?;
    let g_spec = inverse_rfft2_backward(&up_hint)?;
    let (g_in, g_params) = branch_backward(&cache, p, &g_spec)?;
    let g_hint = up_hint.add(&forward_rfft2_backward(&g_in)?)?;
    let g_x = if k == n {
        g_hint
    } else {
        SpatialTensor::concat_channels(&[&upstream.slice_channels(0..n - k)?, &g_hint])?
    };
    Ok((g_x, g_params))
}

/// Central differences `(L(theta + h e_i) - L(theta - h e_i)) / 2h` for every
/// coordinate.
pub fn finite_diff_oracle(
    mut loss_fn: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::invalid(format!("step must be positive, got {h}")));
    }
    let mut theta = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = theta[i];
        theta[i] = orig + h;
        let plus = loss_fn(&theta);
        theta[i] = orig - h;
        let minus = loss_fn(&theta);
        theta[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss at coordinate {i}")));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Normalized error `|a - b| / max(|a|, |b|, 1e-3)`: a relative error with an
/// absolute floor, so a tolerance of `1e-6` means relative `1e-6` or
/// absolute `1e-9`, whichever is looser.
pub fn gradient_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Largest [`gradient_error`] between two gradient vectors.
pub fn max_gradient_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| gradient_error(*a, *n))
        .fold(0.0, f64::max)
}

/// Loss used by [`fit_planted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitLoss {
    /// Squared error of the spectral-branch output `g`, summed over stored
    /// bins and channels, divided by `H * W`, averaged over the batch.
    #[default]
    L2Spectrum,
    /// Squared error of the unit output, summed over pixels and channels,
    /// averaged over the batch.
    L2Spatial,
}

impl std::str::FromStr for FitLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2_spectrum" | "spectrum" => Ok(FitLoss::L2Spectrum),
            "l2_spatial" | "spatial" => Ok(FitLoss::L2Spatial),
            other => Err(Error::invalid(format!("unknown loss '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub step_size: f64,
    pub steps: usize,
    pub seed: u64,
    pub loss: FitLoss,
    /// Side length of the square training inputs.
    pub size: usize,
    pub batch: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            steps: 256,
            seed: 0,
            loss: FitLoss::L2Spectrum,
            size: 16,
            batch: 4,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(Error::invalid(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.steps == 0 || self.batch == 0 {
            return Err(Error::invalid("steps and batch must be at least 1"));
        }
        Ok(())
    }
}

/// Stream selector that keeps planted weights independent of the input
/// batch drawn from the same seed.
const PLANT_STREAM: u64 = 0x005E_ED0F_A11C_0125;

/// Identity mix plus a diagonal filter on the 3x2 grid whose anchors are
/// real and uniform in `[0.5, 1.5)`; a target for [`fit_planted`].
pub fn planted_diagonal_target(seed: u64, channels: usize) -> Result<ShuParams> {
    let mut rng = CounterRng::new(seed ^ PLANT_STREAM);
    let hef = HeFilterParams::from_anchor_fn(
        3,
        2,
        channels,
        crate::hefilter::FilterMode::Diagonal,
        |_, _| Complex64::new(rng.uniform(0.5, 1.5), 0.0),
    )?;
    ShuParams::new(
        channels,
        ChannelMix::identity(channels, crate::shu::MixMode::Complex)?,
        hef,
        None,
    )
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub recovered: ShuParams,
    /// Loss before the first update, then after each update (`steps + 1`
    /// entries).
    pub loss_curve: Vec<f64>,
}

/// Random inputs uniform in `[-1, 1)` drawn from the counter-based stream.
pub fn random_batch(
    seed: u64,
    batch: usize,
    channels: usize,
    size: usize,
) -> Result<Vec<SpatialTensor>> {
    let mut rng = CounterRng::new(seed);
    (0..batch)
        .map(|_| SpatialTensor::from_fn(channels, size, size, |_, _, _| rng.uniform(-1.0, 1.0)))
        .collect()
}

struct FitSample {
    x: SpatialTensor,
    spectrum: SpectralTensor,
    target: TargetOutput,
}

enum TargetOutput {
    Spectrum(SpectralTensor),
    Spatial(SpatialTensor),
}

/// Fits the filter anchors of a unit to outputs of `target`.
///
/// Inputs are a seeded random batch. The trainee keeps the target's channel
/// mix and starts from all-zero anchors, so its spectral branch is zero and
/// the unit begins as the identity. Only the anchors are updated, by plain
/// gradient descent; the problem is then a convex quadratic.
pub fn fit_planted(target: &ShuParams, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let n = target.total_channels();
    let k = target.hint_channels();
    let inputs = random_batch(config.seed, config.batch, n, config.size)?;
    let samples = inputs
        .into_iter()
        .map(|x| {
            let spectrum = forward_rfft2(&x.slice_channels(n - k..n)?)?;
            let target_out = match config.loss {
                FitLoss::L2Spectrum => TargetOutput::Spectrum(branch_forward(&spectrum, target)?.1),
                FitLoss::L2Spatial => TargetOutput::Spatial(shu_forward(&x, target)?),
            };
            Ok(FitSample {
                x,
                spectrum,
                target: target_out,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trainee = target.with_hefilter(target.hefilter().zeros_like())?;
    let anchors = ParamVector::anchor_range(&trainee);
    let mut curve = Vec::with_capacity(config.steps + 1);
    for step in 0..=config.steps {
        let (loss, grad) = fit_loss_and_grad(&samples, &trainee)?;
        if !loss.is_finite() || grad.0.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { step, loss });
        }
        curve.push(loss);
        if step == config.steps {
            break;
        }
        let mut theta = ParamVector::from_params(&trainee);
        for i in anchors.clone() {
            theta.0[i] -= config.step_size * grad.0[i];
        }
        trainee = theta.to_params(&trainee).map_err(|e| match e {
            Error::NonFinite(_) => Error::Divergence {
                step,
                loss: f64::INFINITY,
            },
            other => other,
        })?;
    }
    Ok(FitReport {
        recovered: trainee,
        loss_curve: curve,
    })
}

fn fit_loss_and_grad(samples: &[FitSample], p: &ShuParams) -> Result<(f64, ParamVector)> {
    let scale = 1.0 / samples.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; ParamVector::from_params(p).len()];
    for sample in samples {
        let g = match &sample.target {
            TargetOutput::Spectrum(want) => {
                let (cache, got) = branch_forward(&sample.spectrum, p)?;
                let norm = scale / (want.height() * want.spatial_width()) as f64;
                let diff = got.sub(want)?;
                loss += norm * diff.stored_energy();
                let upstream = diff.scale(Complex64::new(2.0 * norm, 0.0));
                branch_backward(&cache, p, &upstream)?.1
            }
            TargetOutput::Spatial(want) => {
                let got = shu_forward(&sample.x, p)?;
                let diff = got.sub(want)?;
                loss += scale * diff.dot(&diff)?;
                backward_pipeline(&sample.x, p, &diff.scale(2.0 * scale))?.1
            }
        };
        for (acc, v) in grad.iter_mut().zip(&g.0) {
            *acc += v;
        }
    }
    Ok((loss, ParamVector(grad)))
}

/// Outcome of one stage of [`run_gradcheck`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub stage: &'static str,
    pub parameters: usize,
    pub max_error: f64,
}

impl GradcheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_error <= tol
    }
}

pub const GRADCHECK_STEP: f64 = 1e-6;
pub const GRADCHECK_TOLERANCE: f64 = 1e-6;

/// Draws components until none lies within `1e-4` of a ReLU kink.
fn away_from_kinks(
    rng: &mut CounterRng,
    mut make: impl FnMut(&mut CounterRng) -> Result<(SpectralTensor, SpectralTensor)>,
) -> Result<(SpectralTensor, SpectralTensor)> {
    loop {
        let (input, pre_relu) = make(rng)?;
        if pre_relu
            .data()
            .iter()
            .all(|v| v.re.abs() > 1e-4 && v.im.abs() > 1e-4)
        {
            return Ok((input, pre_relu));
        }
    }
}

/// Magnitude bound of gradcheck data and upstream entries. Central
/// differences carry rounding noise of about `eps * |terms| / h`, and with
/// `h = 1e-6` unit-sized entries put that noise at the `1e-9` absolute floor.
const GRADCHECK_SCALE: f64 = 0.5;

fn random_spectrum(
    rng: &mut CounterRng,
    k: usize,
    h: usize,
    half: usize,
) -> Result<SpectralTensor> {
    let a = GRADCHECK_SCALE;
    SpectralTensor::from_fn(k, h, half, |_, _, _| {
        Complex64::new(rng.uniform(-a, a), rng.uniform(-a, a))
    })
}

/// Entries scaled by `1 / sqrt(H W)` relative to [`random_spectrum`], so the
/// unnormalized spectrum has entries of the same size.
fn random_spatial(rng: &mut CounterRng, n: usize, h: usize, w: usize) -> Result<SpatialTensor> {
    let scale = GRADCHECK_SCALE / ((h * w) as f64).sqrt();
    SpatialTensor::from_fn(n, h, w, |_, _, _| scale * rng.uniform(-1.0, 1.0))
}

fn random_params(
    rng: &mut CounterRng,
    n: usize,
    k: usize,
    mix: crate::shu::MixMode,
    mode: crate::hefilter::FilterMode,
) -> Result<ShuParams> {
    let template = ShuParams::zero_init(n, k, mix, mode)?;
    let len = ParamVector::from_params(&template).len();
    ParamVector((0..len).map(|_| rng.uniform(-1.0, 1.0)).collect()).to_params(&template)
}

/// Spectral stand-ins for the data-dependent quantities: spatial tensors for
/// their own flat data, spectra as `(re, im)` pairs.
fn spectral_flat(s: &SpectralTensor) -> Vec<f64> {
    s.data().iter().flat_map(|v| [v.re, v.im]).collect()
}

fn spectral_from_flat(like: &SpectralTensor, flat: &[f64]) -> SpectralTensor {
    SpectralTensor::from_parts(
        like.channels(),
        like.height(),
        like.spatial_width(),
        pairs(flat),
    )
}

/// [`run_gradcheck_with`] on two hint channels.
pub fn run_gradcheck(seed: u64, size: usize) -> Result<Vec<GradcheckReport>> {
    run_gradcheck_with(seed, size, 2)
}

/// Checks every backward pass against [`finite_diff_oracle`] on seeded
/// random instances of side `size` with `k` hint channels. Each stage uses
/// the loss `<upstream, output>` with a random upstream. The full unit is
/// checked with `N = k` and `N = k + 2` channels.
pub fn run_gradcheck_with(seed: u64, size: usize, k: usize) -> Result<Vec<GradcheckReport>> {
    use crate::hefilter::FilterMode;
    use crate::shu::MixMode;

    if size < 4 || !size.is_multiple_of(2) {
        return Err(Error::shape(format!(
            "gradcheck size must be even and >= 4, got {size}"
        )));
    }
    let h_step = GRADCHECK_STEP;
    let mut rng = CounterRng::new(seed);
    if k == 0 {
        return Err(Error::invalid("gradcheck needs at least one hint channel"));
    }
    let half = size / 2 + 1;
    let mut reports = Vec::new();

    for mode in [MixMode::Complex, MixMode::Stacked] {
        let p = random_params(&mut rng, k, k, mode, FilterMode::Diagonal)?;
        let s = random_spectrum(&mut rng, k, size, half)?;
        let up = random_spectrum(&mut rng, k, size, half)?;
        let (g_in, g_mix) = channel_mix_backward(&s, p.mix(), &up)?;
        let mut analytic = spectral_flat(&g_in);
        analytic.extend(mix_values(&g_mix));
        let n_in = analytic.len() - p.mix().real_len();
        let mut theta = spectral_flat(&s);
        theta.extend(mix_values(p.mix()));
        let numeric = finite_diff_oracle(
            |t| {
                let s = spectral_from_flat(&s, &t[..n_in]);
                let mix = match p.mix() {
                    ChannelMix::Complex { .. } => {
                        ChannelMix::complex(k, pairs(&t[n_in..])).expect("shape")
                    }
                    ChannelMix::Stacked { .. } => {
                        ChannelMix::stacked(k, t[n_in..].to_vec()).expect("shape")
                    }
                };
                channel_mix(&s, &mix)
                    .and_then(|o| o.real_dot(&up))
                    .unwrap_or(f64::NAN)
            },
            &theta,
            h_step,
        )?;
        let stage = if mode == MixMode::Complex {
            "channel_mix(complex)"
        } else {
            "channel_mix(stacked)"
        };
        reports.push(GradcheckReport {
            stage,
            parameters: theta.len(),
            max_error: max_gradient_error(&analytic, &numeric),
        });
    }

    {
        let (s, _) = away_from_kinks(&mut rng, |r| {
            let s = random_spectrum(r, k, size, half)?;
            Ok((s.clone(), s))
        })?;
        let up = random_spectrum(&mut rng, k, size, half)?;
        let analytic = spectral_flat(&split_relu_backward(&s, &up)?);
        let numeric = finite_diff_oracle(
            |t| {
                split_relu(&spectral_from_flat(&s, t))
                    .real_dot(&up)
                    .unwrap_or(f64::NAN)
            },
            &spectral_flat(&s),
            h_step,
        )?;
        reports.push(GradcheckReport {
            stage: "split_relu",
            parameters: analytic.len(),
            max_error: max_gradient_error(&analytic, &numeric),
        });
    }

    for mode in [FilterMode::Diagonal, FilterMode::FullMatrix] {
        let p = random_params(&mut rng, k, k, MixMode::Complex, mode)?;
        let hef = p.hefilter().clone();
        let s = random_spectrum(&mut rng, k, size, half)?;
        let up = random_spectrum(&mut rng, k, size, half)?;
        let (g_in, g_hef) = hefilter_backward(&s, &hef, &up)?;
        let mut analytic = spectral_flat(&g_in);
        analytic.extend(g_hef.anchors().iter().flat_map(|w| [w.re, w.im]));
        let n_in = 2 * s.data().len();
        let mut theta = spectral_flat(&s);
        theta.extend(hef.anchors().iter().flat_map(|w| [w.re, w.im]));
        let numeric = finite_diff_oracle(
            |t| {
                let s = spectral_from_flat(&s, &t[..n_in]);
                let hp = hef.with_anchors(pairs(&t[n_in..]));
                hefilter_apply(&s, &hp)
                    .and_then(|o| o.real_dot(&up))
                    .unwrap_or(f64::NAN)
            },
            &theta,
            h_step,
        )?;
        let stage = if mode == FilterMode::Diagonal {
            "hefilter(diagonal)"
        } else {
            "hefilter(full_matrix)"
        };
        reports.push(GradcheckReport {
            stage,
            parameters: theta.len(),
            max_error: max_gradient_error(&analytic, &numeric),
        });
    }

    {
        let x = random_spatial(&mut rng, k, size, size)?;
        let up = random_spectrum(&mut rng, k, size, half)?;
        let analytic = forward_rfft2_backward(&up)?.into_data();
        let numeric = finite_diff_oracle(
            |t| {
                let x = SpatialTensor::from_parts(k, size, size, t.to_vec());
                forward_rfft2(&x)
                    .and_then(|o| o.real_dot(&up))
                    .unwrap_or(f64::NAN)
            },
            x.data(),
            h_step,
        )?;
        reports.push(GradcheckReport {
            stage: "forward_rfft2",
            parameters: analytic.len(),
            max_error: max_gradient_error(&analytic, &numeric),
        });
    }

    {
        let s = random_spectrum(&mut rng, k, size, half)?;
        let up = random_spatial(&mut rng, k, size, size)?;
        let analytic = spectral_flat(&inverse_rfft2_backward(&up)?);
        let numeric = finite_diff_oracle(
            |t| {
                inverse_rfft2(&spectral_from_flat(&s, t), size)
                    .and_then(|o| o.dot(&up))
                    .unwrap_or(f64::NAN)
            },
            &spectral_flat(&s),
            h_step,
        )?;
        reports.push(GradcheckReport {
            stage: "inverse_rfft2",
            parameters: analytic.len(),
            max_error: max_gradient_error(&analytic, &numeric),
        });
    }

    for (stage, n, mix_mode, filter_mode) in [
        (
            "shu_pipeline(complex,diagonal)",
            k,
            MixMode::Complex,
            FilterMode::Diagonal,
        ),
        (
            "shu_pipeline(stacked,full_matrix)",
            k + 2,
            MixMode::Stacked,
            FilterMode::FullMatrix,
        ),
    ] {
        let (x, p) = loop {
            let p = random_params(&mut rng, n, k, mix_mode, filter_mode)?;
            let x = random_spatial(&mut rng, n, size, size)?;
            let mixed = channel_mix(&forward_rfft2(&x.slice_channels(n - k..n)?)?, p.mix())?;
            if mixed
                .data()
                .iter()
                .all(|v| v.re.abs() > 1e-4 && v.im.abs() > 1e-4)
            {
                break (x, p);
            }
        };
        let up = random_spatial(&mut rng, n, size, size)?;
        let (g_x, g_p) = backward_pipeline(&x, &p, &up)?;
        let mut analytic = g_x.into_data();
        analytic.extend(g_p.0);
        let n_x = x.data().len();
        let mut theta = x.data().to_vec();
        theta.extend(ParamVector::from_params(&p).0);
        let numeric = finite_diff_oracle(
            |t| {
                let x = SpatialTensor::from_parts(n, size, size, t[..n_x].to_vec());
                ParamVector(t[n_x..].to_vec())
                    .to_params(&p)
                    .and_then(|q| shu_forward(&x, &q))
                    .and_then(|o| o.dot(&up))
                    .unwrap_or(f64::NAN)
            },
            &theta,
            h_step,
        )?;
        reports.push(GradcheckReport {
            stage,
            parameters: theta.len(),
            max_error: max_gradient_error(&analytic, &numeric),
        });
    }
    Ok(reports)
}
