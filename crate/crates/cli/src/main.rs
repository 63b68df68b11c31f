//! `shu`: batch spectral transforms, pyramids, filters, masks and gradient
//! checks over `.sht` tensors and PGM/PPM images.

mod io;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shu_core::container::{
    read_pyramid, read_shu_params, write_atomic, write_pyramid, write_shu_params,
};
use shu_core::fft::{forward_rfft2, inverse_rfft2};
use shu_core::grad::{
    fit_planted, planted_diagonal_target, run_gradcheck_with, FitConfig, FitLoss,
    GRADCHECK_TOLERANCE,
};
use shu_core::hefilter::{hefilter_apply, FilterMode, HeFilterParams};
use shu_core::imageio::ImageBuffer;
use shu_core::mask::{apply_mask, generate_mask, Mask, MaskSpec};
use shu_core::shu::{shu_forward, shu_hints, MixMode, PyramidConfig, ShuParams};
use shu_core::split::{pyramid_merge, pyramid_split, SplitKind};
use shu_core::{Complex64, Error};

use crate::io::{read_input, read_spatial, write_spatial, write_spectral, Input};

#[derive(Parser, Debug)]
#[command(
    name = "shu",
    version,
    about = "Spectral hint unit toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Forward 2D real FFT of a real tensor or image into a half spectrum.
    Fft { input: PathBuf, output: PathBuf },
    /// Inverse 2D real FFT of a half spectrum.
    Ifft {
        input: PathBuf,
        output: PathBuf,
        /// Spatial width; defaults to 2 * (spectrum width - 1).
        #[arg(long)]
        width: Option<usize>,
    },
    /// Split a signal into a directory of multi-resolution hint maps.
    Decompose {
        input: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = SplitKind::Gaussian)]
        kind: SplitKind,
        #[arg(long, default_value_t = 0.25)]
        sigma_ratio: f64,
    },
    /// Rebuild a signal from a decomposition directory.
    Recompose { in_dir: PathBuf, output: PathBuf },
    /// Apply a heterogeneous filter to a spectrum, tensor or image.
    Filter {
        input: PathBuf,
        output: PathBuf,
        /// Filter file written by `init-params` (hefilter.sht).
        #[arg(long, conflicts_with = "anchor")]
        params: Option<PathBuf>,
        /// Uniform anchor value `re[,im]` used when no filter file is given.
        #[arg(long, default_value = "1")]
        anchor: String,
        #[arg(long, default_value = "diagonal")]
        mode: FilterMode,
        #[arg(long, default_value_t = 3)]
        grid_rows: usize,
        #[arg(long, default_value_t = 2)]
        grid_cols: usize,
    },
    /// Write an identity-initialized unit parameter directory.
    InitParams {
        out_dir: PathBuf,
        /// Total channels N.
        #[arg(long, default_value_t = ShuParams::DEFAULT_HINT_CHANNELS)]
        channels: usize,
        /// Hint channels K.
        #[arg(long, default_value_t = ShuParams::DEFAULT_HINT_CHANNELS)]
        hint_channels: usize,
        #[arg(long, default_value = "complex")]
        mix_mode: MixMode,
        #[arg(long, default_value = "diagonal")]
        filter_mode: FilterMode,
        #[arg(long, default_value_t = 3)]
        grid_rows: usize,
        #[arg(long, default_value_t = 2)]
        grid_cols: usize,
        /// Enable the pyramid variant with this many levels.
        #[arg(long)]
        pyramid_levels: Option<usize>,
        #[arg(long, default_value_t = SplitKind::Gaussian)]
        pyramid_kind: SplitKind,
        #[arg(long, default_value_t = 0.25)]
        sigma_ratio: f64,
    },
    /// Run the unit on a tensor or image.
    Forward {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        params: PathBuf,
    },
    /// Produce pyramid hint maps with a unit whose pyramid is enabled.
    Hints {
        input: PathBuf,
        out_dir: PathBuf,
        #[arg(long)]
        params: PathBuf,
    },
    /// Generate a free-form mask as a PGM (255 = known, 0 = unknown).
    Maskgen {
        output: PathBuf,
        /// Mask size as HxW.
        #[arg(long, default_value = "256x256", value_parser = parse_size)]
        size: (usize, usize),
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Zero out the unknown pixels of a tensor or image.
    ApplyMask {
        input: PathBuf,
        mask: PathBuf,
        output: PathBuf,
    },
    /// Compare every backward pass with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        size: usize,
        /// Hint channels K of the checked instances.
        #[arg(long, default_value_t = 2)]
        channels: usize,
    },
    /// Recover a planted diagonal filter by gradient descent.
    Fit {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        step_size: f64,
        #[arg(long, default_value_t = 16)]
        size: usize,
        #[arg(long, default_value_t = 4)]
        batch: usize,
        #[arg(long, default_value_t = 1)]
        channels: usize,
        #[arg(long, default_value = "l2_spectrum")]
        loss: FitLoss,
    },
    /// Render log(1 + |spectrum|) of one channel as a PGM.
    Spectrum {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        channel: usize,
    },
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got '{s}'"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad size '{s}': {e}"))
    };
    Ok((parse(h)?, parse(w)?))
}

/// Why a subcommand failed, mapped to the documented exit codes.
enum Failure {
    Core(Error),
    Gradcheck,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Shape(_)) => 3,
            Failure::Gradcheck => 4,
            Failure::Core(Error::Divergence { .. }) => 5,
            Failure::Core(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Core(e) => eprintln!("shu: {e}"),
                Failure::Gradcheck => eprintln!("shu: gradient check failed"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Fft { input, output } => {
            write_spectral(&output, &forward_rfft2(&read_spatial(&input)?)?)?;
        }
        Command::Ifft {
            input,
            output,
            width,
        } => {
            let s = io::read_spectral(&input)?;
            let w = width.unwrap_or(s.spatial_width());
            write_spatial(&output, &inverse_rfft2(&s, w)?)?;
        }
        Command::Decompose {
            input,
            out_dir,
            levels,
            kind,
            sigma_ratio,
        } => {
            let s = spectrum_of(&input)?;
            let p = pyramid_split(&s, levels, kind, sigma_ratio)?;
            write_pyramid(&out_dir, &p)?;
            println!(
                "wrote {} levels {:?} to {}",
                p.levels.len(),
                p.resolutions(),
                out_dir.display()
            );
        }
        Command::Recompose { in_dir, output } => {
            let p = read_pyramid(&in_dir)?;
            let s = pyramid_merge(&p)?;
            write_spatial(&output, &inverse_rfft2(&s, p.source_dims.2)?)?;
        }
        Command::Filter {
            input,
            output,
            params,
            anchor,
            mode,
            grid_rows,
            grid_cols,
        } => {
            let data = read_input(&input)?;
            let channels = match &data {
                Input::Spatial(t) => t.channels(),
                Input::Spectral(s) => s.channels(),
            };
            let hef = match params {
                Some(path) => HeFilterParams::from_bytes(&fs::read(path)?)?,
                None => HeFilterParams::uniform(
                    grid_rows,
                    grid_cols,
                    channels,
                    mode,
                    parse_complex(&anchor)?,
                )?,
            };
            match data {
                Input::Spectral(s) => write_spectral(&output, &hefilter_apply(&s, &hef)?)?,
                Input::Spatial(t) => {
                    let filtered = hefilter_apply(&forward_rfft2(&t)?, &hef)?;
                    write_spatial(&output, &inverse_rfft2(&filtered, t.width())?)?
                }
            }
        }
        Command::InitParams {
            out_dir,
            channels,
            hint_channels,
            mix_mode,
            filter_mode,
            grid_rows,
            grid_cols,
            pyramid_levels,
            pyramid_kind,
            sigma_ratio,
        } => {
            let base = ShuParams::zero_init(channels, hint_channels, mix_mode, filter_mode)?;
            let hef = HeFilterParams::from_anchor_fn(
                grid_rows,
                grid_cols,
                hint_channels,
                filter_mode,
                |_, _| Complex64::new(1.0, 0.0),
            )?;
            let pyramid = pyramid_levels.map(|levels| PyramidConfig {
                levels,
                kind: pyramid_kind,
                sigma_ratio,
            });
            write_shu_params(&out_dir, &base.with_hefilter(hef)?.with_pyramid(pyramid))?;
        }
        Command::Forward {
            input,
            output,
            params,
        } => {
            let p = read_shu_params(&params)?;
            write_spatial(&output, &shu_forward(&read_spatial(&input)?, &p)?)?;
        }
        Command::Hints {
            input,
            out_dir,
            params,
        } => {
            let p = read_shu_params(&params)?;
            let hints = shu_hints(&read_spatial(&input)?, &p)?;
            write_pyramid(&out_dir, &hints)?;
            println!(
                "wrote hint maps {:?} to {}",
                hints.resolutions(),
                out_dir.display()
            );
        }
        Command::Maskgen {
            output,
            size: (h, w),
            seed,
        } => {
            let mask = generate_mask(&MaskSpec::new(h, w, seed))?;
            let img = ImageBuffer::new(1, h, w, mask.to_samples())?;
            write_atomic(&output, &img.encode())?;
            println!("unknown fraction {:.4}", mask.unknown_fraction());
        }
        Command::ApplyMask {
            input,
            mask,
            output,
        } => {
            let img = read_spatial(&input)?;
            let mask_img = shu_core::imageio::decode_image(&fs::read(&mask)?)?;
            if mask_img.channels() != 1 {
                return Err(Error::Format("mask must be a single-channel PGM".into()).into());
            }
            let mask = Mask::from_samples(mask_img.height(), mask_img.width(), mask_img.samples())?;
            write_spatial(&output, &apply_mask(&img, &mask)?)?;
        }
        Command::Gradcheck {
            seed,
            size,
            channels,
        } => {
            let reports = run_gradcheck_with(seed, size, channels)?;
            let mut worst = 0.0f64;
            for r in &reports {
                let verdict = if r.passed(GRADCHECK_TOLERANCE) {
                    "ok"
                } else {
                    "FAIL"
                };
                println!(
                    "{:<36} params {:>5}  max rel err {:.3e}  {verdict}",
                    r.stage, r.parameters, r.max_error
                );
                worst = worst.max(r.max_error);
            }
            println!("max relative error {worst:.3e} (tolerance {GRADCHECK_TOLERANCE:e})");
            if reports.iter().any(|r| !r.passed(GRADCHECK_TOLERANCE)) {
                return Err(Failure::Gradcheck);
            }
        }
        Command::Fit {
            out_dir,
            seed,
            steps,
            step_size,
            size,
            batch,
            channels,
            loss,
        } => {
            let target = planted_diagonal_target(seed, channels)?;
            let config = FitConfig {
                step_size,
                steps,
                seed,
                loss,
                size,
                batch,
            };
            let report = fit_planted(&target, &config)?;
            fs::create_dir_all(&out_dir)?;
            let csv: String = std::iter::once("step,loss\n".to_string())
                .chain(
                    report
                        .loss_curve
                        .iter()
                        .enumerate()
                        .map(|(i, l)| format!("{i},{l:e}\n")),
                )
                .collect();
            write_atomic(&out_dir.join("loss_curve.csv"), csv.as_bytes())?;
            write_shu_params(&out_dir.join("recovered"), &report.recovered)?;
            write_shu_params(&out_dir.join("target"), &target)?;
            let (first, last) = (report.loss_curve[0], report.loss_curve[steps]);
            println!(
                "initial loss {first:.6e}  final loss {last:.6e}  ratio {:.3e}",
                last / first
            );
        }
        Command::Spectrum {
            input,
            output,
            channel,
        } => {
            let s = spectrum_of(&input)?;
            write_atomic(&output, &spectrum_image(&s, channel)?.encode())?;
        }
    }
    Ok(())
}

fn spectrum_of(path: &Path) -> Result<shu_core::tensor::SpectralTensor, Error> {
    match read_input(path)? {
        Input::Spatial(t) => forward_rfft2(&t),
        Input::Spectral(s) => Ok(s),
    }
}

fn parse_complex(text: &str) -> Result<Complex64, Error> {
    let bad = || Error::InvalidArgument(format!("bad complex value '{text}', expected re[,im]"));
    let mut parts = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()));
    let re = parts.next().ok_or_else(bad)??;
    let im = parts.next().transpose()?.unwrap_or(0.0);
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// Stored half spectrum of one channel, `log(1 + |v|)` stretched linearly
/// from its minimum (0) to its maximum (255). A flat spectrum maps to 0.
fn spectrum_image(
    s: &shu_core::tensor::SpectralTensor,
    channel: usize,
) -> Result<ImageBuffer, Error> {
    let (c, h, w) = s.dims();
    if channel >= c {
        return Err(Error::Shape(format!(
            "channel {channel} out of range for {c} channels"
        )));
    }
    let logs: Vec<f64> = s
        .channel(channel)
        .iter()
        .map(|v| v.norm().ln_1p())
        .collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let samples = logs
        .iter()
        .map(|v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    ImageBuffer::new(1, h, w, samples)
}
