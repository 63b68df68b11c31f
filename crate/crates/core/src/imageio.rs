//! Binary PGM (P5) / PPM (P6) images and their tensor mapping.
//!
//! Samples map to `[-1, 1]` through `v / 127.5 - 1`; the reverse clamps to
//! `[-1, 1]` and rounds half away from zero, so 8-bit data round-trips
//! exactly.

use crate::error::{Error, Result};
use crate::tensor::SpatialTensor;

/// 8-bit image, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    channels: usize,
    height: usize,
    width: usize,
    samples: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(channels: usize, height: usize, width: usize, samples: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::shape(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if samples.len() != channels * height * width {
            return Err(Error::shape(format!(
                "{} samples do not fill {height}x{width}x{channels}",
                samples.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            samples,
        })
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

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// Encodes as P5 (1 channel) or P6 (3 channels), maxval 255.
    pub fn encode(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.samples);
        out
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(format!("missing {what} in image header")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::format(format!("{what} out of range")))
    }
}

/// Parses a binary PGM or PPM payload.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    if bytes.len() < 2 {
        return Err(Error::format("truncated image header"));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(Error::format("not a binary PGM/PPM (expected P5 or P6)")),
    };
    let mut rd = HeaderReader { bytes, pos: 2 };
    let width = rd.number("width")?;
    let height = rd.number("height")?;
    let maxval = rd.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(format!(
            "only maxval 255 is supported, got {maxval}"
        )));
    }
    match bytes.get(rd.pos) {
        Some(b) if b.is_ascii_whitespace() => rd.pos += 1,
        _ => return Err(Error::format("missing whitespace after maxval")),
    }
    let count = channels * width * height;
    let payload = &bytes[rd.pos..];
    if payload.len() < count {
        return Err(Error::format(format!(
            "truncated image payload: need {count} bytes, have {}",
            payload.len()
        )));
    }
    ImageBuffer::new(channels, height, width, payload[..count].to_vec())
}

/// Maps samples to `[-1, 1]`; channels become tensor channels.
pub fn to_tensor(img: &ImageBuffer) -> Result<SpatialTensor> {
    let (c, h, w) = (img.channels, img.height, img.width);
    SpatialTensor::from_fn(c, h, w, |ch, i, j| {
        img.samples[(i * w + j) * c + ch] as f64 / 127.5 - 1.0
    })
}

/// Inverse of [`to_tensor`] with clamping; total on any finite tensor.
pub fn from_tensor(t: &SpatialTensor) -> Result<ImageBuffer> {
    let (c, h, w) = t.dims();
    if c != 1 && c != 3 {
        return Err(Error::shape(format!(
            "images have 1 or 3 channels, got {c}"
        )));
    }
    let mut samples = vec![0u8; c * h * w];
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                samples[(i * w + j) * c + ch] = quantize(t.get(ch, i, j));
            }
        }
    }
    ImageBuffer::new(c, h, w, samples)
}

fn quantize(v: f64) -> u8 {
    // f64::round is half away from zero
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}
