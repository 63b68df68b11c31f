//! Free-form inpainting masks: random brush strokes plus rectangles.
//!
//! Known pixels are 1 and unknown (to be completed) pixels are 0. All
//! randomness comes from a [`CounterRng`] keyed by the spec's seed, consumed
//! in this order:
//!
//! 1. stroke count;
//! 2. per stroke: width, vertex count, start column, start row, then per
//!    vertex an angle (`unit() * 2 pi`) and a segment length;
//! 3. full-size rectangle count, then per rectangle: height, width, top, left;
//! 4. half-size rectangle count, then the same four draws per rectangle.
//!
//! Each stroke is a random walk of `vertex count` segments. Segment end
//! points are clamped to the canvas; pixels whose centre lies within half
//! the stroke width of a segment are erased, which gives round caps and
//! joints.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::tensor::SpatialTensor;

/// Inclusive integer range for a discrete uniform draw.
pub type Range = (u32, u32);

/// Configuration of the free-form generator.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub height: usize,
    pub width: usize,
    pub stroke_width_range: Range,
    pub stroke_count_range: Range,
    pub full_rect_count_range: Range,
    pub half_rect_count_range: Range,
    pub stroke_vertex_range: Range,
    /// Segment length in pixels; defaults to `(height / 16, height / 4)`.
    pub segment_length_range: Range,
    pub seed: u64,
}

impl MaskSpec {
    pub const MIN_SIDE: usize = 64;

    pub fn new(height: usize, width: usize, seed: u64) -> Self {
        Self {
            height,
            width,
            stroke_width_range: (12, 48),
            stroke_count_range: (0, 20),
            full_rect_count_range: (0, 5),
            half_rect_count_range: (0, 10),
            stroke_vertex_range: (4, 12),
            segment_length_range: ((height / 16) as u32, (height / 4) as u32),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.height < Self::MIN_SIDE || self.width < Self::MIN_SIDE {
            return Err(Error::invalid(format!(
                "mask canvas {}x{} is smaller than {m}x{m}",
                self.height,
                self.width,
                m = Self::MIN_SIDE
            )));
        }
        for (name, (lo, hi)) in [
            ("stroke width", self.stroke_width_range),
            ("stroke count", self.stroke_count_range),
            ("full rectangle count", self.full_rect_count_range),
            ("half rectangle count", self.half_rect_count_range),
            ("stroke vertex", self.stroke_vertex_range),
            ("segment length", self.segment_length_range),
        ] {
            if lo > hi {
                return Err(Error::invalid(format!("{name} range {lo}..={hi} is empty")));
            }
        }
        Ok(())
    }
}

/// What the generator sampled for one mask.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MaskProvenance {
    pub stroke_widths: Vec<u32>,
    pub stroke_vertices: Vec<u32>,
    pub full_rects: u32,
    pub half_rects: u32,
}

impl MaskProvenance {
    pub fn stroke_count(&self) -> u32 {
        self.stroke_widths.len() as u32
    }
}

/// Binary `H x W` mask; 1 = known, 0 = unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    values: Vec<u8>,
    provenance: Option<MaskProvenance>,
}

impl Mask {
    pub fn new(height: usize, width: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::shape(format!(
                "{} mask values do not fill {height}x{width}",
                values.len()
            )));
        }
        if values.iter().any(|v| *v > 1) {
            return Err(Error::invalid("mask values must be 0 or 1"));
        }
        Ok(Self {
            height,
            width,
            values,
            provenance: None,
        })
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![1; height * width],
            provenance: None,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.values[i * self.width + j]
    }

    pub fn provenance(&self) -> Option<&MaskProvenance> {
        self.provenance.as_ref()
    }

    /// Fraction of pixels that are unknown (0).
    pub fn unknown_fraction(&self) -> f64 {
        let unknown = self.values.iter().filter(|v| **v == 0).count();
        unknown as f64 / self.values.len() as f64
    }

    fn erase_rect(&mut self, top: usize, left: usize, h: usize, w: usize) {
        for row in self.values.chunks_exact_mut(self.width).skip(top).take(h) {
            row[left..left + w].fill(0);
        }
    }

    /// Erases pixels whose centre is within `radius` of segment `p`-`q`.
    fn erase_capsule(&mut self, p: (f64, f64), q: (f64, f64), radius: f64) {
        let (px, py) = p;
        let (dx, dy) = (q.0 - px, q.1 - py);
        let len2 = dx * dx + dy * dy;
        let len = len2.sqrt();
        let y_lo = (py.min(q.1) - radius).floor().max(0.0) as usize;
        let y_hi = (py.max(q.1) + radius).ceil().min((self.height - 1) as f64) as usize;
        for y in y_lo..=y_hi {
            let yf = y as f64;
            let mut span: Option<(f64, f64)> = None;
            let mut widen = |iv: Option<(f64, f64)>| {
                if let Some((a, b)) = iv {
                    span = Some(match span {
                        Some((lo, hi)) => (lo.min(a), hi.max(b)),
                        None => (a, b),
                    });
                }
            };
            widen(disc_span(p, radius, yf));
            widen(disc_span(q, radius, yf));
            if len2 > 0.0 {
                // 0 <= (X - P).d <= |d|^2 and |d x (X - P)| <= r |d|, both
                // linear in x along this row
                let along = linear_span(dx, (yf - py) * dy - px * dx, 0.0, len2);
                let across =
                    linear_span(-dy, dx * (yf - py) + dy * px, -radius * len, radius * len);
                widen(intersect(along, across));
            }
            if let Some((lo, hi)) = span {
                let x_lo = lo.ceil().max(0.0);
                let x_hi = hi.floor().min((self.width - 1) as f64);
                if x_lo <= x_hi {
                    let row = &mut self.values[y * self.width..(y + 1) * self.width];
                    row[x_lo as usize..=x_hi as usize].fill(0);
                }
            }
        }
    }

    /// Encodes as 8-bit samples, 0 for unknown and 255 for known.
    pub fn to_samples(&self) -> Vec<u8> {
        self.values.iter().map(|v| v * 255).collect()
    }

    /// Decodes 8-bit samples; values >= 128 are known.
    pub fn from_samples(height: usize, width: usize, samples: &[u8]) -> Result<Self> {
        Self::new(
            height,
            width,
            samples.iter().map(|s| u8::from(*s >= 128)).collect(),
        )
    }
}

fn disc_span(centre: (f64, f64), radius: f64, y: f64) -> Option<(f64, f64)> {
    let dy = y - centre.1;
    let rem = radius * radius - dy * dy;
    (rem >= 0.0).then(|| {
        let half = rem.sqrt();
        (centre.0 - half, centre.0 + half)
    })
}

/// Solutions of `lo <= a x + b <= hi`.
fn linear_span(a: f64, b: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if a == 0.0 {
        return (lo <= b && b <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (x0, x1) = ((lo - b) / a, (hi - b) / a);
    Some((x0.min(x1), x0.max(x1)))
}

fn intersect(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> Option<(f64, f64)> {
    let ((a0, a1), (b0, b1)) = (a?, b?);
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    (lo <= hi).then_some((lo, hi))
}

fn draw_range(rng: &mut CounterRng, range: Range) -> u32 {
    rng.uniform_int(range.0 as u64, range.1 as u64) as u32
}

/// Generates one free-form mask. Deterministic in `spec`, seed included.
pub fn generate_mask(spec: &MaskSpec) -> Result<Mask> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut rng = CounterRng::new(spec.seed);
    let mut mask = Mask::ones(h, w);
    let mut prov = MaskProvenance::default();

    let strokes = draw_range(&mut rng, spec.stroke_count_range);
    for _ in 0..strokes {
        let stroke_width = draw_range(&mut rng, spec.stroke_width_range);
        let vertices = draw_range(&mut rng, spec.stroke_vertex_range);
        let mut at = (
            rng.uniform_int(0, (w - 1) as u64) as f64,
            rng.uniform_int(0, (h - 1) as u64) as f64,
        );
        let radius = stroke_width as f64 / 2.0;
        for _ in 0..vertices {
            let angle = rng.unit() * TAU;
            let length = draw_range(&mut rng, spec.segment_length_range) as f64;
            let next = (
                (at.0 + length * angle.cos()).clamp(0.0, (w - 1) as f64),
                (at.1 + length * angle.sin()).clamp(0.0, (h - 1) as f64),
            );
            mask.erase_capsule(at, next, radius);
            at = next;
        }
        prov.stroke_widths.push(stroke_width);
        prov.stroke_vertices.push(vertices);
    }

    prov.full_rects = draw_range(&mut rng, spec.full_rect_count_range);
    for _ in 0..prov.full_rects {
        erase_random_rect(&mut mask, &mut rng, h, w);
    }
    prov.half_rects = draw_range(&mut rng, spec.half_rect_count_range);
    for _ in 0..prov.half_rects {
        erase_random_rect(&mut mask, &mut rng, (h / 2).max(1), (w / 2).max(1));
    }

    mask.provenance = Some(prov);
    Ok(mask)
}

fn erase_random_rect(mask: &mut Mask, rng: &mut CounterRng, max_h: usize, max_w: usize) {
    let rh = rng.uniform_int(1, max_h as u64) as usize;
    let rw = rng.uniform_int(1, max_w as u64) as usize;
    let top = rng.uniform_int(0, (mask.height - rh) as u64) as usize;
    let left = rng.uniform_int(0, (mask.width - rw) as u64) as usize;
    mask.erase_rect(top, left, rh, rw);
}

/// Generates masks for `seeds` with the rest of `spec` fixed, spreading the
/// work over the available cores. Output order follows `seeds`.
pub fn generate_masks(spec: &MaskSpec, seeds: &[u64]) -> Result<Vec<Mask>> {
    spec.validate()?;
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(seeds.len().max(1));
    let chunk = seeds.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&s| generate_mask(&spec.with_seed(s)))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(seeds.len());
        for h in handles {
            out.extend(h.join().expect("mask worker panicked")?);
        }
        Ok(out)
    })
}

/// Elementwise `image * mask`, broadcast over channels. Unknown pixels
/// become exactly 0.
pub fn apply_mask(image: &SpatialTensor, mask: &Mask) -> Result<SpatialTensor> {
    if image.height() != mask.height || image.width() != mask.width {
        return Err(Error::shape(format!(
            "image {}x{} does not match mask {}x{}",
            image.height(),
            image.width(),
            mask.height,
            mask.width
        )));
    }
    let plane = mask.values.len();
    let data = image
        .data()
        .iter()
        .enumerate()
        .map(|(n, v)| if mask.values[n % plane] == 0 { 0.0 } else { *v })
        .collect();
    SpatialTensor::new(image.channels(), image.height(), image.width(), data)
}

/// Batch summary of generated masks.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskStatistics {
    pub unknown_fractions: Vec<f64>,
    /// Observed `(min, max)` across masks that carry provenance.
    pub stroke_width: Option<Range>,
    pub stroke_count: Option<Range>,
    pub full_rects: Option<Range>,
    pub half_rects: Option<Range>,
    pub strictly_binary: bool,
}

fn widen(acc: &mut Option<Range>, v: Range) {
    *acc = Some(match *acc {
        Some((lo, hi)) => (lo.min(v.0), hi.max(v.1)),
        None => v,
    });
}

impl MaskStatistics {
    /// Folds another batch into this one, keeping mask order.
    pub fn merge(&mut self, other: &MaskStatistics) {
        self.unknown_fractions
            .extend_from_slice(&other.unknown_fractions);
        for (acc, v) in [
            (&mut self.stroke_width, other.stroke_width),
            (&mut self.stroke_count, other.stroke_count),
            (&mut self.full_rects, other.full_rects),
            (&mut self.half_rects, other.half_rects),
        ] {
            if let Some(v) = v {
                widen(acc, v);
            }
        }
        self.strictly_binary &= other.strictly_binary;
    }
}

/// Unknown-area fraction per mask and the ranges of sampled quantities
/// recorded by the generator.
pub fn mask_statistics(masks: &[Mask]) -> Result<MaskStatistics> {
    if masks.is_empty() {
        return Err(Error::invalid("mask statistics need at least one mask"));
    }
    let mut stats = MaskStatistics {
        unknown_fractions: Vec::with_capacity(masks.len()),
        stroke_width: None,
        stroke_count: None,
        full_rects: None,
        half_rects: None,
        strictly_binary: true,
    };
    for m in masks {
        stats.unknown_fractions.push(m.unknown_fraction());
        stats.strictly_binary &= m.values.iter().all(|v| *v <= 1);
        if let Some(p) = &m.provenance {
            for &sw in &p.stroke_widths {
                widen(&mut stats.stroke_width, (sw, sw));
            }
            widen(
                &mut stats.stroke_count,
                (p.stroke_count(), p.stroke_count()),
            );
            widen(&mut stats.full_rects, (p.full_rects, p.full_rects));
            widen(&mut stats.half_rects, (p.half_rects, p.half_rects));
        }
    }
    Ok(stats)
}
