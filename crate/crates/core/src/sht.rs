//! `.sht` binary tensor container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! b"SHT1" | u8 kind (0 real, 1 complex) | u8 ndim (= 3) | u64 d0 | u64 d1 | u64 d2 | payload
//! ```
//!
//! The payload is row-major `f64`; complex values are interleaved `(re, im)`.
//! Spatial tensors store `(C, H, W)`, spectra store `(C, H, W/2 + 1)`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{SpatialTensor, SpectralTensor};

pub const SHT_MAGIC: &[u8; 4] = b"SHT1";
const HEADER_LEN: usize = 4 + 1 + 1 + 3 * 8;

#[derive(Debug, Clone, PartialEq)]
pub enum ShtData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// A raw three-dimensional array as stored in a `.sht` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ShtArray {
    pub dims: [usize; 3],
    pub data: ShtData,
}

impl ShtArray {
    pub fn real(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        check_len(dims, data.len())?;
        Ok(Self {
            dims,
            data: ShtData::Real(data),
        })
    }

    pub fn complex(dims: [usize; 3], data: Vec<Complex64>) -> Result<Self> {
        check_len(dims, data.len())?;
        Ok(Self {
            dims,
            data: ShtData::Complex(data),
        })
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.data, ShtData::Complex(_))
    }

    pub fn encode(&self) -> Vec<u8> {
        let count = self.dims.iter().product::<usize>();
        let per = if self.is_complex() { 16 } else { 8 };
        let mut out = Vec::with_capacity(HEADER_LEN + count * per);
        out.extend_from_slice(SHT_MAGIC);
        out.push(u8::from(self.is_complex()));
        out.push(3);
        for d in self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.data {
            ShtData::Real(values) => {
                for v in values {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            ShtData::Complex(values) => {
                for v in values {
                    out.extend_from_slice(&v.re.to_le_bytes());
                    out.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
        out
    }

    /// Decodes a container occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let (array, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(Error::format(format!(
                "{} trailing bytes after payload",
                bytes.len() - used
            )));
        }
        Ok(array)
    }

    /// Decodes a container at the start of `bytes`, returning it with the
    /// number of bytes consumed.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format("truncated .sht header"));
        }
        if &bytes[..4] != SHT_MAGIC {
            return Err(Error::format("bad .sht magic"));
        }
        let kind = bytes[4];
        if kind > 1 {
            return Err(Error::format(format!("unknown .sht kind {kind}")));
        }
        if bytes[5] != 3 {
            return Err(Error::format(format!("unsupported .sht ndim {}", bytes[5])));
        }
        let mut dims = [0usize; 3];
        for (n, d) in dims.iter_mut().enumerate() {
            let raw = u64::from_le_bytes(bytes[6 + 8 * n..14 + 8 * n].try_into().expect("8 bytes"));
            *d = usize::try_from(raw).map_err(|_| Error::format("dimension overflows usize"))?;
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format("dimension product overflows"))?;
        let per = if kind == 1 { 16 } else { 8 };
        let payload_len = count
            .checked_mul(per)
            .ok_or_else(|| Error::format("payload size overflows"))?;
        let end = HEADER_LEN + payload_len;
        if bytes.len() < end {
            return Err(Error::format(format!(
                "truncated .sht payload: need {payload_len} bytes, have {}",
                bytes.len() - HEADER_LEN
            )));
        }
        let mut values = bytes[HEADER_LEN..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let data = if kind == 1 {
            let mut out = Vec::with_capacity(count);
            while let (Some(re), Some(im)) = (values.next(), values.next()) {
                out.push(Complex64::new(re, im));
            }
            ShtData::Complex(out)
        } else {
            ShtData::Real(values.collect())
        };
        Ok((Self { dims, data }, end))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }

    pub fn into_spatial(self) -> Result<SpatialTensor> {
        match self.data {
            ShtData::Real(values) => {
                SpatialTensor::new(self.dims[0], self.dims[1], self.dims[2], values)
            }
            ShtData::Complex(_) => Err(Error::format("expected a real tensor, found complex")),
        }
    }

    pub fn into_spectral(self) -> Result<SpectralTensor> {
        match self.data {
            ShtData::Complex(values) => {
                SpectralTensor::new(self.dims[0], self.dims[1], self.dims[2], values)
            }
            ShtData::Real(_) => Err(Error::format("expected a complex tensor, found real")),
        }
    }
}

fn check_len(dims: [usize; 3], len: usize) -> Result<()> {
    if dims.iter().product::<usize>() != len {
        return Err(Error::shape(format!(
            "{len} values do not fill dims {dims:?}"
        )));
    }
    Ok(())
}

impl From<&SpatialTensor> for ShtArray {
    fn from(t: &SpatialTensor) -> Self {
        let (c, h, w) = t.dims();
        Self {
            dims: [c, h, w],
            data: ShtData::Real(t.data().to_vec()),
        }
    }
}

impl From<&SpectralTensor> for ShtArray {
    fn from(t: &SpectralTensor) -> Self {
        let (c, h, w) = t.dims();
        Self {
            dims: [c, h, w],
            data: ShtData::Complex(t.data().to_vec()),
        }
    }
}
