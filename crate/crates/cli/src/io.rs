//! Reading and writing the file formats the subcommands exchange.

use std::fs;
use std::path::Path;

use shu_core::container::write_atomic;
use shu_core::imageio::{decode_image, from_tensor, to_tensor};
use shu_core::sht::ShtArray;
use shu_core::tensor::{SpatialTensor, SpectralTensor};
use shu_core::Result;

/// A decoded input file.
pub enum Input {
    Spatial(SpatialTensor),
    Spectral(SpectralTensor),
}

/// Reads a `.sht` tensor or a binary PGM/PPM image, chosen by magic bytes.
pub fn read_input(path: &Path) -> Result<Input> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        return Ok(Input::Spatial(to_tensor(&decode_image(&bytes)?)?));
    }
    let array = ShtArray::decode(&bytes)?;
    Ok(if array.is_complex() {
        Input::Spectral(array.into_spectral()?)
    } else {
        Input::Spatial(array.into_spatial()?)
    })
}

pub fn read_spatial(path: &Path) -> Result<SpatialTensor> {
    match read_input(path)? {
        Input::Spatial(t) => Ok(t),
        Input::Spectral(_) => Err(shu_core::Error::Format(format!(
            "{} holds a spectrum, expected a real tensor or image",
            path.display()
        ))),
    }
}

pub fn read_spectral(path: &Path) -> Result<SpectralTensor> {
    match read_input(path)? {
        Input::Spectral(s) => Ok(s),
        Input::Spatial(_) => Err(shu_core::Error::Format(format!(
            "{} holds a real tensor, expected a spectrum",
            path.display()
        ))),
    }
}

fn wants_image(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "ppm")
    )
}

/// Writes a real tensor as an image when the extension is `.pgm`/`.ppm`,
/// otherwise as `.sht`.
pub fn write_spatial(path: &Path, t: &SpatialTensor) -> Result<()> {
    let bytes = if wants_image(path) {
        from_tensor(t)?.encode()
    } else {
        ShtArray::from(t).encode()
    };
    write_atomic(path, &bytes)
}

pub fn write_spectral(path: &Path, s: &SpectralTensor) -> Result<()> {
    write_atomic(path, &ShtArray::from(s).encode())
}
