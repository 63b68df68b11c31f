//! Directory containers for pyramids and unit parameters, plus atomic file
//! output.
//!
//! A pyramid directory holds `level_<res>.sht` (one real tensor per level,
//! `<res>` being the level height) and `pyramid.meta`. A parameter
//! directory holds `mix.sht`, `hefilter.sht` and `shu.meta`. Meta files are
//! `key=value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hefilter::HeFilterParams;
use crate::sht::{ShtArray, ShtData};
use crate::shu::{ChannelMix, MixMode, PyramidConfig, ReluMode, ShuParams};
use crate::split::{SplitKind, SplitPyramid};

pub const PYRAMID_META: &str = "pyramid.meta";
pub const SHU_META: &str = "shu.meta";
pub const MIX_FILE: &str = "mix.sht";
pub const HEFILTER_FILE: &str = "hefilter.sht";

/// Writes `bytes` to a temporary sibling of `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

/// Builds a directory next to `dir`, then swaps it into place. An existing
/// `dir` is replaced only if it is empty or holds a container of the same
/// kind (recognized by `meta_name`).
fn write_dir_atomic(
    dir: &Path,
    meta_name: &str,
    fill: impl FnOnce(&Path) -> Result<()>,
) -> Result<()> {
    if dir.exists() {
        let replaceable =
            dir.is_dir() && (dir.join(meta_name).is_file() || fs::read_dir(dir)?.next().is_none());
        if !replaceable {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                format!(
                    "{} exists and is not a {meta_name} container",
                    dir.display()
                ),
            )));
        }
    }
    let tmp = temp_sibling(dir);
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    let result = fill(&tmp).and_then(|()| {
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        Ok(fs::rename(&tmp, dir)?)
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    result
}

fn write_meta(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let text: String = entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    fs::write(path, text)?;
    Ok(())
}

struct Meta {
    file: PathBuf,
    entries: BTreeMap<String, String>,
}

impl Meta {
    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut entries = BTreeMap::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::format(format!("{}: malformed line '{line}'", path.display()))
            })?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self {
            file: path.to_path_buf(),
            entries,
        })
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::format(format!("{}: missing key '{key}'", self.file.display())))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| {
            Error::format(format!(
                "{}: bad value '{raw}' for '{key}'",
                self.file.display()
            ))
        })
    }
}

/// File name of a pyramid level of height `res`.
pub fn level_file_name(res: usize) -> String {
    format!("level_{res}.sht")
}

pub fn write_pyramid(dir: &Path, p: &SplitPyramid) -> Result<()> {
    let (c, h, w) = p.source_dims;
    write_dir_atomic(dir, PYRAMID_META, |tmp| {
        for level in &p.levels {
            ShtArray::from(level)
                .write_to(fs::File::create(tmp.join(level_file_name(level.height())))?)?;
        }
        write_meta(
            &tmp.join(PYRAMID_META),
            &[
                ("kind", p.kind.to_string()),
                ("sigma_ratio", p.sigma_ratio.to_string()),
                ("levels", p.levels.len().to_string()),
                ("channels", c.to_string()),
                ("height", h.to_string()),
                ("width", w.to_string()),
            ],
        )
    })
}

pub fn read_pyramid(dir: &Path) -> Result<SplitPyramid> {
    let meta = Meta::read(&dir.join(PYRAMID_META))?;
    let kind: SplitKind = meta.parse("kind")?;
    let sigma_ratio: f64 = meta.parse("sigma_ratio")?;
    let n_levels: usize = meta.parse("levels")?;
    let source_dims = (
        meta.parse("channels")?,
        meta.parse("height")?,
        meta.parse("width")?,
    );
    if n_levels == 0 || n_levels >= usize::BITS as usize {
        return Err(Error::format(format!("implausible level count {n_levels}")));
    }
    let levels = (0..n_levels)
        .map(|n| {
            let path = dir.join(level_file_name(source_dims.1 >> n));
            ShtArray::read_from(fs::File::open(&path)?)?.into_spatial()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitPyramid {
        kind,
        sigma_ratio,
        source_dims,
        levels,
    })
}

pub fn write_shu_params(dir: &Path, p: &ShuParams) -> Result<()> {
    let k = p.hint_channels();
    let mix_array = match p.mix() {
        ChannelMix::Complex { weights, .. } => ShtArray::complex([1, k, k], weights.clone())?,
        ChannelMix::Stacked { weights, .. } => ShtArray::real([1, 2 * k, 2 * k], weights.clone())?,
    };
    let mut entries = vec![
        ("total_channels", p.total_channels().to_string()),
        ("hint_channels", k.to_string()),
        ("relu_mode", p.relu_mode().as_str().to_string()),
        ("mix_mode", p.mix().mode().as_str().to_string()),
    ];
    match p.pyramid() {
        Some(cfg) => entries.extend([
            ("pyramid", "on".to_string()),
            ("pyramid_levels", cfg.levels.to_string()),
            ("pyramid_kind", cfg.kind.to_string()),
            ("pyramid_sigma_ratio", cfg.sigma_ratio.to_string()),
        ]),
        None => entries.push(("pyramid", "off".to_string())),
    }
    write_dir_atomic(dir, SHU_META, |tmp| {
        fs::write(tmp.join(MIX_FILE), mix_array.encode())?;
        fs::write(tmp.join(HEFILTER_FILE), p.hefilter().to_bytes())?;
        write_meta(&tmp.join(SHU_META), &entries)
    })
}

pub fn read_shu_params(dir: &Path) -> Result<ShuParams> {
    let meta = Meta::read(&dir.join(SHU_META))?;
    let total: usize = meta.parse("total_channels")?;
    let k: usize = meta.parse("hint_channels")?;
    if meta.get("relu_mode")? != ReluMode::SplitReIm.as_str() {
        return Err(Error::format(format!(
            "unsupported relu_mode '{}'",
            meta.get("relu_mode")?
        )));
    }
    let mix_mode: MixMode = meta.parse("mix_mode")?;
    let pyramid = match meta.get("pyramid")? {
        "off" => None,
        "on" => Some(PyramidConfig {
            levels: meta.parse("pyramid_levels")?,
            kind: meta.parse("pyramid_kind")?,
            sigma_ratio: meta.parse("pyramid_sigma_ratio")?,
        }),
        other => return Err(Error::format(format!("bad pyramid flag '{other}'"))),
    };
    let mix_array = ShtArray::decode(&fs::read(dir.join(MIX_FILE))?)?;
    let mix = match (mix_mode, mix_array.data) {
        (MixMode::Complex, ShtData::Complex(w)) if mix_array.dims == [1, k, k] => {
            ChannelMix::complex(k, w)?
        }
        (MixMode::Stacked, ShtData::Real(w)) if mix_array.dims == [1, 2 * k, 2 * k] => {
            ChannelMix::stacked(k, w)?
        }
        _ => {
            return Err(Error::format(format!(
                "mix.sht does not hold a {} mix for {k} channels",
                mix_mode.as_str()
            )))
        }
    };
    let hefilter = HeFilterParams::from_bytes(&fs::read(dir.join(HEFILTER_FILE))?)?;
    ShuParams::new(total, mix, hefilter, pyramid)
}
