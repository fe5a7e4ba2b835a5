use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use codec_lens::tensor::load_image;
use codec_lens::ImagePlane;
use serde::Serialize;

/// Paths matching `pattern`, sorted. No matches is an error.
pub fn resolve_images(pattern: &str) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in glob::glob(pattern).with_context(|| format!("invalid --images pattern `{pattern}`"))? {
        let path = entry.context("reading --images match")?;
        if path.is_file() {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        bail!("--images pattern `{pattern}` matched no files");
    }
    paths.sort();
    Ok(paths)
}

pub fn load_images(paths: &[PathBuf]) -> Result<Vec<ImagePlane>> {
    paths
        .iter()
        .map(|p| load_image(p).with_context(|| format!("loading image {}", p.display())))
        .collect()
}

/// Image files in `dir` with a supported extension, sorted by name.
pub fn images_in_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(str::to_ascii_lowercase)
                    .as_deref(),
                Some("png" | "pgm" | "ppm" | "pnm")
            )
        })
        .collect();
    if paths.is_empty() {
        bail!("no png/pgm/ppm images in {}", dir.display());
    }
    paths.sort();
    Ok(paths)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

/// JSON to `out`, or to stdout when no path is given.
pub fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            print!("{}", to_json(value)?);
            Ok(())
        }
    }
}
