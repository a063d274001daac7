//! Image directory loading and cleanup-on-failure output tracking.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fidtrust::npy::{read_npy, NpyArray};
use fidtrust::ImageTensor;
use ndarray::Array3;

use crate::pnm;

pub const IMAGE_EXTENSIONS: &[&str] = &["pgm", "ppm", "npy"];

/// Load one image file: `.pgm` / `.ppm` (8-bit binary) or `.npy`
/// (`H x W` or `H x W x C` floats).
pub fn read_image(path: &Path) -> Result<ImageTensor> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("pgm") | Some("ppm") => pnm::read_pnm(path),
        Some("npy") => read_npy_image(path),
        _ => bail!(
            "unsupported image extension for {} (expected {:?})",
            path.display(),
            IMAGE_EXTENSIONS
        ),
    }
}

/// `.npy` images get a nominal range inferred from the data: `(0, 1)`
/// when all values fit it, `(0, 255)` when they fit that, otherwise the
/// exact data extent.
fn read_npy_image(path: &Path) -> Result<ImageTensor> {
    let arr = read_npy(path)?;
    let (shape, data) = match arr {
        NpyArray::F64 { shape, data } | NpyArray::F32 { shape, data } => (shape, data),
    };
    let (h, w, c) = match shape.as_slice() {
        [h, w] => (*h, *w, 1usize),
        [h, w, c] => (*h, *w, *c),
        other => bail!(
            "npy image {} must be rank 2 or 3, got rank {}",
            path.display(),
            other.len()
        ),
    };
    let px = Array3::from_shape_vec((h, w, c), data)
        .with_context(|| format!("reshaping {}", path.display()))?;
    let lo = px.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = px.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let range = if lo >= 0.0 && hi <= 1.0 {
        (0.0, 1.0)
    } else if lo >= 0.0 && hi <= 255.0 {
        (0.0, 255.0)
    } else if lo < hi {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    };
    Ok(ImageTensor::new(px, range)?)
}

/// All images in a directory, sorted by file name for a stable order.
pub fn read_image_dir(dir: &Path) -> Result<Vec<(String, ImageTensor)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!(
            "no {:?} images found in {}",
            IMAGE_EXTENSIONS,
            dir.display()
        );
    }
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        out.push((name, read_image(&path)?));
    }
    Ok(out)
}

/// Tracks files written during one command; on failure every tracked
/// path is removed so a nonzero exit leaves no partial outputs.
#[derive(Default)]
pub struct OutputGuard {
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn track(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn commit(mut self) {
        self.committed = true;
        self.written.clear();
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}
