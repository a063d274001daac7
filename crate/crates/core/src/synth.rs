//! Seeded synthetic image families, so every experiment can run with
//! zero external data. Each family is a [`SyntheticGenerator`] selected
//! by name; real datasets replace them through the CLI.
//!
//! Image `i` of a set draws from the stream
//! `(seed, derive_stream(&[4, family_id, i]))`, so a set is a pure
//! function of `(seed, count, size, params)` and two sets generated with
//! the same seed share their leading images — the `mix` family relies on
//! this to build nested mixtures whose common rows are bit-identical
//! across mixture fractions.

use std::collections::BTreeMap;

use ndarray::Array3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::rng::{derive_stream, CounterRng};

pub const GENERATOR_NAMES: &[&str] = &["blobs", "field", "stripes", "mix"];

const FAMILY_BLOBS: u64 = 0;
const FAMILY_FIELD: u64 = 1;
const FAMILY_STRIPES: u64 = 2;

/// A parsed synthetic-set request: `kind:count[:HxWxC][:key=val,...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kind: String,
    pub count: usize,
    pub size: (usize, usize, usize),
    pub params: BTreeMap<String, f64>,
}

impl SynthSpec {
    pub fn new(kind: &str, count: usize, size: (usize, usize, usize)) -> Self {
        Self {
            kind: kind.to_string(),
            count,
            size,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Parse `blobs:16`, `field:256:48x48x3`, `mix:128:frac=0.5`, ...
    pub fn parse(text: &str, default_size: (usize, usize, usize)) -> Result<Self> {
        let mut parts = text.split(':');
        let kind = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::InvalidParameter("empty synthetic spec".into()))?;
        let count = parts
            .next()
            .ok_or_else(|| {
                Error::InvalidParameter(format!("synthetic spec '{text}' is missing a count"))
            })?
            .parse::<usize>()
            .map_err(|_| Error::InvalidParameter(format!("bad count in spec '{text}'")))?;

        let mut spec = Self::new(kind, count, default_size);
        for segment in parts {
            if segment.contains('=') {
                for pair in segment.split(',') {
                    let (key, value) = pair.split_once('=').ok_or_else(|| {
                        Error::InvalidParameter(format!("bad parameter '{pair}' in '{text}'"))
                    })?;
                    let value = value.parse::<f64>().map_err(|_| {
                        Error::InvalidParameter(format!("bad value in '{pair}'"))
                    })?;
                    spec.params.insert(key.trim().to_string(), value);
                }
            } else {
                spec.size = parse_size(segment)?;
            }
        }
        Ok(spec)
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

pub fn parse_size(text: &str) -> Result<(usize, usize, usize)> {
    let dims: Vec<usize> = text
        .split('x')
        .map(|d| d.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidParameter(format!("bad size '{text}' (expected HxWxC)")))?;
    match dims.as_slice() {
        [h, w] => Ok((*h, *w, 1)),
        [h, w, c] => Ok((*h, *w, *c)),
        _ => Err(Error::InvalidParameter(format!(
            "bad size '{text}' (expected HxW or HxWxC)"
        ))),
    }
}

/// One synthetic image family.
pub trait SyntheticGenerator: Send + Sync {
    fn name(&self) -> &'static str;
    fn generate_one(&self, spec: &SynthSpec, seed: u64, index: usize) -> ImageTensor;
}

/// Look a family up by name.
pub fn build_generator(kind: &str) -> Result<Box<dyn SyntheticGenerator>> {
    match kind {
        "blobs" => Ok(Box::new(Blobs)),
        "field" => Ok(Box::new(Field)),
        "stripes" => Ok(Box::new(Stripes)),
        "mix" => Ok(Box::new(Mix)),
        other => Err(Error::InvalidParameter(format!(
            "unknown synthetic family '{other}' (expected one of {GENERATOR_NAMES:?})"
        ))),
    }
}

/// Generate a whole set; image order is by index, independent of
/// parallel scheduling.
pub fn generate(spec: &SynthSpec, seed: u64) -> Result<Vec<ImageTensor>> {
    let (h, w, c) = spec.size;
    if h == 0 || w == 0 || (c != 1 && c != 3) {
        return Err(Error::InvalidParameter(format!(
            "bad synthetic image size {h}x{w}x{c}"
        )));
    }
    let generator = build_generator(&spec.kind)?;
    Ok((0..spec.count)
        .into_par_iter()
        .map(|i| generator.generate_one(spec, seed, i))
        .collect())
}

/// Smooth Gaussian bumps (2 to 4) on a dark background, per-bump channel
/// gains, clipped to `[0, 1]`. The content-rich family used by the noise
/// sweeps.
struct Blobs;

impl SyntheticGenerator for Blobs {
    fn name(&self) -> &'static str {
        "blobs"
    }

    fn generate_one(&self, spec: &SynthSpec, seed: u64, index: usize) -> ImageTensor {
        let (h, w, c) = spec.size;
        let bg = spec.param("bg", 0.1);
        let mut rng = CounterRng::new(seed, derive_stream(&[4, FAMILY_BLOBS, index as u64]));
        let mut px = Array3::<f64>::from_elem((h, w, c), bg);
        let n_bumps = 2 + rng.next_index(3);
        let side = h.min(w) as f64;
        for _ in 0..n_bumps {
            let cy = rng.next_f64() * h as f64;
            let cx = rng.next_f64() * w as f64;
            let sigma = (0.09 + 0.16 * rng.next_f64()) * side;
            let amp = 0.5 + 0.5 * rng.next_f64();
            let gains: Vec<f64> = (0..c).map(|_| 0.6 + 0.4 * rng.next_f64()).collect();
            for y in 0..h {
                for x in 0..w {
                    let dy = y as f64 - cy;
                    let dx = x as f64 - cx;
                    let bump = amp * (-(dy * dy + dx * dx) / (2.0 * sigma * sigma)).exp();
                    for (ch, gain) in gains.iter().enumerate() {
                        px[[y, x, ch]] += bump * gain;
                    }
                }
            }
        }
        px.mapv_inplace(|v| v.clamp(0.0, 1.0));
        ImageTensor::new(px, (0.0, 1.0)).expect("blob image is valid by construction")
    }
}

/// I.i.d. Gaussian pixels `N(mean, std)`; the in-distribution family for
/// the OOD table. Draws run in row-major `(y, x, c)` order.
struct Field;

impl SyntheticGenerator for Field {
    fn name(&self) -> &'static str {
        "field"
    }

    fn generate_one(&self, spec: &SynthSpec, seed: u64, index: usize) -> ImageTensor {
        let (h, w, c) = spec.size;
        let mean = spec.param("mean", 0.35);
        let std = spec.param("std", 0.12);
        let mut rng = CounterRng::new(seed, derive_stream(&[4, FAMILY_FIELD, index as u64]));
        let px = Array3::from_shape_fn((h, w, c), |_| mean + std * rng.next_gaussian());
        ImageTensor::new(px, (0.0, 1.0)).expect("field image is valid by construction")
    }
}

/// Low-contrast sinusoidal gratings with a touch of pixel noise; the
/// structurally foreign family. Per image: orientation, frequency and
/// phase are drawn first, then per-pixel noise in row-major order.
struct Stripes;

impl SyntheticGenerator for Stripes {
    fn name(&self) -> &'static str {
        "stripes"
    }

    fn generate_one(&self, spec: &SynthSpec, seed: u64, index: usize) -> ImageTensor {
        let (h, w, c) = spec.size;
        let mean = spec.param("mean", 0.35);
        let amp = spec.param("amp", 0.10);
        let noise = spec.param("noise", 0.02);
        let mut rng = CounterRng::new(seed, derive_stream(&[4, FAMILY_STRIPES, index as u64]));
        let theta = rng.next_f64() * std::f64::consts::PI;
        let freq = 2.0 + 4.0 * rng.next_f64();
        let phase = rng.next_f64() * 2.0 * std::f64::consts::PI;
        let (sin_t, cos_t) = theta.sin_cos();
        let scale = 2.0 * std::f64::consts::PI * freq / h as f64;
        let mut px = Array3::<f64>::zeros((h, w, c));
        for y in 0..h {
            for x in 0..w {
                let wave = (scale * (cos_t * y as f64 + sin_t * x as f64) + phase).sin();
                for ch in 0..c {
                    px[[y, x, ch]] = mean + amp * wave + noise * rng.next_gaussian();
                }
            }
        }
        ImageTensor::new(px, (0.0, 1.0)).expect("stripe image is valid by construction")
    }
}

/// Nested mixture of `field` (native) and `stripes` (foreign) rows.
/// `frac` of the images are foreign: indices `0 .. count - n_foreign`
/// come from the native per-index streams, the rest from the foreign
/// ones, so sets generated with the same seed but different fractions
/// share their retained rows bit-identically.
struct Mix;

impl SyntheticGenerator for Mix {
    fn name(&self) -> &'static str {
        "mix"
    }

    fn generate_one(&self, spec: &SynthSpec, seed: u64, index: usize) -> ImageTensor {
        let frac = spec.param("frac", 0.0).clamp(0.0, 1.0);
        let n_foreign = ((frac * spec.count as f64).round() as usize).min(spec.count);
        let n_native = spec.count - n_foreign;
        if index < n_native {
            Field.generate_one(spec, seed, index)
        } else {
            Stripes.generate_one(spec, seed, index - n_native)
        }
    }
}
