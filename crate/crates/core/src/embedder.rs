//! The embedding model stand-in: a fixed-weight random-feature network
//! with inference-time dropout, plus ingestion of externally computed
//! embedding files.
//!
//! The network is never trained. Per image: pixels are scale-normalized
//! (divided by `sqrt(std^2 + 1e-4)` over all pixels, which keeps the
//! noise sweeps well behaved without erasing mean shifts), pooled onto an
//! 8 x 8 grid per channel, flattened in `(row, column, channel)` order,
//! passed through rectified affine hidden layers and projected to the
//! embedding width. Weights are drawn once from the seeded stream, scaled
//! by `1 / sqrt(fan_in)`; biases are zero.
//!
//! Dropout follows the Monte-Carlo-dropout protocol: one Bernoulli mask
//! per hidden layer per evaluation pass, shared by every image in the
//! batch (the pass samples a network realization, not per-image noise),
//! with surviving activations scaled by `1 / (1 - p)` so the expectation
//! matches the deterministic path and `p = 0` collapses to it exactly.

use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::embedding::{EmbeddingSet, StochasticEmbeddingSet};
use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::npy::{self, NpyArray};
use crate::rng::{derive_stream, CounterRng};

const POOL_GRID: usize = 8;
const SCALE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct ToyEmbedderConfig {
    /// Expected image shape `(H, W, C)`; inputs of other sizes are
    /// resized (nearest-neighbor) and the resize is counted in the info.
    pub input_size: (usize, usize, usize),
    /// Embedding width K. 64 is the desk-scale default; 2048 mirrors the
    /// usual inception latent width.
    pub embed_dim: usize,
    pub hidden_dims: Vec<usize>,
    /// Dropout probability, `0 <= p < 1`.
    pub dropout_rate: f64,
    pub weight_seed: u64,
}

impl Default for ToyEmbedderConfig {
    fn default() -> Self {
        Self {
            input_size: (32, 32, 3),
            embed_dim: 64,
            hidden_dims: vec![256, 128],
            dropout_rate: 0.2,
            weight_seed: 0,
        }
    }
}

/// Side effects observed while embedding a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmbedInfo {
    /// Images that had to be resized to the configured input size.
    pub resized: usize,
    /// Set when a stochastic call ran with `p = 0` and therefore
    /// collapsed to the deterministic path.
    pub p_zero_warning: bool,
}

/// Fixed-weight embedder; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Embedder {
    config: ToyEmbedderConfig,
    /// One `(fan_out, fan_in)` matrix per affine layer, hidden then output.
    weights: Vec<Array2<f64>>,
}

pub fn build_toy_embedder(config: ToyEmbedderConfig) -> Result<Embedder> {
    let (h, w, c) = config.input_size;
    if h < POOL_GRID || w < POOL_GRID {
        return Err(Error::InvalidParameter(format!(
            "input size {h}x{w} is smaller than the {POOL_GRID}x{POOL_GRID} pooling grid"
        )));
    }
    if c != 1 && c != 3 {
        return Err(Error::InvalidParameter(format!(
            "channel count must be 1 or 3, got {c}"
        )));
    }
    if config.embed_dim == 0 {
        return Err(Error::InvalidParameter("embed_dim must be positive".into()));
    }
    if config.hidden_dims.contains(&0) {
        return Err(Error::InvalidParameter(
            "hidden layer widths must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&config.dropout_rate) {
        return Err(Error::InvalidParameter(format!(
            "dropout rate must be in [0, 1), got {}",
            config.dropout_rate
        )));
    }

    // All layers consume one stream, layer by layer, row-major.
    let mut rng = CounterRng::new(config.weight_seed, derive_stream(&[0]));
    let feature_dim = POOL_GRID * POOL_GRID * c;
    let mut dims = vec![feature_dim];
    dims.extend_from_slice(&config.hidden_dims);
    dims.push(config.embed_dim);

    let mut weights = Vec::with_capacity(dims.len() - 1);
    for layer in 0..(dims.len() - 1) {
        let fan_in = dims[layer];
        let fan_out = dims[layer + 1];
        let scale = 1.0 / (fan_in as f64).sqrt();
        let mut m = Array2::<f64>::zeros((fan_out, fan_in));
        for r in 0..fan_out {
            for cidx in 0..fan_in {
                m[[r, cidx]] = rng.next_gaussian() * scale;
            }
        }
        weights.push(m);
    }
    Ok(Embedder { config, weights })
}

impl Embedder {
    pub fn config(&self) -> &ToyEmbedderConfig {
        &self.config
    }

    pub fn embed_dim(&self) -> usize {
        self.config.embed_dim
    }

    fn n_hidden(&self) -> usize {
        self.weights.len() - 1
    }

    /// Pooled, scale-normalized feature vector of one image.
    fn features(&self, img: &ImageTensor, info_resized: &mut bool) -> Result<Vec<f64>> {
        let (eh, ew, ec) = self.config.input_size;
        let (h, w, c) = img.shape();
        if c != ec {
            return Err(Error::DimensionMismatch {
                context: "image channels vs embedder input",
                left: c,
                right: ec,
            });
        }
        let resized;
        let view: Array3<f64> = if (h, w) != (eh, ew) {
            *info_resized = true;
            resized = resize_nearest(img.pixels(), eh, ew);
            resized
        } else {
            img.pixels().clone()
        };

        // Scale normalization over all pixels, population std.
        let n = (eh * ew * ec) as f64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for &v in view.iter() {
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        let inv = 1.0 / (var + SCALE_FLOOR).sqrt();

        let mut features = vec![0.0f64; POOL_GRID * POOL_GRID * ec];
        for gy in 0..POOL_GRID {
            let y0 = gy * eh / POOL_GRID;
            let y1 = (gy + 1) * eh / POOL_GRID;
            for gx in 0..POOL_GRID {
                let x0 = gx * ew / POOL_GRID;
                let x1 = (gx + 1) * ew / POOL_GRID;
                let count = ((y1 - y0) * (x1 - x0)) as f64;
                for ch in 0..ec {
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        for x in x0..x1 {
                            acc += view[[y, x, ch]];
                        }
                    }
                    features[(gy * POOL_GRID + gx) * ec + ch] = acc / count * inv;
                }
            }
        }
        Ok(features)
    }

    /// Forward pass; `masks` (one per hidden layer) applies inverted
    /// dropout to the rectified activations.
    fn forward(&self, features: &[f64], masks: Option<&[Vec<bool>]>) -> Vec<f64> {
        let keep = 1.0 - self.config.dropout_rate;
        let mut h = features.to_vec();
        for (layer, w) in self.weights[..self.n_hidden()].iter().enumerate() {
            let mut next = affine(w, &h);
            for v in next.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            if let Some(masks) = masks {
                for (v, &keep_unit) in next.iter_mut().zip(&masks[layer]) {
                    *v = if keep_unit { *v / keep } else { 0.0 };
                }
            }
            h = next;
        }
        affine(&self.weights[self.n_hidden()], &h)
    }

    /// Dropout masks for one evaluation pass, one per hidden layer, from
    /// the streams `(sample_seed, derive_stream(&[1, j, layer]))`.
    fn pass_masks(&self, sample_seed: u64, pass: usize) -> Vec<Vec<bool>> {
        let keep = 1.0 - self.config.dropout_rate;
        self.config
            .hidden_dims
            .iter()
            .enumerate()
            .map(|(layer, &width)| {
                let mut rng = CounterRng::new(
                    sample_seed,
                    derive_stream(&[1, pass as u64, layer as u64]),
                );
                (0..width).map(|_| rng.next_f64() < keep).collect()
            })
            .collect()
    }
}

fn affine(w: &Array2<f64>, x: &[f64]) -> Vec<f64> {
    let (rows, cols) = w.dim();
    let mut out = vec![0.0f64; rows];
    for r in 0..rows {
        let mut acc = 0.0;
        for c in 0..cols {
            acc += w[[r, c]] * x[c];
        }
        out[r] = acc;
    }
    out
}

fn resize_nearest(px: &Array3<f64>, nh: usize, nw: usize) -> Array3<f64> {
    let (h, w, c) = px.dim();
    let map = |dst: usize, dst_len: usize, src_len: usize| -> usize {
        (((dst as f64 + 0.5) * src_len as f64 / dst_len as f64) as usize).min(src_len - 1)
    };
    Array3::from_shape_fn((nh, nw, c), |(y, x, ch)| {
        px[[map(y, nh, h), map(x, nw, w), ch]]
    })
}

/// Embed a batch with dropout disabled.
pub fn embed_deterministic(embedder: &Embedder, images: &[ImageTensor]) -> Result<EmbeddingSet> {
    embed_deterministic_with_info(embedder, images).map(|(set, _)| set)
}

pub fn embed_deterministic_with_info(
    embedder: &Embedder,
    images: &[ImageTensor],
) -> Result<(EmbeddingSet, EmbedInfo)> {
    if images.is_empty() {
        return Err(Error::EmptyInput("image batch"));
    }
    let rows: Vec<Result<(Vec<f64>, bool)>> = images
        .par_iter()
        .map(|img| {
            let mut resized = false;
            let f = embedder.features(img, &mut resized)?;
            Ok((embedder.forward(&f, None), resized))
        })
        .collect();

    let k = embedder.embed_dim();
    let mut data = Array2::<f64>::zeros((images.len(), k));
    let mut info = EmbedInfo::default();
    for (i, row) in rows.into_iter().enumerate() {
        let (values, resized) = row?;
        if resized {
            info.resized += 1;
        }
        for (j, v) in values.into_iter().enumerate() {
            data[[i, j]] = v;
        }
    }
    Ok((EmbeddingSet::new(data)?, info))
}

/// Embed a batch `n_passes` times with dropout active; output is
/// `I x J x K`. Masks are shared across images within one pass.
pub fn embed_stochastic(
    embedder: &Embedder,
    images: &[ImageTensor],
    n_passes: usize,
    sample_seed: u64,
) -> Result<StochasticEmbeddingSet> {
    embed_stochastic_with_info(embedder, images, n_passes, sample_seed).map(|(set, _)| set)
}

pub fn embed_stochastic_with_info(
    embedder: &Embedder,
    images: &[ImageTensor],
    n_passes: usize,
    sample_seed: u64,
) -> Result<(StochasticEmbeddingSet, EmbedInfo)> {
    if images.is_empty() {
        return Err(Error::EmptyInput("image batch"));
    }
    if n_passes < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            actual: n_passes,
        });
    }

    let mut info = EmbedInfo {
        p_zero_warning: embedder.config.dropout_rate == 0.0,
        ..Default::default()
    };

    // Features are pass-independent; compute them once.
    let features: Vec<Result<(Vec<f64>, bool)>> = images
        .par_iter()
        .map(|img| {
            let mut resized = false;
            let f = embedder.features(img, &mut resized)?;
            Ok((f, resized))
        })
        .collect();
    let mut feats = Vec::with_capacity(images.len());
    for item in features {
        let (f, resized) = item?;
        if resized {
            info.resized += 1;
        }
        feats.push(f);
    }

    let k = embedder.embed_dim();
    let passes: Vec<Vec<Vec<f64>>> = (0..n_passes)
        .into_par_iter()
        .map(|j| {
            let masks = embedder.pass_masks(sample_seed, j);
            feats
                .iter()
                .map(|f| embedder.forward(f, Some(&masks)))
                .collect()
        })
        .collect();

    let mut data = Array3::<f64>::zeros((images.len(), n_passes, k));
    for (j, pass) in passes.iter().enumerate() {
        for (i, row) in pass.iter().enumerate() {
            for (kk, &v) in row.iter().enumerate() {
                data[[i, j, kk]] = v;
            }
        }
    }
    Ok((StochasticEmbeddingSet::new(data)?, info))
}

/// A single dropout realization (pass `pass_index` of the given stream),
/// returned as a deterministic-shaped `I x K` set.
pub fn embed_mcd_single(
    embedder: &Embedder,
    images: &[ImageTensor],
    sample_seed: u64,
    pass_index: usize,
) -> Result<EmbeddingSet> {
    if images.is_empty() {
        return Err(Error::EmptyInput("image batch"));
    }
    let masks = embedder.pass_masks(sample_seed, pass_index);
    let rows: Vec<Result<Vec<f64>>> = images
        .par_iter()
        .map(|img| {
            let mut resized = false;
            let f = embedder.features(img, &mut resized)?;
            Ok(embedder.forward(&f, Some(&masks)))
        })
        .collect();
    let k = embedder.embed_dim();
    let mut data = Array2::<f64>::zeros((images.len(), k));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            data[[i, j]] = v;
        }
    }
    EmbeddingSet::new(data)
}

/// Embeddings loaded from a `.npy` file: a 2-D array becomes a
/// deterministic set, a 3-D array a stochastic one (axis order I, J, K).
#[derive(Debug, Clone)]
pub enum LoadedEmbeddings {
    Deterministic(EmbeddingSet),
    Stochastic(StochasticEmbeddingSet),
}

pub fn load_embeddings(path: &std::path::Path) -> Result<LoadedEmbeddings> {
    let arr = npy::read_npy(path)?;
    match arr {
        NpyArray::F64 { shape, data } | NpyArray::F32 { shape, data } if shape.len() == 2 => {
            let m = Array2::from_shape_vec((shape[0], shape[1]), data)
                .map_err(|e| Error::Format(e.to_string()))?;
            Ok(LoadedEmbeddings::Deterministic(EmbeddingSet::new(m)?))
        }
        NpyArray::F64 { shape, data } | NpyArray::F32 { shape, data } if shape.len() == 3 => {
            let t = Array3::from_shape_vec((shape[0], shape[1], shape[2]), data)
                .map_err(|e| Error::Format(e.to_string()))?;
            Ok(LoadedEmbeddings::Stochastic(StochasticEmbeddingSet::new(
                t,
            )?))
        }
        NpyArray::F64 { shape, .. } | NpyArray::F32 { shape, .. } => {
            Err(Error::WrongRank(shape.len()))
        }
    }
}
