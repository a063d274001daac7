//! Frechet-distance quality metrics over stochastic embedding sets.
//!
//! The library fits Gaussian summaries to image embeddings, computes the
//! Frechet distance between them, and quantifies how trustworthy that
//! distance is when the embedder is evaluated repeatedly with dropout
//! active: the per-pass FID spread (vFID / sigmaFID), its exact variance
//! decomposition, and the embedding-level predictive variance (pVar).
//! Around that core sit a kNN out-of-distribution score, model-free image
//! validators (MAE, MS-SSIM), seeded augmentation pipelines, a toy
//! random-feature embedder, `.npy` array interchange, and the experiment
//! runners driven by the `fidtrust` CLI.
//!
//! Everything is deterministic given the seeds: random draws come from
//! counter-based streams (see [`rng`]), reductions use fixed orders, and
//! parallel sections are position-addressed.

// Index loops keep the reduction orders explicit where several arrays
// are walked in lockstep.
#![allow(clippy::needless_range_loop)]

pub mod augment;
pub mod embedder;
pub mod embedding;
pub mod error;
pub mod experiments;
pub mod image;
pub mod image_metrics;
pub mod linalg;
pub mod metrics;
pub mod npy;
pub mod rng;
pub mod synth;

pub use embedding::{EmbeddingSet, StochasticEmbeddingSet};
pub use error::{Error, Result};
pub use image::ImageTensor;
pub use linalg::GaussianSummary;
