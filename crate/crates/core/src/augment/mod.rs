//! Seeded augmentation pipelines.
//!
//! Each augmentation kind lives behind the [`Augmentation`] trait and is
//! selected by name through [`build_augmentation`]. Determinism contract:
//! identical inputs and spec produce bit-identical outputs regardless of
//! thread count; batch application derives one seed per image index so
//! processing order cannot matter.

mod noise;
mod overlay;

pub use noise::{noise_augment, NoiseAugment};
pub use overlay::{overlay_augment, OverlayAugment};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::rng::derive_seed;

/// One augmentation strategy, applied image by image.
pub trait Augmentation: Send + Sync {
    fn name(&self) -> &'static str;

    /// Transform a single image using the seeded stream belonging to it.
    /// `patch_source` is consulted only by kinds that paste patches.
    fn apply_one(
        &self,
        img: &ImageTensor,
        patch_source: &[ImageTensor],
        seed: u64,
    ) -> Result<ImageTensor>;
}

/// Names of the registered augmentation kinds.
pub const AUGMENTATION_NAMES: &[&str] = &["noise", "overlay"];

/// Configuration for one augmentation run.
#[derive(Debug, Clone)]
pub struct AugmentSpec {
    /// Registered kind name: `noise` or `overlay`.
    pub kind: String,
    /// Noise only: sigma as a percentage of the image's maximum value.
    pub strength_percent: f64,
    /// Noise only: clamp the output back into the recorded value range.
    /// Off by default; clipping would distort the sigma-vs-strength
    /// relationship the sweeps rely on.
    pub clip: bool,
    /// Overlay only: number of patches pasted per image.
    pub n_patches: usize,
    /// Overlay only: patch size as a fraction of the base's smaller side.
    pub patch_scale: f64,
    pub seed: u64,
}

impl AugmentSpec {
    pub fn noise(strength_percent: f64, seed: u64) -> Self {
        Self {
            kind: "noise".into(),
            strength_percent,
            clip: false,
            n_patches: 0,
            patch_scale: 0.25,
            seed,
        }
    }

    pub fn overlay(n_patches: usize, patch_scale: f64, seed: u64) -> Self {
        Self {
            kind: "overlay".into(),
            strength_percent: 0.0,
            clip: false,
            n_patches,
            patch_scale,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.strength_percent.is_finite() || !(0.0..=1000.0).contains(&self.strength_percent) {
            return Err(Error::InvalidParameter(format!(
                "noise strength must be in [0, 1000] percent, got {}",
                self.strength_percent
            )));
        }
        if !(self.patch_scale > 0.0 && self.patch_scale < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "patch scale must be in (0, 1), got {}",
                self.patch_scale
            )));
        }
        Ok(())
    }
}

/// Look up an augmentation kind by its registered name.
pub fn build_augmentation(spec: &AugmentSpec) -> Result<Box<dyn Augmentation>> {
    spec.validate()?;
    match spec.kind.as_str() {
        "noise" => Ok(Box::new(NoiseAugment {
            strength_percent: spec.strength_percent,
            clip: spec.clip,
        })),
        "overlay" => Ok(Box::new(OverlayAugment {
            n_patches: spec.n_patches,
            patch_scale: spec.patch_scale,
        })),
        other => Err(Error::InvalidParameter(format!(
            "unknown augmentation kind '{other}' (expected one of {AUGMENTATION_NAMES:?})"
        ))),
    }
}

/// Apply a spec to a whole set. The per-image seed is derived from
/// `(spec.seed, image index)`, so outputs are independent of processing
/// order and parallel scheduling.
pub fn augment_set(
    images: &[ImageTensor],
    spec: &AugmentSpec,
    patch_source: Option<&[ImageTensor]>,
) -> Result<Vec<ImageTensor>> {
    let strategy = build_augmentation(spec)?;
    let patches = patch_source.unwrap_or(&[]);
    images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let seed = derive_seed(spec.seed, &[i as u64]);
            strategy.apply_one(img, patches, seed)
        })
        .collect()
}
