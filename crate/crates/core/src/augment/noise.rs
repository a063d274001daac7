//! Additive Gaussian noise with percent-of-maximum strength.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::rng::{derive_stream, CounterRng};

use super::Augmentation;

/// Adds i.i.d. Gaussian noise with a standard deviation equal to
/// `strength_percent / 100` of this image's maximum pixel value.
/// The output is not clipped to the recorded value range unless `clip`
/// is set.
#[derive(Debug, Clone)]
pub struct NoiseAugment {
    pub strength_percent: f64,
    pub clip: bool,
}

impl Augmentation for NoiseAugment {
    fn name(&self) -> &'static str {
        "noise"
    }

    fn apply_one(
        &self,
        img: &ImageTensor,
        _patch_source: &[ImageTensor],
        seed: u64,
    ) -> Result<ImageTensor> {
        let out = noise_augment(img, self.strength_percent, seed)?;
        Ok(if self.clip { out.clipped() } else { out })
    }
}

/// Noise-augment one image. Draws are taken in row-major `(y, x, c)`
/// order from the stream `(seed, derive_stream(&[2, 0]))`, one Gaussian
/// per scalar entry; strength zero returns the image bit-identically
/// without consuming the stream.
pub fn noise_augment(img: &ImageTensor, strength_percent: f64, seed: u64) -> Result<ImageTensor> {
    if !strength_percent.is_finite() || strength_percent < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise strength must be finite and non-negative, got {strength_percent}"
        )));
    }
    if strength_percent == 0.0 {
        return Ok(img.clone());
    }
    // "Maximum amplitude" is per image, not per dataset.
    let sigma = strength_percent / 100.0 * img.max_value();
    let mut rng = CounterRng::new(seed, derive_stream(&[2, 0]));
    let (h, w, c) = img.shape();
    let mut pixels = Array3::<f64>::zeros((h, w, c));
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                pixels[[y, x, ch]] = img.pixels()[[y, x, ch]] + sigma * rng.next_gaussian();
            }
        }
    }
    img.with_pixels(pixels)
}
