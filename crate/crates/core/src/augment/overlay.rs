//! Patch overlays: miniaturized source images, randomly rotated and
//! pasted at random positions fully inside the base image.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::rng::{derive_stream, CounterRng};

use super::Augmentation;

/// Pastes `n_patches` source images, each resized so its larger side is
/// `patch_scale` of the base's smaller side, rotated by a uniform random
/// angle and placed uniformly inside the base.
#[derive(Debug, Clone)]
pub struct OverlayAugment {
    pub n_patches: usize,
    pub patch_scale: f64,
}

impl Augmentation for OverlayAugment {
    fn name(&self) -> &'static str {
        "overlay"
    }

    fn apply_one(
        &self,
        img: &ImageTensor,
        patch_source: &[ImageTensor],
        seed: u64,
    ) -> Result<ImageTensor> {
        overlay_augment(img, patch_source, self.n_patches, self.patch_scale, seed)
    }
}

/// Overlay-augment one image.
///
/// Patch `t` consumes exactly four words from its own stream
/// `(seed, derive_stream(&[3, t]))`, in order: source index, rotation
/// angle, paste x, paste y. Resizing and rotation use nearest-neighbor
/// lookups; pixels outside the rotated patch stay transparent, pasted
/// pixels land opaquely. Channel counts are adapted (gray is replicated
/// onto color bases, color is averaged onto gray bases).
pub fn overlay_augment(
    base: &ImageTensor,
    patch_source: &[ImageTensor],
    n_patches: usize,
    patch_scale: f64,
    seed: u64,
) -> Result<ImageTensor> {
    if n_patches == 0 {
        return Ok(base.clone());
    }
    if patch_source.is_empty() {
        return Err(Error::EmptyInput("patch source"));
    }
    if !(patch_scale > 0.0 && patch_scale < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "patch scale must be in (0, 1), got {patch_scale}"
        )));
    }

    let (bh, bw, bc) = base.shape();
    let target = ((patch_scale * bh.min(bw) as f64).round() as usize).max(1);
    let mut pixels = base.pixels().clone();

    for t in 0..n_patches {
        let mut rng = CounterRng::new(seed, derive_stream(&[3, t as u64]));
        let src = &patch_source[rng.next_index(patch_source.len())];
        let angle = rng.next_f64() * 2.0 * std::f64::consts::PI;

        let resized = resize_nearest(src, target);
        let (canvas, mask, ch, cw) = rotate_nearest(&resized, angle);
        if ch > bh || cw > bw {
            return Err(Error::ImageTooSmall {
                height: bh,
                width: bw,
                context: format!("rotated patch {ch}x{cw} does not fit the base"),
            });
        }
        let x0 = rng.next_index(bw - cw + 1);
        let y0 = rng.next_index(bh - ch + 1);

        let pc = canvas.dim().2;
        for y in 0..ch {
            for x in 0..cw {
                if !mask[y * cw + x] {
                    continue;
                }
                for c in 0..bc {
                    let v = match (pc, bc) {
                        (1, _) => canvas[[y, x, 0]],
                        (3, 1) => {
                            (canvas[[y, x, 0]] + canvas[[y, x, 1]] + canvas[[y, x, 2]]) / 3.0
                        }
                        _ => canvas[[y, x, c]],
                    };
                    pixels[[y0 + y, x0 + x, c]] = v;
                }
            }
        }
    }
    base.with_pixels(pixels)
}

/// Scale so the larger side equals `target`, nearest-neighbor sampling:
/// source index `min(floor((dst + 0.5) * src_len / dst_len), src_len - 1)`.
fn resize_nearest(img: &ImageTensor, target: usize) -> Array3<f64> {
    let (h, w, c) = img.shape();
    let factor = target as f64 / h.max(w) as f64;
    let nh = ((h as f64 * factor).round() as usize).max(1);
    let nw = ((w as f64 * factor).round() as usize).max(1);
    let map = |dst: usize, dst_len: usize, src_len: usize| -> usize {
        (((dst as f64 + 0.5) * src_len as f64 / dst_len as f64) as usize).min(src_len - 1)
    };
    Array3::from_shape_fn((nh, nw, c), |(y, x, ch)| {
        img.pixels()[[map(y, nh, h), map(x, nw, w), ch]]
    })
}

/// Rotate about the patch center with nearest-neighbor lookups into the
/// source; returns the bounding-box canvas, an opacity mask, and the
/// canvas dimensions.
fn rotate_nearest(patch: &Array3<f64>, angle: f64) -> (Array3<f64>, Vec<bool>, usize, usize) {
    let (h, w, c) = patch.dim();
    let (sin, cos) = angle.sin_cos();
    let ch = (w as f64 * sin.abs() + h as f64 * cos.abs()).ceil() as usize;
    let cw = (w as f64 * cos.abs() + h as f64 * sin.abs()).ceil() as usize;
    let cy = (ch as f64 - 1.0) / 2.0;
    let cx = (cw as f64 - 1.0) / 2.0;
    let sy = (h as f64 - 1.0) / 2.0;
    let sx = (w as f64 - 1.0) / 2.0;

    let mut canvas = Array3::<f64>::zeros((ch, cw, c));
    let mut mask = vec![false; ch * cw];
    for y in 0..ch {
        for x in 0..cw {
            // Inverse rotation of the destination offset.
            let dy = y as f64 - cy;
            let dx = x as f64 - cx;
            let ox = cos * dx + sin * dy + sx;
            let oy = -sin * dx + cos * dy + sy;
            let ry = oy.round();
            let rx = ox.round();
            if ry >= 0.0 && rx >= 0.0 && (ry as usize) < h && (rx as usize) < w {
                mask[y * cw + x] = true;
                for ci in 0..c {
                    canvas[[y, x, ci]] = patch[[ry as usize, rx as usize, ci]];
                }
            }
        }
    }
    (canvas, mask, ch, cw)
}
