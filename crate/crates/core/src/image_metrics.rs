//! Model-free content-similarity validators: mean absolute error and the
//! multi-scale structural similarity index.
//!
//! MS-SSIM follows the Wang et al. multi-scale construction with every
//! unstated choice pinned:
//!
//! * 11 x 11 Gaussian window, sigma 1.5, normalized to unit sum;
//! * windows entirely inside the image (valid mode, no padding);
//! * per-scale contrast/structure means, luminance folded in at the
//!   coarsest scale only;
//! * scale weights `(0.0448, 0.2856, 0.3001, 0.2363, 0.1333)`; when fewer
//!   scales are used the leading weights are renormalized to sum 1;
//! * dyadic downsampling by plain 2 x 2 mean pooling, truncating an odd
//!   trailing row/column;
//! * stabilizers `C1 = (0.01 R)^2`, `C2 = (0.03 R)^2` with `R` the larger
//!   recorded value-range span of the two images;
//! * multi-channel images are scored per channel and averaged;
//! * per-window contrast/structure responses are clamped at zero before
//!   averaging, as is the coarsest-scale luminance-weighted response —
//!   anticorrelated windows (or negative window means, once unclipped
//!   noise pushes pixels below zero) otherwise drive a scale mean
//!   negative and the fractional-weighted product undefined.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::image::ImageTensor;

/// Canonical five-scale weights from the multi-scale SSIM reference.
pub const MSSSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
pub const MSSSIM_SCALES: usize = 5;
pub const WINDOW_SIZE: usize = 11;
pub const WINDOW_SIGMA: f64 = 1.5;

/// Mean over all pixels and channels of `|a - b|`.
pub fn mae(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    if a.shape() != b.shape() {
        let (ah, aw, ac) = a.shape();
        let (bh, bw, bc) = b.shape();
        return Err(Error::ShapeMismatch {
            context: "mae images",
            left: vec![ah, aw, ac],
            right: vec![bh, bw, bc],
        });
    }
    let mut acc = 0.0;
    for (x, y) in a.pixels().iter().zip(b.pixels().iter()) {
        acc += (x - y).abs();
    }
    Ok(acc / a.pixels().len() as f64)
}

/// Five-scale MS-SSIM; requires `min(H, W) >= 2^4 * 11`.
pub fn ms_ssim(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    ms_ssim_scales(a, b, MSSSIM_SCALES)
}

/// MS-SSIM over the first `scales` levels of the pyramid (1..=5);
/// the leading weights are renormalized to sum one.
pub fn ms_ssim_scales(a: &ImageTensor, b: &ImageTensor, scales: usize) -> Result<f64> {
    if a.shape() != b.shape() {
        let (ah, aw, ac) = a.shape();
        let (bh, bw, bc) = b.shape();
        return Err(Error::ShapeMismatch {
            context: "ms_ssim images",
            left: vec![ah, aw, ac],
            right: vec![bh, bw, bc],
        });
    }
    if scales == 0 || scales > MSSSIM_SCALES {
        return Err(Error::InvalidParameter(format!(
            "scale count must be in 1..=5, got {scales}"
        )));
    }
    let (h, w, channels) = a.shape();
    let min_side = h.min(w);
    let needed = (1usize << (scales - 1)) * WINDOW_SIZE;
    if min_side < needed {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            context: format!(
                "{scales}-scale MS-SSIM needs min(H, W) >= {needed} for the 11x11 window"
            ),
        });
    }

    let span = a.range_span().max(b.range_span());
    let c1 = (0.01 * span) * (0.01 * span);
    let c2 = (0.03 * span) * (0.03 * span);

    let weight_sum: f64 = MSSSIM_WEIGHTS[..scales].iter().sum();
    let kernel = gaussian_window();

    let mut total = 0.0;
    for ch in 0..channels {
        let mut ca = channel_plane(a, ch);
        let mut cb = channel_plane(b, ch);
        let mut score = 1.0f64;
        for level in 0..scales {
            let last = level == scales - 1;
            let (mean_cs, mean_ssim) = ssim_level(&ca, &cb, &kernel, c1, c2);
            let weight = MSSSIM_WEIGHTS[level] / weight_sum;
            if last {
                score *= mean_ssim.powf(weight);
            } else {
                score *= mean_cs.powf(weight);
                ca = downsample_2x2(&ca);
                cb = downsample_2x2(&cb);
            }
        }
        total += score;
    }
    Ok(total / channels as f64)
}

/// Largest scale count (capped at 5) this image size supports.
pub fn max_scales_for(height: usize, width: usize) -> usize {
    let mut side = height.min(width);
    let mut scales = 0;
    while scales < MSSSIM_SCALES && side >= WINDOW_SIZE {
        scales += 1;
        side /= 2;
    }
    scales
}

fn channel_plane(img: &ImageTensor, ch: usize) -> Array2<f64> {
    let (h, w, _) = img.shape();
    Array2::from_shape_fn((h, w), |(y, x)| img.pixels()[[y, x, ch]])
}

fn gaussian_window() -> [f64; WINDOW_SIZE] {
    let half = (WINDOW_SIZE / 2) as isize;
    let mut win = [0.0f64; WINDOW_SIZE];
    let mut sum = 0.0;
    for (i, v) in win.iter_mut().enumerate() {
        let d = (i as isize - half) as f64;
        *v = (-(d * d) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
        sum += *v;
    }
    for v in win.iter_mut() {
        *v /= sum;
    }
    win
}

/// Windowed weighted sums of a plane, valid positions only. The 2-D
/// Gaussian window factorizes, so this is a horizontal pass followed by
/// a vertical one, both running in fixed index order.
fn windowed(plane: &Array2<f64>, kernel: &[f64; WINDOW_SIZE]) -> Array2<f64> {
    let (h, w) = plane.dim();
    let out_w = w - WINDOW_SIZE + 1;
    let out_h = h - WINDOW_SIZE + 1;
    let mut horizontal = Array2::<f64>::zeros((h, out_w));
    for y in 0..h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (dx, wgt) in kernel.iter().enumerate() {
                acc += wgt * plane[[y, x + dx]];
            }
            horizontal[[y, x]] = acc;
        }
    }
    let mut out = Array2::<f64>::zeros((out_h, out_w));
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (dy, wgt) in kernel.iter().enumerate() {
                acc += wgt * horizontal[[y + dy, x]];
            }
            out[[y, x]] = acc;
        }
    }
    out
}

/// Mean contrast-structure and mean full-SSIM terms over all valid window
/// positions at one scale. Uses the moment form `var = E[x^2] - E[x]^2`
/// over separably windowed sums.
fn ssim_level(
    a: &Array2<f64>,
    b: &Array2<f64>,
    kernel: &[f64; WINDOW_SIZE],
    c1: f64,
    c2: f64,
) -> (f64, f64) {
    let mu_a = windowed(a, kernel);
    let mu_b = windowed(b, kernel);
    let s_aa = windowed(&(a * a), kernel);
    let s_bb = windowed(&(b * b), kernel);
    let s_ab = windowed(&(a * b), kernel);

    let (out_h, out_w) = mu_a.dim();
    let mut cs_sum = 0.0;
    let mut ssim_sum = 0.0;
    for y in 0..out_h {
        for x in 0..out_w {
            let m1 = mu_a[[y, x]];
            let m2 = mu_b[[y, x]];
            let var1 = s_aa[[y, x]] - m1 * m1;
            let var2 = s_bb[[y, x]] - m2 * m2;
            let cov = s_ab[[y, x]] - m1 * m2;
            let cs = ((2.0 * cov + c2) / (var1 + var2 + c2)).max(0.0);
            let lum = (2.0 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
            cs_sum += cs;
            ssim_sum += (lum * cs).max(0.0);
        }
    }
    let n = (out_h * out_w) as f64;
    (cs_sum / n, ssim_sum / n)
}

fn downsample_2x2(plane: &Array2<f64>) -> Array2<f64> {
    let (h, w) = plane.dim();
    let oh = h / 2;
    let ow = w / 2;
    Array2::from_shape_fn((oh, ow), |(y, x)| {
        0.25 * (plane[[2 * y, 2 * x]]
            + plane[[2 * y, 2 * x + 1]]
            + plane[[2 * y + 1, 2 * x]]
            + plane[[2 * y + 1, 2 * x + 1]])
    })
}
