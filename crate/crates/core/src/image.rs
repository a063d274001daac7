//! In-memory image representation. File I/O lives in the CLI.

use ndarray::Array3;

use crate::error::{Error, Result};

/// `H x W x C` array of intensities with the nominal value range recorded
/// at load time. The range is a property of the source format (e.g.
/// `(0, 255)` for 8-bit files), not a min/max of the data; augmented
/// pixels may fall outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pixels: Array3<f64>,
    value_range: (f64, f64),
}

impl ImageTensor {
    pub fn new(pixels: Array3<f64>, value_range: (f64, f64)) -> Result<Self> {
        let (h, w, c) = pixels.dim();
        if h == 0 || w == 0 {
            return Err(Error::EmptyInput("image"));
        }
        if c != 1 && c != 3 {
            return Err(Error::InvalidParameter(format!(
                "channel count must be 1 or 3, got {c}"
            )));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image pixels"));
        }
        if value_range.0 >= value_range.1 {
            return Err(Error::InvalidParameter(format!(
                "value range must satisfy lo < hi, got ({}, {})",
                value_range.0, value_range.1
            )));
        }
        Ok(Self {
            pixels,
            value_range,
        })
    }

    pub fn height(&self) -> usize {
        self.pixels.dim().0
    }

    pub fn width(&self) -> usize {
        self.pixels.dim().1
    }

    pub fn channels(&self) -> usize {
        self.pixels.dim().2
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.pixels.dim()
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.value_range
    }

    pub fn range_span(&self) -> f64 {
        self.value_range.1 - self.value_range.0
    }

    pub fn pixels(&self) -> &Array3<f64> {
        &self.pixels
    }

    /// Largest pixel value of this image (across all channels).
    pub fn max_value(&self) -> f64 {
        self.pixels.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Replace the pixel data, keeping the recorded range.
    pub fn with_pixels(&self, pixels: Array3<f64>) -> Result<Self> {
        Self::new(pixels, self.value_range)
    }

    /// Clamp every pixel into the recorded value range.
    pub fn clipped(&self) -> Self {
        let (lo, hi) = self.value_range;
        Self {
            pixels: self.pixels.mapv(|v| v.clamp(lo, hi)),
            value_range: self.value_range,
        }
    }
}
