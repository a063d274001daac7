//! Embedding containers: a deterministic `I x K` matrix per set, and the
//! `I x J x K` tensor produced by evaluating a batch `J` times with
//! dropout active. Axis order is always image, evaluation pass, element.

use ndarray::{Array2, Array3, ArrayView2, ArrayView3};

use crate::error::{Error, Result};

/// `I x K` matrix of deterministic latents, one row per image.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: Array2<f64>,
}

impl EmbeddingSet {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyInput("embedding set"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding set"));
        }
        Ok(Self { data })
    }

    pub fn n_images(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }
}

/// `I x J x K` tensor of stochastic latents: `i` indexes the image, `j`
/// the dropout evaluation pass, `k` the embedding element.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticEmbeddingSet {
    data: Array3<f64>,
}

impl StochasticEmbeddingSet {
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (i, j, k) = data.dim();
        if i < 2 {
            return Err(Error::InsufficientSamples {
                required: 2,
                actual: i,
            });
        }
        if j < 2 {
            return Err(Error::InsufficientSamples {
                required: 2,
                actual: j,
            });
        }
        if k == 0 {
            return Err(Error::EmptyInput("embedding dimension"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("stochastic embedding set"));
        }
        Ok(Self { data })
    }

    pub fn n_images(&self) -> usize {
        self.data.dim().0
    }

    pub fn n_passes(&self) -> usize {
        self.data.dim().1
    }

    pub fn dim(&self) -> usize {
        self.data.dim().2
    }

    pub fn view(&self) -> ArrayView3<'_, f64> {
        self.data.view()
    }

    /// The `I x K` slice of evaluation pass `j`.
    pub fn pass(&self, j: usize) -> Array2<f64> {
        let (i, _, k) = self.data.dim();
        Array2::from_shape_fn((i, k), |(a, b)| self.data[[a, j, b]])
    }

    pub fn into_inner(self) -> Array3<f64> {
        self.data
    }
}
