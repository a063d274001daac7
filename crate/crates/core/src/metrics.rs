//! The core quantities: per-pass FID, its mean and variance (vFID /
//! sigmaFID), pVar, the six-term variance decomposition, the kNN OOD
//! score, and the embedding diagnostics that accompany the sweeps.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::embedding::{EmbeddingSet, StochasticEmbeddingSet};
use crate::error::{Error, Result};
use crate::linalg::{self, GaussianSummary};

/// Per-pass FID samples with their statistics and stored components.
///
/// For pass `j`: `a = ||mu_j - mu_ref||^2`, `b = tr(S_j + S_ref)`,
/// `c = tr((S_j S_ref)^(1/2))`, and `fid = max(a + b - 2c, 0)`. The
/// components are captured at evaluation time so the variance
/// decomposition is bitwise-consistent with the FID values.
#[derive(Debug, Clone)]
pub struct FidDistribution {
    pub fid_samples: Vec<f64>,
    pub mean_fid: f64,
    /// Sample variance of the FID values, `J - 1` denominator.
    pub v_fid: f64,
    pub sigma_fid: f64,
    pub terms_a: Vec<f64>,
    pub terms_b: Vec<f64>,
    pub terms_c: Vec<f64>,
    /// Passes whose raw FID was negative round-off and clamped to zero.
    pub clamp_count: usize,
    /// Largest covariance ridge applied across passes (zero if none).
    pub max_ridge: f64,
}

impl FidDistribution {
    /// Assemble a distribution directly from per-pass components.
    /// `fid_samples[j]` is recomputed as the clamped `a + b - 2c`.
    pub fn from_terms(terms_a: Vec<f64>, terms_b: Vec<f64>, terms_c: Vec<f64>) -> Result<Self> {
        let j = terms_a.len();
        if j < 2 {
            return Err(Error::InsufficientSamples {
                required: 2,
                actual: j,
            });
        }
        if terms_b.len() != j || terms_c.len() != j {
            return Err(Error::DimensionMismatch {
                context: "term vector lengths",
                left: j,
                right: terms_b.len().min(terms_c.len()),
            });
        }
        let mut fid_samples = Vec::with_capacity(j);
        let mut clamp_count = 0;
        for idx in 0..j {
            let raw = terms_a[idx] + terms_b[idx] - 2.0 * terms_c[idx];
            if raw < 0.0 {
                clamp_count += 1;
                fid_samples.push(0.0);
            } else {
                fid_samples.push(raw);
            }
        }
        let (mean_fid, v_fid, sigma_fid) = fid_stats(&fid_samples)?;
        Ok(Self {
            fid_samples,
            mean_fid,
            v_fid,
            sigma_fid,
            terms_a,
            terms_b,
            terms_c,
            clamp_count,
            max_ridge: 0.0,
        })
    }

    pub fn n_passes(&self) -> usize {
        self.fid_samples.len()
    }
}

/// Variance decomposition of a [`FidDistribution`]:
/// `vFID = Var(a) + Var(b) + 4 Var(c) + 2 Cov(a,b) - 4 Cov(a,c) - 4 Cov(b,c)`.
#[derive(Debug, Clone, Copy)]
pub struct VfidDecomposition {
    pub var_a: f64,
    pub var_b: f64,
    pub var_c: f64,
    pub cov_ab: f64,
    pub cov_ac: f64,
    pub cov_bc: f64,
    pub reconstructed_vfid: f64,
    /// `reconstructed_vfid - v_fid`; nonzero beyond round-off only when
    /// clamping perturbed the stored FID samples.
    pub residual: f64,
}

/// Mean, sample variance (`J - 1`) and standard deviation of FID samples.
pub fn fid_stats(samples: &[f64]) -> Result<(f64, f64, f64)> {
    let j = samples.len();
    if j < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            actual: j,
        });
    }
    // J copies of c must give (c, 0, 0) exactly; the summed mean can
    // round away from c otherwise.
    if samples.iter().all(|&s| s == samples[0]) {
        return Ok((samples[0], 0.0, 0.0));
    }
    let mut sum = 0.0;
    for &s in samples {
        sum += s;
    }
    let mean = sum / j as f64;
    let mut acc = 0.0;
    for &s in samples {
        let d = s - mean;
        acc += d * d;
    }
    let var = acc / (j - 1) as f64;
    Ok((mean, var, var.sqrt()))
}

/// Evaluate the FID of every dropout pass of `test` against a fixed
/// reference summary. The passes are independent and run in parallel;
/// results are assembled in pass order.
pub fn fid_samples(
    test: &StochasticEmbeddingSet,
    reference: &GaussianSummary,
) -> Result<FidDistribution> {
    if test.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            context: "test vs reference embedding dimension",
            left: test.dim(),
            right: reference.dim(),
        });
    }

    let per_pass: Vec<Result<PassTerms>> = (0..test.n_passes())
        .into_par_iter()
        .map(|j| {
            let slice = test.pass(j);
            let summary = linalg::mean_and_cov(&slice.view())?;
            let (fid, a, b, c, diag) = linalg::frechet_terms(&summary, reference)?;
            let ridge = diag.ridge_1.max(diag.ridge_2);
            Ok((fid, a, b, c, ridge))
        })
        .collect();

    let j = test.n_passes();
    let mut fid_samples = Vec::with_capacity(j);
    let mut terms_a = Vec::with_capacity(j);
    let mut terms_b = Vec::with_capacity(j);
    let mut terms_c = Vec::with_capacity(j);
    let mut clamp_count = 0;
    let mut max_ridge = 0.0f64;
    for item in per_pass {
        let (fid, a, b, c, ridge) = item?;
        if fid == 0.0 && (a + b - 2.0 * c) < 0.0 {
            clamp_count += 1;
        }
        max_ridge = max_ridge.max(ridge);
        fid_samples.push(fid);
        terms_a.push(a);
        terms_b.push(b);
        terms_c.push(c);
    }

    let (mean_fid, v_fid, sigma_fid) = fid_stats(&fid_samples)?;
    Ok(FidDistribution {
        fid_samples,
        mean_fid,
        v_fid,
        sigma_fid,
        terms_a,
        terms_b,
        terms_c,
        clamp_count,
        max_ridge,
    })
}

/// Per-pass FID evaluation: (fid, a, b, c, applied ridge).
type PassTerms = (f64, f64, f64, f64, f64);

fn sample_cov(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 0..n {
        mx += x[i];
        my += y[i];
    }
    mx /= n as f64;
    my /= n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += (x[i] - mx) * (y[i] - my);
    }
    acc / (n - 1) as f64
}

/// Variance decomposition over the stored `a`, `b`, `c` components,
/// all with the `J - 1` denominator.
pub fn vfid_decomposition(dist: &FidDistribution) -> Result<VfidDecomposition> {
    if dist.n_passes() < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            actual: dist.n_passes(),
        });
    }
    let var_a = sample_cov(&dist.terms_a, &dist.terms_a);
    let var_b = sample_cov(&dist.terms_b, &dist.terms_b);
    let var_c = sample_cov(&dist.terms_c, &dist.terms_c);
    let cov_ab = sample_cov(&dist.terms_a, &dist.terms_b);
    let cov_ac = sample_cov(&dist.terms_a, &dist.terms_c);
    let cov_bc = sample_cov(&dist.terms_b, &dist.terms_c);
    let reconstructed_vfid =
        var_a + var_b + 4.0 * var_c + 2.0 * cov_ab - 4.0 * cov_ac - 4.0 * cov_bc;
    Ok(VfidDecomposition {
        var_a,
        var_b,
        var_c,
        cov_ab,
        cov_ac,
        cov_bc,
        reconstructed_vfid,
        residual: reconstructed_vfid - dist.v_fid,
    })
}

/// Mean over images of the normalized trace of the per-image covariance
/// across dropout passes:
/// `(1/I) sum_i (1/(K(J-1))) sum_j ||l_ij - lbar_i||^2`.
pub fn pvar(test: &StochasticEmbeddingSet) -> Result<f64> {
    let (n_images, n_passes, dim) = (test.n_images(), test.n_passes(), test.dim());
    if n_passes < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            actual: n_passes,
        });
    }
    let data = test.view();
    let mut total = 0.0;
    for i in 0..n_images {
        // An image whose passes are bit-identical has no stochastic
        // spread; contribute an exact zero rather than mean round-off.
        let all_equal =
            (1..n_passes).all(|j| (0..dim).all(|k| data[[i, j, k]] == data[[i, 0, k]]));
        if all_equal {
            continue;
        }
        let mut mean = vec![0.0f64; dim];
        for j in 0..n_passes {
            for k in 0..dim {
                mean[k] += data[[i, j, k]];
            }
        }
        for m in mean.iter_mut() {
            *m /= n_passes as f64;
        }
        let mut acc = 0.0;
        for j in 0..n_passes {
            for k in 0..dim {
                let d = data[[i, j, k]] - mean[k];
                acc += d * d;
            }
        }
        total += acc / (dim as f64 * (n_passes - 1) as f64);
    }
    Ok(total / n_images as f64)
}

/// Mean distance to the `k` nearest reference rows after L2-normalizing
/// every row of both sets; larger means more out-of-distribution.
///
/// Exact brute-force search; ties are broken toward the smaller
/// reference index. A test set equal to the reference set keeps its
/// self-matches (distance zero) — callers are expected to pass disjoint
/// sets.
pub fn knn_ood_score(test: &EmbeddingSet, reference: &EmbeddingSet, k: usize) -> Result<f64> {
    if test.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            context: "test vs reference embedding dimension",
            left: test.dim(),
            right: reference.dim(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if reference.n_images() < k {
        return Err(Error::ReferenceTooSmall {
            k,
            actual: reference.n_images(),
        });
    }

    let t = normalize_rows(&test.view())?;
    let r = normalize_rows(&reference.view())?;

    let dim = t.ncols();
    let mut total = 0.0;
    for ti in 0..t.nrows() {
        let mut dists: Vec<(f64, usize)> = Vec::with_capacity(r.nrows());
        for ri in 0..r.nrows() {
            let mut acc = 0.0;
            for c in 0..dim {
                let d = t[[ti, c]] - r[[ri, c]];
                acc += d * d;
            }
            dists.push((acc.sqrt(), ri));
        }
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut near = 0.0;
        for item in dists.iter().take(k) {
            near += item.0;
        }
        total += near / k as f64;
    }
    Ok(total / t.nrows() as f64)
}

fn normalize_rows(m: &ArrayView2<'_, f64>) -> Result<ndarray::Array2<f64>> {
    let mut out = m.to_owned();
    for (idx, mut row) in out.rows_mut().into_iter().enumerate() {
        let mut acc = 0.0;
        for v in row.iter() {
            acc += v * v;
        }
        let norm = acc.sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNormRow(idx));
        }
        row.mapv_inplace(|v| v / norm);
    }
    Ok(out)
}

/// Mean over `(i, j)` of the L2 norm of each stochastic embedding.
pub fn mean_embedding_norm(test: &StochasticEmbeddingSet) -> f64 {
    let (n_images, n_passes, dim) = (test.n_images(), test.n_passes(), test.dim());
    let data = test.view();
    let mut total = 0.0;
    for i in 0..n_images {
        for j in 0..n_passes {
            let mut acc = 0.0;
            for k in 0..dim {
                acc += data[[i, j, k]] * data[[i, j, k]];
            }
            total += acc.sqrt();
        }
    }
    total / (n_images * n_passes) as f64
}

/// Diagnostics for the first FID component under dropout:
/// the squared distance between the pass-averaged test mean and a
/// reference mean, and the average per-element standard deviation of the
/// per-pass test means.
pub fn mean_term_diagnostics(
    test: &StochasticEmbeddingSet,
    reference_mean: &ArrayView1<'_, f64>,
) -> Result<(f64, f64)> {
    let (_, n_passes, dim) = (test.n_images(), test.n_passes(), test.dim());
    if dim != reference_mean.len() {
        return Err(Error::DimensionMismatch {
            context: "test vs reference dimension",
            left: dim,
            right: reference_mean.len(),
        });
    }
    if n_passes < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            actual: n_passes,
        });
    }

    // Per-pass test means mu_j (K each).
    let n_images = test.n_images();
    let data = test.view();
    let mut pass_means = ndarray::Array2::<f64>::zeros((n_passes, dim));
    for j in 0..n_passes {
        for i in 0..n_images {
            for k in 0..dim {
                pass_means[[j, k]] += data[[i, j, k]];
            }
        }
    }
    pass_means.mapv_inplace(|v| v / n_images as f64);

    let mut avg_mean = Array1::<f64>::zeros(dim);
    for j in 0..n_passes {
        for k in 0..dim {
            avg_mean[k] += pass_means[[j, k]];
        }
    }
    avg_mean.mapv_inplace(|v| v / n_passes as f64);

    let mut sq_dist = 0.0;
    for k in 0..dim {
        let d = avg_mean[k] - reference_mean[k];
        sq_dist += d * d;
    }

    let mut std_sum = 0.0;
    for k in 0..dim {
        let mut acc = 0.0;
        for j in 0..n_passes {
            let d = pass_means[[j, k]] - avg_mean[k];
            acc += d * d;
        }
        std_sum += (acc / (n_passes - 1) as f64).sqrt();
    }
    Ok((sq_dist, std_sum / dim as f64))
}
