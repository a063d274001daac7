//! Dense symmetric linear algebra: covariance estimation, the symmetric-PSD
//! matrix square root, and the Frechet distance between Gaussian summaries.
//!
//! The square root goes through a symmetric eigendecomposition
//! (Householder tridiagonalization followed by implicit-shift QL), not
//! Newton-Schulz iteration or a Schur form of the nonsymmetric product.
//! All reductions run left to right over row-major storage so repeated
//! runs are bit-identical.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Relative Frobenius tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues below `-NEG_EIGEN_TOL * max |eigenvalue|` signal a
/// genuinely non-PSD input; anything above is treated as round-off and
/// clamped to zero.
pub const NEG_EIGEN_TOL: f64 = 1e-8;

/// A covariance is regularized when its smallest eigenvalue falls below
/// `SINGULAR_TOL * largest`; the added ridge is `RIDGE_SCALE * largest`.
pub const SINGULAR_TOL: f64 = 1e-10;
pub const RIDGE_SCALE: f64 = 1e-6;

/// Mean vector and covariance matrix fitted to one embedding set.
#[derive(Debug, Clone)]
pub struct GaussianSummary {
    mean: Array1<f64>,
    cov: Array2<f64>,
    n_samples: usize,
}

impl GaussianSummary {
    /// Build a summary from parts, validating the type invariants:
    /// symmetric covariance, no eigenvalue below the negative tolerance,
    /// and at least two fitted samples.
    pub fn new(mean: Array1<f64>, cov: Array2<f64>, n_samples: usize) -> Result<Self> {
        if n_samples < 2 {
            return Err(Error::InsufficientSamples {
                required: 2,
                actual: n_samples,
            });
        }
        let k = mean.len();
        if cov.nrows() != k || cov.ncols() != k {
            return Err(Error::DimensionMismatch {
                context: "mean length vs covariance side",
                left: k,
                right: cov.nrows(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) || cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian summary"));
        }
        check_symmetric(&cov.view())?;
        Ok(Self {
            mean,
            cov,
            n_samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> ArrayView1<'_, f64> {
        self.mean.view()
    }

    pub fn cov(&self) -> ArrayView2<'_, f64> {
        self.cov.view()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
}

/// Numerical adjustments applied while evaluating a Frechet distance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrechetDiagnostics {
    /// Ridge added to the first / second covariance before the square root
    /// (zero when no regularization was needed).
    pub ridge_1: f64,
    pub ridge_2: f64,
    /// Set when the raw distance came out slightly negative and was
    /// clamped to zero; `clamp_magnitude` records how negative it was.
    pub clamped: bool,
    pub clamp_magnitude: f64,
}

fn check_symmetric(m: &ArrayView2<'_, f64>) -> Result<()> {
    let n = m.nrows();
    let mut asym = 0.0f64;
    let mut norm = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let d = m[[i, j]] - m[[j, i]];
            asym += d * d;
            norm += m[[i, j]] * m[[i, j]];
        }
    }
    let rel = if norm > 0.0 {
        (asym / norm).sqrt()
    } else {
        0.0
    };
    if rel > SYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            asymmetry: rel,
            tolerance: SYMMETRY_TOL,
        });
    }
    Ok(())
}

/// Column means and the unbiased (`I - 1` denominator) covariance of a
/// row-per-sample matrix. The covariance is exactly symmetric: the upper
/// triangle is computed once and mirrored.
pub fn mean_and_cov(samples: &ArrayView2<'_, f64>) -> Result<GaussianSummary> {
    let (rows, cols) = samples.dim();
    if rows < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            actual: rows,
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sample matrix"));
    }

    let mut mean = Array1::<f64>::zeros(cols);
    for i in 0..rows {
        for k in 0..cols {
            mean[k] += samples[[i, k]];
        }
    }
    mean.mapv_inplace(|v| v / rows as f64);

    let mut centered = Array2::<f64>::zeros((rows, cols));
    for i in 0..rows {
        for k in 0..cols {
            centered[[i, k]] = samples[[i, k]] - mean[k];
        }
    }

    let denom = (rows - 1) as f64;
    let mut cov = Array2::<f64>::zeros((cols, cols));
    for a in 0..cols {
        for b in a..cols {
            let mut acc = 0.0;
            for i in 0..rows {
                acc += centered[[i, a]] * centered[[i, b]];
            }
            let v = acc / denom;
            cov[[a, b]] = v;
            cov[[b, a]] = v;
        }
    }

    GaussianSummary::new(mean, cov, rows)
}

/// Eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matrix whose columns
/// are the matching eigenvectors. Householder reduction to tridiagonal
/// form, then implicit-shift QL with eigenvector accumulation (the
/// classic `tred2` / `tql2` pair).
pub fn sym_eigen(m: &ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            context: "square matrix expected",
            left: n,
            right: m.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput("eigendecomposition"));
    }

    // Working copy; `v` ends up holding the eigenvectors.
    let mut v = m.to_owned();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];

    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    // Sort ascending; ties keep original order for determinism.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b)));

    let mut values = Array1::<f64>::zeros(n);
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = d[src];
        for r in 0..n {
            vectors[[r, dst]] = v[[r, src]];
        }
    }
    Ok((values, vectors))
}

/// Householder reduction of a real symmetric matrix to tridiagonal form.
/// On exit `v` holds the accumulated orthogonal transform, `d` the
/// diagonal and `e` the subdiagonal.
fn tred2(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        let mut scale = 0.0;
        for k in 0..=l {
            scale += d[k].abs();
        }
        if scale == 0.0 || l == 0 {
            e[i] = d[l];
            for j in 0..=l {
                d[j] = v[[l, j]];
                v[[i, j]] = 0.0;
                v[[j, i]] = 0.0;
            }
        } else {
            for k in 0..=l {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[l];
            let mut g = if f > 0.0 { -h.sqrt() } else { h.sqrt() };
            e[i] = scale * g;
            h -= f * g;
            d[l] = f - g;
            for j in 0..=l {
                e[j] = 0.0;
            }

            for j in 0..=l {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..=l {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..=l {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..=l {
                e[j] -= hh * d[j];
            }
            for j in 0..=l {
                f = d[j];
                g = e[j];
                for k in j..=l {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[l, j]];
                v[[i, j]] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..(n - 1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = 0.0;
    }
    v[[n - 1, n - 1]] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix with
/// eigenvector accumulation.
fn tql2(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(Error::EigenConvergence);
                }

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[[k, i + 1]];
                        v[[k, i + 1]] = s * v[[k, i]] + c * h;
                        v[[k, i]] = c * v[[k, i]] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix after the PSD round-off policy:
/// values in `[-tol, 0)` with `tol = NEG_EIGEN_TOL * max |eigenvalue|`
/// are clamped to zero, anything below `-tol` is an error.
fn psd_eigen(m: &ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (mut values, vectors) = sym_eigen(m)?;
    let abs_max = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = NEG_EIGEN_TOL * abs_max;
    for v in values.iter_mut() {
        if *v < -tol {
            return Err(Error::NotPositiveSemiDefinite {
                eigenvalue: *v,
                tolerance: tol,
            });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok((values, vectors))
}

/// Symmetric PSD square root via eigendecomposition.
///
/// The result is symmetrized after reassembly so that `R == R^T` holds
/// exactly; `R . R` reconstructs the input to about `1e-6` relative
/// Frobenius error for condition numbers up to `1e8`.
pub fn sqrtm_psd(m: &ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_symmetric(m)?;
    let sym = symmetrize(m);
    let (values, vectors) = psd_eigen(&sym.view())?;
    let roots = values.mapv(f64::sqrt);
    let n = sym.nrows();

    // R = V diag(sqrt(lambda)) V^T
    let mut scaled = Array2::<f64>::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            scaled[[r, c]] = vectors[[r, c]] * roots[c];
        }
    }
    let root = scaled.dot(&vectors.t());
    Ok(symmetrize(&root.view()))
}

fn symmetrize(m: &ArrayView2<'_, f64>) -> Array2<f64> {
    let n = m.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]]);
        }
    }
    out
}

/// `tr((S1 S2)^(1/2))` for symmetric PSD `S1`, `S2`, evaluated through the
/// symmetrized form `tr((R S2 R)^(1/2))` with `R = sqrtm_psd(S1)`, which
/// is mathematically equal and keeps the eigenproblem symmetric. Only the
/// eigenvalues of the inner product are needed, not the root matrix.
pub fn trace_sqrt_product(s1: &ArrayView2<'_, f64>, s2: &ArrayView2<'_, f64>) -> Result<f64> {
    if s1.nrows() != s2.nrows() {
        return Err(Error::DimensionMismatch {
            context: "covariance sides",
            left: s1.nrows(),
            right: s2.nrows(),
        });
    }
    check_symmetric(s2)?;
    let root = sqrtm_psd(s1)?;
    let inner = root.dot(&s2.dot(&root));
    let inner = symmetrize(&inner.view());
    let (values, _) = psd_eigen(&inner.view())?;
    let mut acc = 0.0;
    for v in values.iter() {
        acc += v.sqrt();
    }
    Ok(acc)
}

/// Ridge a covariance when it is numerically singular: if the smallest
/// eigenvalue is below `SINGULAR_TOL * largest`, add `RIDGE_SCALE *
/// largest` to the diagonal. Returns the (possibly shared) matrix and the
/// ridge actually applied.
fn regularize(cov: &ArrayView2<'_, f64>) -> Result<(Array2<f64>, f64)> {
    let (values, _) = psd_eigen(cov)?;
    let largest = values.iter().fold(0.0f64, |a, &b| a.max(b));
    let smallest = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if largest > 0.0 && smallest < SINGULAR_TOL * largest {
        let ridge = RIDGE_SCALE * largest;
        let mut out = cov.to_owned();
        for i in 0..out.nrows() {
            out[[i, i]] += ridge;
        }
        Ok((out, ridge))
    } else {
        Ok((cov.to_owned(), 0.0))
    }
}

/// Squared Frechet distance between two Gaussian summaries,
/// `||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2))`, together with the
/// numeric diagnostics accumulated along the way.
///
/// Near-singular covariances are ridged before the square-root kernel
/// (the trace terms use the raw matrices); a slightly negative total is
/// clamped to zero and reported.
pub fn frechet_gaussian_with_diagnostics(
    g1: &GaussianSummary,
    g2: &GaussianSummary,
) -> Result<(f64, FrechetDiagnostics)> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            context: "gaussian summary dimensions",
            left: g1.dim(),
            right: g2.dim(),
        });
    }
    let (value, _a, _b, _c, diag) = frechet_terms(g1, g2)?;
    Ok((value, diag))
}

/// Squared Frechet distance; see [`frechet_gaussian_with_diagnostics`].
pub fn frechet_gaussian(g1: &GaussianSummary, g2: &GaussianSummary) -> Result<f64> {
    frechet_gaussian_with_diagnostics(g1, g2).map(|(v, _)| v)
}

/// The distance split into its three components:
/// `a = ||mu1 - mu2||^2`, `b = tr(S1 + S2)`, `c = tr((S1 S2)^(1/2))`,
/// with the clamped total `max(a + b - 2c, 0)`.
pub(crate) fn frechet_terms(
    g1: &GaussianSummary,
    g2: &GaussianSummary,
) -> Result<(f64, f64, f64, f64, FrechetDiagnostics)> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            context: "gaussian summary dimensions",
            left: g1.dim(),
            right: g2.dim(),
        });
    }

    let mut a = 0.0;
    for (x, y) in g1.mean().iter().zip(g2.mean().iter()) {
        let d = x - y;
        a += d * d;
    }

    let mut b = 0.0;
    for i in 0..g1.dim() {
        b += g1.cov()[[i, i]] + g2.cov()[[i, i]];
    }

    // Bit-identical summaries: the distance is zero by definition; skip
    // the square-root kernel so the result is exact, with c = b/2
    // keeping a + b - 2c = 0 without round-off.
    if a == 0.0 && g1.cov() == g2.cov() {
        return Ok((0.0, 0.0, b, b / 2.0, FrechetDiagnostics::default()));
    }

    let (c1, ridge_1) = regularize(&g1.cov())?;
    let (c2, ridge_2) = regularize(&g2.cov())?;
    let c = trace_sqrt_product(&c1.view(), &c2.view())?;

    let raw = a + b - 2.0 * c;
    let mut diag = FrechetDiagnostics {
        ridge_1,
        ridge_2,
        ..Default::default()
    };
    let value = if raw < 0.0 {
        diag.clamped = true;
        diag.clamp_magnitude = -raw;
        0.0
    } else {
        raw
    };
    Ok((value, a, b, c, diag))
}
