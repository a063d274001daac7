#![allow(clippy::needless_range_loop)]

//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured margin. Tolerances and runtime budgets
//! are pinned here; every test must hold them.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use fidtrust::experiments::{run_experiment, ExperimentConfig, RunInputs};
use fidtrust::image::ImageTensor;
use fidtrust::image_metrics::{mae, ms_ssim, MSSSIM_WEIGHTS};
use fidtrust::linalg::{frechet_gaussian, sqrtm_psd, GaussianSummary};
use fidtrust::metrics::{fid_stats, pvar, vfid_decomposition, FidDistribution};
use fidtrust::npy::{read_npy, read_npy_from, write_npy_f32, write_npy_f64, NpyArray};
use fidtrust::rng::CounterRng;
use fidtrust::StochasticEmbeddingSet;
use ndarray::{Array1, Array2, Array3};

fn budget(start: Instant, limit: Duration, what: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= limit,
        "{what} took {elapsed:?}, budget {limit:?}"
    );
}

fn desk_config(kind: &str, master_seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        kind: kind.into(),
        master_seed,
        ..Default::default()
    }
}

/// Criterion 1: closed-form Frechet oracle. 200 seeded 1-D pairs match
/// `(mu1-mu2)^2 + (s1-s2)^2` to 1e-10 relative; 200 diagonal pairs
/// (K = 16) match the diagonal closed form to 1e-8.
#[test]
fn acceptance_01_closed_form_frechet_oracle() {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xACC01, 0);

    let mut worst_1d = 0.0f64;
    for _ in 0..200 {
        let mu1 = rng.next_gaussian() * 4.0;
        let mu2 = rng.next_gaussian() * 4.0;
        let s1 = 0.1 + rng.next_f64() * 5.0;
        let s2 = 0.1 + rng.next_f64() * 5.0;
        let make = |mu: f64, s: f64| {
            GaussianSummary::new(Array1::from(vec![mu]), Array2::from_elem((1, 1), s * s), 2)
                .unwrap()
        };
        let got = frechet_gaussian(&make(mu1, s1), &make(mu2, s2)).unwrap();
        let expect = (mu1 - mu2).powi(2) + (s1 - s2).powi(2);
        let rel = (got - expect).abs() / expect.abs().max(1e-300);
        worst_1d = worst_1d.max(rel);
    }
    assert!(worst_1d < 1e-10, "worst 1-D relative error {worst_1d:e}");

    let mut worst_diag = 0.0f64;
    for _ in 0..200 {
        let k = 16;
        let mu1 = Array1::from_shape_fn(k, |_| rng.next_gaussian());
        let mu2 = Array1::from_shape_fn(k, |_| rng.next_gaussian());
        let l1: Vec<f64> = (0..k).map(|_| 1e-3 + rng.next_f64() * 1e3).collect();
        let l2: Vec<f64> = (0..k).map(|_| 1e-3 + rng.next_f64() * 1e3).collect();
        let g1 = GaussianSummary::new(
            mu1.clone(),
            Array2::from_diag(&Array1::from(l1.clone())),
            2,
        )
        .unwrap();
        let g2 = GaussianSummary::new(
            mu2.clone(),
            Array2::from_diag(&Array1::from(l2.clone())),
            2,
        )
        .unwrap();
        let got = frechet_gaussian(&g1, &g2).unwrap();
        let mut expect = 0.0;
        for i in 0..k {
            expect += (mu1[i] - mu2[i]).powi(2) + (l1[i].sqrt() - l2[i].sqrt()).powi(2);
        }
        let rel = (got - expect).abs() / expect.abs().max(1e-300);
        worst_diag = worst_diag.max(rel);
    }
    assert!(worst_diag < 1e-8, "worst diagonal relative error {worst_diag:e}");

    budget(start, Duration::from_secs(5), "criterion 1");
    println!("[PASS] criterion 1: closed-form Frechet oracle (worst 1-D {worst_1d:.2e}, diagonal {worst_diag:.2e})");
}

/// Random SPD matrix with a prescribed condition number: log-spaced
/// spectrum conjugated by a product of random Givens rotations.
fn random_spd_with_condition(rng: &mut CounterRng, k: usize, condition: f64) -> Array2<f64> {
    let mut a = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
        a[[i, i]] = condition.powf(-t);
    }
    for _ in 0..4 * k {
        let i = rng.next_index(k);
        let mut j = rng.next_index(k - 1);
        if j >= i {
            j += 1;
        }
        let theta = rng.next_f64() * 2.0 * std::f64::consts::PI;
        let (sin, cos) = theta.sin_cos();
        // A := G A G^T with the rotation in the (i, j) plane.
        for c in 0..k {
            let ai = a[[i, c]];
            let aj = a[[j, c]];
            a[[i, c]] = cos * ai - sin * aj;
            a[[j, c]] = sin * ai + cos * aj;
        }
        for r in 0..k {
            let ai = a[[r, i]];
            let aj = a[[r, j]];
            a[[r, i]] = cos * ai - sin * aj;
            a[[r, j]] = sin * ai + cos * aj;
        }
    }
    // Exact symmetry after the rotations' round-off.
    let mut s = Array2::<f64>::zeros((k, k));
    for r in 0..k {
        for c in 0..k {
            s[[r, c]] = 0.5 * (a[[r, c]] + a[[c, r]]);
        }
    }
    s
}

/// Criterion 2: matrix-root reconstruction. 100 random SPD matrices
/// (K in {8, 64, 256}, condition numbers up to 1e8): `sqrtm(A)^2`
/// reconstructs A within 1e-6 relative Frobenius error.
#[test]
fn acceptance_02_matrix_root_reconstruction() {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xACC02, 0);
    let mut worst = 0.0f64;
    let mut count = 0;
    for &(k, cases) in &[(8usize, 40usize), (64, 40), (256, 20)] {
        for _ in 0..cases {
            let condition = 10f64.powf(rng.next_f64() * 8.0);
            let a = random_spd_with_condition(&mut rng, k, condition);
            let root = sqrtm_psd(&a.view()).unwrap();
            let rr = root.dot(&root);
            let mut num = 0.0;
            let mut den = 0.0;
            for r in 0..k {
                for c in 0..k {
                    let d = rr[[r, c]] - a[[r, c]];
                    num += d * d;
                    den += a[[r, c]] * a[[r, c]];
                }
            }
            let rel = (num / den).sqrt();
            worst = worst.max(rel);
            assert!(
                rel < 1e-6,
                "K={k} condition {condition:.2e}: relative error {rel:e}"
            );
            count += 1;
        }
    }
    assert_eq!(count, 100);
    budget(start, Duration::from_secs(30), "criterion 2");
    println!("[PASS] criterion 2: matrix-root reconstruction over 100 SPD matrices (worst {worst:.2e})");
}

/// Criterion 3: decomposition identity over 1000 random fixtures
/// (J = 20): |reconstructed_vfid - Var(a + b - 2c)| <= 1e-8 relative.
#[test]
fn acceptance_03_decomposition_identity() {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xACC03, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let j = 20;
        let a: Vec<f64> = (0..j).map(|_| rng.next_f64() * 50.0).collect();
        let b: Vec<f64> = (0..j).map(|_| rng.next_f64() * 50.0).collect();
        let c: Vec<f64> = (0..j)
            .map(|i| rng.next_f64() * 0.49 * (a[i] + b[i]))
            .collect();
        let dist = FidDistribution::from_terms(a.clone(), b.clone(), c.clone()).unwrap();
        let d = vfid_decomposition(&dist).unwrap();
        let combo: Vec<f64> = (0..j).map(|i| a[i] + b[i] - 2.0 * c[i]).collect();
        let (_, v_combo, _) = fid_stats(&combo).unwrap();
        let rel = (d.reconstructed_vfid - v_combo).abs() / v_combo.abs().max(1e-300);
        worst = worst.max(rel);
        assert!(rel <= 1e-8, "relative residual {rel:e}");
    }
    budget(start, Duration::from_secs(5), "criterion 3");
    println!("[PASS] criterion 3: vFID decomposition identity over 1000 fixtures (worst {worst:.2e})");
}

/// Criterion 4: pVar matches a brute-force double-loop implementation to
/// 1e-12 on 100 random tensors (I <= 16, J <= 20, K <= 32).
#[test]
fn acceptance_04_pvar_oracle() {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xACC04, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let i = 2 + rng.next_index(15);
        let j = 2 + rng.next_index(19);
        let k = 1 + rng.next_index(32);
        let tensor = Array3::from_shape_fn((i, j, k), |_| rng.next_gaussian() * 3.0);
        let set = StochasticEmbeddingSet::new(tensor.clone()).unwrap();
        let got = pvar(&set).unwrap();

        // Brute force: mean over images of tr(Cov_j) / K.
        let mut total = 0.0;
        for ii in 0..i {
            let mut tr = 0.0;
            for kk in 0..k {
                let mean: f64 =
                    (0..j).map(|jj| tensor[[ii, jj, kk]]).sum::<f64>() / j as f64;
                tr += (0..j)
                    .map(|jj| (tensor[[ii, jj, kk]] - mean).powi(2))
                    .sum::<f64>()
                    / (j - 1) as f64;
            }
            total += tr / k as f64;
        }
        let expect = total / i as f64;
        let diff = (got - expect).abs();
        worst = worst.max(diff);
        assert!(diff <= 1e-12, "pvar {got} vs brute force {expect}");
    }
    budget(start, Duration::from_secs(5), "criterion 4");
    println!("[PASS] criterion 4: pVar brute-force oracle over 100 tensors (worst abs diff {worst:.2e})");
}

/// Criterion 5: equal-augmentation trend at desk scale (256+256 images,
/// J = 20, strengths {5, 20, 50, 100}): FID(100) < FID(5) and
/// sigmaFID(100) < sigmaFID(5) for at least 9 of 10 master seeds.
#[test]
fn acceptance_05_equal_augmentation_trend() {
    use rayon::prelude::*;
    let start = Instant::now();
    // Seeds are independent; evaluate them in parallel.
    let outcomes: Vec<(u64, f64, f64, f64, f64, bool)> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = ExperimentConfig {
                strengths: vec![5.0, 20.0, 50.0, 100.0],
                ..desk_config("equal-aug", seed)
            };
            let artifacts = run_experiment(&cfg, &RunInputs::default(), None).unwrap();
            let rows = &artifacts.table.rows;
            let at = |s: f64| rows.iter().find(|r| r.strength == s).unwrap();
            let low = at(5.0);
            let high = at(100.0);
            let ok = high.fid_mean < low.fid_mean && high.sigma_fid < low.sigma_fid;
            (
                seed,
                low.fid_mean,
                high.fid_mean,
                low.sigma_fid,
                high.sigma_fid,
                ok,
            )
        })
        .collect();
    let mut passes = 0;
    for (seed, fid_low, fid_high, sig_low, sig_high, ok) in outcomes {
        println!(
            "  seed {seed}: FID 5% {fid_low:.3} -> 100% {fid_high:.3}, sigmaFID {sig_low:.4} -> {sig_high:.4} {}",
            if ok { "ok" } else { "VIOLATION" }
        );
        passes += ok as u32;
    }
    assert!(passes >= 9, "trend held for only {passes}/10 seeds");
    budget(start, Duration::from_secs(120), "criterion 5");
    println!("[PASS] criterion 5: equal-augmentation FID and sigmaFID decrease ({passes}/10 seeds)");
}

/// Criterion 6: OOD ordering. Three synthetic test sets at increasing
/// shift yield strictly increasing kNN scores for 10/10 seeds and
/// non-decreasing sigmaFID for at least 8/10.
#[test]
fn acceptance_06_ood_ordering() {
    use rayon::prelude::*;
    let start = Instant::now();
    let outcomes: Vec<(u64, Vec<f64>, Vec<f64>)> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = desk_config("ood-table", seed);
            let artifacts = run_experiment(&cfg, &RunInputs::default(), None).unwrap();
            let rows = &artifacts.table.rows;
            assert_eq!(rows.len(), 3);
            let knn: Vec<f64> = rows.iter().map(|r| r.knn.unwrap()).collect();
            let sigma: Vec<f64> = rows.iter().map(|r| r.sigma_fid).collect();
            (seed, knn, sigma)
        })
        .collect();
    let mut knn_ok = 0;
    let mut sigma_ok = 0;
    for (seed, knn, sigma) in outcomes {
        let k_ok = knn[0] < knn[1] && knn[1] < knn[2];
        let s_ok = sigma[0] <= sigma[1] && sigma[1] <= sigma[2];
        println!(
            "  seed {seed}: knn {:.4} {:.4} {:.4} {} | sigmaFID {:.3} {:.3} {:.3} {}",
            knn[0],
            knn[1],
            knn[2],
            if k_ok { "ok" } else { "VIOLATION" },
            sigma[0],
            sigma[1],
            sigma[2],
            if s_ok { "ok" } else { "VIOLATION" },
        );
        knn_ok += k_ok as u32;
        sigma_ok += s_ok as u32;
    }
    assert_eq!(knn_ok, 10, "kNN strictly increasing for only {knn_ok}/10 seeds");
    assert!(sigma_ok >= 8, "sigmaFID non-decreasing for only {sigma_ok}/10 seeds");
    budget(start, Duration::from_secs(120), "criterion 6");
    println!("[PASS] criterion 6: OOD ordering (kNN {knn_ok}/10 strict, sigmaFID {sigma_ok}/10 non-decreasing)");
}

/// Criterion 7: fixed-test-set constancy — the pVar column is identical
/// across all strengths to 1e-12.
#[test]
fn acceptance_07_fixed_test_pvar_constancy() {
    let start = Instant::now();
    let cfg = desk_config("fixed-test", 0);
    let artifacts = run_experiment(&cfg, &RunInputs::default(), None).unwrap();
    let rows = &artifacts.table.rows;
    assert_eq!(rows.len(), 5);
    let first = rows[0].pvar;
    let mut worst = 0.0f64;
    for row in rows {
        worst = worst.max((row.pvar - first).abs());
    }
    assert!(worst <= 1e-12, "pVar spread {worst:e}");
    assert!(first > 0.0);
    budget(start, Duration::from_secs(60), "criterion 7");
    println!("[PASS] criterion 7: fixed-test pVar constant across strengths (spread {worst:.2e})");
}

/// Independent direct-definition MS-SSIM: centered-moment variances,
/// plain nested loops. Kept free of the library implementation.
fn ms_ssim_direct(a: &ImageTensor, b: &ImageTensor) -> f64 {
    let scales = 5usize;
    let span = a.range_span().max(b.range_span());
    let c1 = (0.01 * span).powi(2);
    let c2 = (0.03 * span).powi(2);
    let wsum: f64 = MSSSIM_WEIGHTS.iter().sum();

    let mut kernel = [[0.0f64; 11]; 11];
    let mut ksum = 0.0;
    for (y, row) in kernel.iter_mut().enumerate() {
        for (x, v) in row.iter_mut().enumerate() {
            let dy = y as f64 - 5.0;
            let dx = x as f64 - 5.0;
            *v = (-(dy * dy + dx * dx) / 4.5).exp();
            ksum += *v;
        }
    }
    for row in kernel.iter_mut() {
        for v in row.iter_mut() {
            *v /= ksum;
        }
    }

    let (h0, w0, channels) = a.shape();
    let mut total = 0.0;
    for ch in 0..channels {
        let mut pa: Vec<Vec<f64>> = (0..h0)
            .map(|y| (0..w0).map(|x| a.pixels()[[y, x, ch]]).collect())
            .collect();
        let mut pb: Vec<Vec<f64>> = (0..h0)
            .map(|y| (0..w0).map(|x| b.pixels()[[y, x, ch]]).collect())
            .collect();
        let mut score = 1.0;
        for level in 0..scales {
            let h = pa.len();
            let w = pa[0].len();
            let mut cs_acc = 0.0;
            let mut ssim_acc = 0.0;
            let mut n = 0.0;
            for oy in 0..=(h - 11) {
                for ox in 0..=(w - 11) {
                    let mut mu_a = 0.0;
                    let mut mu_b = 0.0;
                    for wy in 0..11 {
                        for wx in 0..11 {
                            mu_a += kernel[wy][wx] * pa[oy + wy][ox + wx];
                            mu_b += kernel[wy][wx] * pb[oy + wy][ox + wx];
                        }
                    }
                    let mut va = 0.0;
                    let mut vb = 0.0;
                    let mut cov = 0.0;
                    for wy in 0..11 {
                        for wx in 0..11 {
                            let da = pa[oy + wy][ox + wx] - mu_a;
                            let db = pb[oy + wy][ox + wx] - mu_b;
                            va += kernel[wy][wx] * da * da;
                            vb += kernel[wy][wx] * db * db;
                            cov += kernel[wy][wx] * da * db;
                        }
                    }
                    let cs = ((2.0 * cov + c2) / (va + vb + c2)).max(0.0);
                    let lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
                    cs_acc += cs;
                    ssim_acc += (lum * cs).max(0.0);
                    n += 1.0;
                }
            }
            let weight = MSSSIM_WEIGHTS[level] / wsum;
            if level == scales - 1 {
                score *= (ssim_acc / n).powf(weight);
            } else {
                score *= (cs_acc / n).powf(weight);
                let nh = h / 2;
                let nw = w / 2;
                let down = |p: &[Vec<f64>]| -> Vec<Vec<f64>> {
                    (0..nh)
                        .map(|y| {
                            (0..nw)
                                .map(|x| {
                                    (p[2 * y][2 * x]
                                        + p[2 * y][2 * x + 1]
                                        + p[2 * y + 1][2 * x]
                                        + p[2 * y + 1][2 * x + 1])
                                        / 4.0
                                })
                                .collect()
                        })
                        .collect()
                };
                pa = down(&pa);
                pb = down(&pb);
            }
        }
        total += score;
    }
    total / channels as f64
}

/// Criterion 8: validator correctness — MS-SSIM self-similarity within
/// 1e-9 on 20 images, agreement with the direct-definition oracle within
/// 1e-6 on 20 noise pairs, and MAE metric axioms on 100 random triples
/// to 1e-12.
#[test]
fn acceptance_08_validator_correctness() {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xACC08, 0);
    let random_image = |rng: &mut CounterRng| {
        ImageTensor::new(
            Array3::from_shape_fn((176, 176, 1), |_| rng.next_f64()),
            (0.0, 1.0),
        )
        .unwrap()
    };

    let mut worst_self = 0.0f64;
    for _ in 0..20 {
        let img = random_image(&mut rng);
        let v = ms_ssim(&img, &img).unwrap();
        worst_self = worst_self.max((v - 1.0).abs());
    }
    assert!(worst_self < 1e-9, "self MS-SSIM off by {worst_self:e}");

    let mut worst_oracle = 0.0f64;
    for _ in 0..20 {
        let img = random_image(&mut rng);
        let noisy = img
            .with_pixels(
                img.pixels() + &Array3::from_shape_fn((176, 176, 1), |_| rng.next_gaussian() * 0.2),
            )
            .unwrap();
        let got = ms_ssim(&img, &noisy).unwrap();
        let expect = ms_ssim_direct(&img, &noisy);
        worst_oracle = worst_oracle.max((got - expect).abs());
    }
    assert!(worst_oracle < 1e-6, "oracle mismatch {worst_oracle:e}");

    let small = |rng: &mut CounterRng| {
        ImageTensor::new(
            Array3::from_shape_fn((9, 7, 3), |_| rng.next_f64() * 2.0 - 0.5),
            (0.0, 1.0),
        )
        .unwrap()
    };
    for _ in 0..100 {
        let a = small(&mut rng);
        let b = small(&mut rng);
        let c = small(&mut rng);
        let ab = mae(&a, &b).unwrap();
        let ba = mae(&b, &a).unwrap();
        assert!(ab >= 0.0);
        assert!((ab - ba).abs() <= 1e-12);
        assert!(ab <= mae(&a, &c).unwrap() + mae(&c, &b).unwrap() + 1e-12);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
    }

    budget(start, Duration::from_secs(30), "criterion 8");
    println!("[PASS] criterion 8: validators (self {worst_self:.2e}, oracle {worst_oracle:.2e}, MAE axioms x100)");
}

/// Criterion 9: end-to-end determinism — the same experiment CLI
/// invocation with the same seed produces byte-identical CSV, manifest
/// and SVG outputs, across different thread counts.
#[test]
fn acceptance_09_cli_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    for (out, threads) in [("run1", "1"), ("run2", "4")] {
        let status = Command::new(env!("CARGO_BIN_EXE_fidtrust"))
            .current_dir(dir.path())
            .args([
                "experiment",
                "--kind",
                "sensitivity",
                "--images",
                "32",
                "--image-size",
                "16x16x1",
                "--embed-dim",
                "8",
                "--hidden",
                "32,16",
                "--mcd",
                "4",
                "--k",
                "3",
                "--strengths",
                "0,10,40",
                "--seed",
                "1234",
                "--threads",
                threads,
                "--charts",
                "--keep-latents",
                "--out",
                out,
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }

    let mut compared = 0;
    for name in [
        "table.csv",
        "manifest.json",
        "charts/fid_mean.svg",
        "charts/sigma_fid.svg",
        "charts/pvar.svg",
        "latents/reference-latents.npy",
        "latents/strength-0-test.npy",
        "latents/strength-10-test.npy",
        "latents/strength-40-test.npy",
    ] {
        let a = std::fs::read(dir.path().join("run1").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("run2").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        compared += 1;
    }
    budget(start, Duration::from_secs(120), "criterion 9");
    println!("[PASS] criterion 9: CLI determinism across reruns and thread counts ({compared} files byte-identical)");
}

/// Criterion 10: format round-trip — 50 random arrays (ranks 2 and 3,
/// both float widths) survive save/load bitwise, and fixtures written by
/// an independent writer load with identical values.
#[test]
fn acceptance_10_format_round_trip() {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xACC10, 0);
    for case in 0..50u64 {
        let shape: Vec<usize> = if case % 2 == 0 {
            vec![1 + rng.next_index(6), 1 + rng.next_index(8)]
        } else {
            vec![
                1 + rng.next_index(4),
                2 + rng.next_index(4),
                1 + rng.next_index(6),
            ]
        };
        let count: usize = shape.iter().product();
        if case % 4 < 2 {
            let data: Vec<f64> = (0..count).map(|_| rng.next_gaussian() * 1e6).collect();
            let mut buf = Vec::new();
            write_npy_f64(&mut buf, &shape, &data).unwrap();
            let back = read_npy_from(&mut std::io::Cursor::new(buf)).unwrap();
            assert_eq!(back.shape(), &shape[..]);
            for (a, b) in back.data().iter().zip(&data) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        } else {
            let data: Vec<f32> = (0..count).map(|_| rng.next_gaussian() as f32).collect();
            let mut buf = Vec::new();
            write_npy_f32(&mut buf, &shape, &data).unwrap();
            match read_npy_from(&mut std::io::Cursor::new(buf)).unwrap() {
                NpyArray::F32 { data: d, shape: s } => {
                    assert_eq!(s, shape);
                    for (a, b) in d.iter().zip(&data) {
                        assert_eq!((*a as f32).to_bits(), b.to_bits());
                    }
                }
                _ => panic!("expected an f4 array"),
            }
        }
    }

    // Fixtures produced by an independent format writer.
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let arr = read_npy(&fixtures.join("numpy_f8_3d.npy")).unwrap();
    assert_eq!(arr.shape(), &[4, 3, 5]);
    let mut idx = 0;
    for i in 0..4 {
        for j in 0..3 {
            for k in 0..5 {
                let expect = (i as f64 * 0.5 + j as f64 * 0.25) + k as f64 / 7.0;
                assert_eq!(arr.data()[idx].to_bits(), expect.to_bits());
                idx += 1;
            }
        }
    }
    let arr = read_npy(&fixtures.join("numpy_f4_2d.npy")).unwrap();
    assert_eq!(arr.shape(), &[6, 4]);
    let mut idx = 0;
    for i in 0..6 {
        for j in 0..4 {
            let expect = (i as f32 * 10.0 + j as f32) / 3.0f32;
            assert_eq!((arr.data()[idx] as f32).to_bits(), expect.to_bits());
            idx += 1;
        }
    }

    budget(start, Duration::from_secs(10), "criterion 10");
    println!("[PASS] criterion 10: npy round-trip (50 arrays) and independent-writer fixtures");
}
