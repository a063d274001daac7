//! The four experiment protocols, each behind the [`Experiment`] trait
//! and selected by its registered name:
//!
//! * `equal-aug` — noise both halves equally per strength; FID should
//!   fall toward zero as contents homogenize.
//! * `ood-table` — score test sets at increasing distribution shift from
//!   a fixed reference (kNN, FID, sigmaFID, pVar per set).
//! * `sensitivity` — fixed clean reference, test half augmented per
//!   strength, full per-strength diagnostics.
//! * `fixed-test` — fixed clean MCD test set against an increasingly
//!   augmented reference embedded with a single dropout sample.
//!
//! Every condition derives its own seeds from the master seed and the
//! condition label, so identical config and seed give bit-identical
//! tables regardless of scheduling.

mod equal_aug;
mod fixed_test;
mod ood_table;
mod sensitivity;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::embedder::{self, Embedder, LoadedEmbeddings, ToyEmbedderConfig};
use crate::embedding::{EmbeddingSet, StochasticEmbeddingSet};
use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::linalg::GaussianSummary;
use crate::metrics::{self, FidDistribution};
use crate::npy;
use crate::rng::{derive_seed, hash_label};
use crate::synth::{self, SynthSpec};

pub use equal_aug::EqualAugmentation;
pub use fixed_test::FixedTestSweep;
pub use ood_table::OodTable;
pub use sensitivity::SensitivitySweep;

pub const EXPERIMENT_NAMES: &[&str] = &["equal-aug", "ood-table", "sensitivity", "fixed-test"];

/// Fully resolved experiment configuration; everything that affects the
/// output is in here or in the run inputs.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    /// Registered experiment name.
    pub kind: String,
    /// Noise strengths (percent) for the sweep experiments.
    pub strengths: Vec<f64>,
    /// Mixture fractions for the ood-table's synthetic test sets.
    pub shift_fractions: Vec<f64>,
    /// Images per half (sweeps) or per test set (ood-table; the
    /// reference uses twice this).
    pub n_images: usize,
    pub image_size: (usize, usize, usize),
    /// Dropout evaluation passes J.
    pub mcd_passes: usize,
    pub knn_k: usize,
    /// Synthetic family for the sweep experiments.
    pub synth_kind: String,
    pub embed_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub dropout_rate: f64,
    pub master_seed: u64,
    /// Persist per-condition latent tensors next to the table.
    pub keep_latents: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: "sensitivity".into(),
            strengths: vec![1.0, 5.0, 10.0, 20.0, 40.0],
            shift_fractions: vec![0.2, 0.5, 0.9],
            n_images: 256,
            image_size: (32, 32, 3),
            mcd_passes: 20,
            knn_k: 5,
            synth_kind: "blobs".into(),
            embed_dim: 64,
            hidden_dims: vec![256, 128],
            dropout_rate: 0.2,
            master_seed: 0,
            keep_latents: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mcd_passes < 2 {
            return Err(Error::InsufficientSamples {
                required: 2,
                actual: self.mcd_passes,
            });
        }
        if self.n_images < 4 {
            return Err(Error::InvalidParameter(
                "need at least 4 images per half".into(),
            ));
        }
        let mut last = f64::NEG_INFINITY;
        for &s in &self.strengths {
            if !(s.is_finite() && s >= 0.0 && s > last) {
                return Err(Error::InvalidParameter(
                    "strengths must be non-negative and strictly increasing".into(),
                ));
            }
            last = s;
        }
        Ok(())
    }

    pub(crate) fn embedder_config(&self) -> ToyEmbedderConfig {
        ToyEmbedderConfig {
            input_size: self.image_size,
            embed_dim: self.embed_dim,
            hidden_dims: self.hidden_dims.clone(),
            dropout_rate: self.dropout_rate,
            weight_seed: derive_seed(self.master_seed, &[hash_label("weights")]),
        }
    }
}

/// External data handed to a run; when absent the runners generate
/// synthetic sets.
#[derive(Debug, Default)]
pub struct RunInputs {
    /// Sweeps: dataset to split into halves, in caller-defined order.
    pub images: Option<Vec<ImageTensor>>,
    /// Ood-table: precomputed reference latents (dropout off).
    pub ood_reference: Option<EmbeddingSet>,
    /// Ood-table: labelled precomputed test sets.
    pub ood_tests: Vec<(String, LoadedEmbeddings)>,
}

/// One row of a result table. Cells that a given experiment cannot
/// define (e.g. paired image validators for unpaired OOD sets) stay
/// `None` and serialize as empty CSV cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub label: String,
    pub strength: f64,
    pub fid_mean: f64,
    pub sigma_fid: f64,
    pub v_fid: f64,
    pub pvar: f64,
    pub knn: Option<f64>,
    pub embedding_norm: f64,
    pub mean_term_sq: f64,
    pub mean_term_std: f64,
    pub mae: Option<f64>,
    pub ms_ssim: Option<f64>,
    pub var_a: f64,
    pub var_b: f64,
    pub var_c: f64,
    pub cov_ab: f64,
    pub cov_ac: f64,
    pub cov_bc: f64,
    pub top5: Option<f64>,
}

pub const CSV_HEADER: &str = "label,strength,fid_mean,sigma_fid,v_fid,pvar,knn,embedding_norm,\
mean_term_sq,mean_term_std,mae,ms_ssim,var_a,var_b,var_c,cov_ab,cov_ac,cov_bc,top5";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
}

/// 17 significant digits, enough for `f64` to round-trip exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let opt = |v: &Option<f64>| v.map(format_float).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.label.replace(',', ";"),
                format_float(row.strength),
                format_float(row.fid_mean),
                format_float(row.sigma_fid),
                format_float(row.v_fid),
                format_float(row.pvar),
                opt(&row.knn),
                format_float(row.embedding_norm),
                format_float(row.mean_term_sq),
                format_float(row.mean_term_std),
                opt(&row.mae),
                opt(&row.ms_ssim),
                format_float(row.var_a),
                format_float(row.var_b),
                format_float(row.var_c),
                format_float(row.cov_ab),
                format_float(row.cov_ac),
                format_float(row.cov_bc),
                opt(&row.top5),
            ));
        }
        out
    }

    /// Every populated cell must be finite; required cells must exist.
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::EmptyInput("result table"));
        }
        for row in &self.rows {
            let required = [
                row.strength,
                row.fid_mean,
                row.sigma_fid,
                row.v_fid,
                row.pvar,
                row.embedding_norm,
                row.mean_term_sq,
                row.mean_term_std,
                row.var_a,
                row.var_b,
                row.var_c,
                row.cov_ab,
                row.cov_ac,
                row.cov_bc,
            ];
            if required.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("result table cell"));
            }
            for v in [row.knn, row.mae, row.ms_ssim, row.top5].into_iter().flatten() {
                if !v.is_finite() {
                    return Err(Error::NonFinite("result table cell"));
                }
            }
        }
        Ok(())
    }

    /// Join a `(label, top5)` sidecar into the table by exact label.
    pub fn join_top5(&mut self, pairs: &[(String, f64)]) {
        for row in self.rows.iter_mut() {
            if let Some((_, v)) = pairs.iter().find(|(label, _)| *label == row.label) {
                row.top5 = Some(*v);
            }
        }
    }
}

/// One experiment protocol.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultTable>;
}

/// Look an experiment up by its registered name.
pub fn build_experiment(kind: &str) -> Result<Box<dyn Experiment>> {
    match kind {
        "equal-aug" => Ok(Box::new(EqualAugmentation)),
        "ood-table" => Ok(Box::new(OodTable)),
        "sensitivity" => Ok(Box::new(SensitivitySweep)),
        "fixed-test" => Ok(Box::new(FixedTestSweep)),
        other => Err(Error::InvalidParameter(format!(
            "unknown experiment '{other}' (expected one of {EXPERIMENT_NAMES:?})"
        ))),
    }
}

/// Everything a runner needs: config, optional external inputs, and an
/// optional directory for persisted latents.
pub struct RunContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub inputs: &'a RunInputs,
    pub latents_dir: Option<&'a Path>,
}

impl RunContext<'_> {
    /// Seed for a named sub-computation of this run.
    pub(crate) fn seed(&self, parts: &[&str]) -> u64 {
        let hashed: Vec<u64> = std::iter::once(hash_label(&self.cfg.kind))
            .chain(parts.iter().map(|p| hash_label(p)))
            .collect();
        derive_seed(self.cfg.master_seed, &hashed)
    }

    pub(crate) fn build_embedder(&self) -> Result<Embedder> {
        embedder::build_toy_embedder(self.cfg.embedder_config())
    }

    /// The two dataset halves for the sweep experiments: external images
    /// split in caller order, or two synthetic halves.
    pub(crate) fn halves(&self) -> Result<(Vec<ImageTensor>, Vec<ImageTensor>)> {
        if let Some(images) = &self.inputs.images {
            if images.len() < 4 {
                return Err(Error::InvalidParameter(format!(
                    "dataset of {} images is too small to split",
                    images.len()
                )));
            }
            let half = images.len() / 2;
            return Ok((images[..half].to_vec(), images[half..2 * half].to_vec()));
        }
        let spec = SynthSpec::new(&self.cfg.synth_kind, 2 * self.cfg.n_images, self.cfg.image_size);
        let mut all = synth::generate(&spec, self.seed(&["dataset"]))?;
        let tail = all.split_off(self.cfg.n_images);
        Ok((all, tail))
    }

    pub(crate) fn persist_latents(&self, label: &str, name: &str, payload: Latents<'_>) -> Result<()> {
        let Some(dir) = self.latents_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir)?;
        let path: PathBuf = dir.join(format!("{label}-{name}.npy"));
        match payload {
            Latents::Matrix(set) => {
                let shape = [set.n_images(), set.dim()];
                let data: Vec<f64> = set.view().iter().copied().collect();
                npy::save_npy_f64(&path, &shape, &data)
            }
            Latents::Tensor(set) => {
                let shape = [set.n_images(), set.n_passes(), set.dim()];
                let data: Vec<f64> = set.view().iter().copied().collect();
                npy::save_npy_f64(&path, &shape, &data)
            }
        }
    }
}

pub enum Latents<'a> {
    Matrix(&'a EmbeddingSet),
    Tensor(&'a StochasticEmbeddingSet),
}

/// The full set of per-condition metrics shared by the runners.
pub(crate) struct ConditionMetrics {
    pub dist: FidDistribution,
    pub pvar: f64,
    pub embedding_norm: f64,
    pub mean_term_sq: f64,
    pub mean_term_std: f64,
}

pub(crate) fn condition_metrics(
    test: &StochasticEmbeddingSet,
    reference: &GaussianSummary,
) -> Result<ConditionMetrics> {
    let dist = metrics::fid_samples(test, reference)?;
    let pvar = metrics::pvar(test)?;
    let embedding_norm = metrics::mean_embedding_norm(test);
    let (mean_term_sq, mean_term_std) = metrics::mean_term_diagnostics(test, &reference.mean())?;
    Ok(ConditionMetrics {
        dist,
        pvar,
        embedding_norm,
        mean_term_sq,
        mean_term_std,
    })
}

pub(crate) fn row_from_metrics(
    label: String,
    strength: f64,
    m: &ConditionMetrics,
    knn: Option<f64>,
    mae: Option<f64>,
    ms_ssim: Option<f64>,
) -> Result<ResultRow> {
    let d = metrics::vfid_decomposition(&m.dist)?;
    Ok(ResultRow {
        label,
        strength,
        fid_mean: m.dist.mean_fid,
        sigma_fid: m.dist.sigma_fid,
        v_fid: m.dist.v_fid,
        pvar: m.pvar,
        knn,
        embedding_norm: m.embedding_norm,
        mean_term_sq: m.mean_term_sq,
        mean_term_std: m.mean_term_std,
        mae,
        ms_ssim,
        var_a: d.var_a,
        var_b: d.var_b,
        var_c: d.var_c,
        cov_ab: d.cov_ab,
        cov_ac: d.cov_ac,
        cov_bc: d.cov_bc,
        top5: None,
    })
}

/// Mean image-wise MAE and MS-SSIM between paired sets, with the
/// MS-SSIM scale count reduced to what the image size supports (`None`
/// when even one scale does not fit).
pub(crate) fn paired_validators(
    originals: &[ImageTensor],
    augmented: &[ImageTensor],
) -> Result<(Option<f64>, Option<f64>)> {
    let mut mae_acc = 0.0;
    for (a, b) in originals.iter().zip(augmented) {
        mae_acc += crate::image_metrics::mae(a, b)?;
    }
    let mae = Some(mae_acc / originals.len() as f64);

    let (h, w, _) = originals[0].shape();
    let scales = crate::image_metrics::max_scales_for(h, w);
    if scales == 0 {
        return Ok((mae, None));
    }
    let mut ssim_acc = 0.0;
    for (a, b) in originals.iter().zip(augmented) {
        ssim_acc += crate::image_metrics::ms_ssim_scales(a, b, scales)?;
    }
    Ok((mae, Some(ssim_acc / originals.len() as f64)))
}

/// Run manifest: the resolved configuration and derived seeds that
/// reproduce the table.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'a str,
    pub config: &'a ExperimentConfig,
    pub master_seed: u64,
    pub weight_seed: u64,
    pub condition_labels: Vec<String>,
}

pub struct RunArtifacts {
    pub table: ResultTable,
    pub manifest_json: String,
}

/// Run an experiment. When `latents_dir` is given and the config has
/// `keep_latents`, per-condition tensors are persisted there; the table
/// and manifest are returned, not written.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    inputs: &RunInputs,
    latents_dir: Option<&Path>,
) -> Result<RunArtifacts> {
    cfg.validate()?;
    let experiment = build_experiment(&cfg.kind)?;
    let ctx = RunContext {
        cfg,
        inputs,
        latents_dir: latents_dir.filter(|_| cfg.keep_latents),
    };
    let table = experiment.run(&ctx)?;
    table.validate()?;

    let manifest = RunManifest {
        tool: "fidtrust",
        version: env!("CARGO_PKG_VERSION"),
        experiment: experiment.name(),
        config: cfg,
        master_seed: cfg.master_seed,
        weight_seed: cfg.embedder_config().weight_seed,
        condition_labels: table.rows.iter().map(|r| r.label.clone()).collect(),
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    Ok(RunArtifacts {
        table,
        manifest_json,
    })
}

/// Run an experiment and write `table.csv`, `manifest.json` and (with
/// `keep_latents`) a `latents/` directory under `out_dir`.
pub fn run_experiment_to_dir(
    cfg: &ExperimentConfig,
    inputs: &RunInputs,
    out_dir: &Path,
) -> Result<RunArtifacts> {
    std::fs::create_dir_all(out_dir)?;
    let latents_dir = out_dir.join("latents");
    let artifacts = run_experiment(cfg, inputs, Some(&latents_dir))?;
    std::fs::write(out_dir.join("table.csv"), artifacts.table.to_csv())?;
    std::fs::write(out_dir.join("manifest.json"), &artifacts.manifest_json)?;
    Ok(artifacts)
}
