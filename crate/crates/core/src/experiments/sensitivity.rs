//! Sensitivity sweep: a fixed clean reference half (dropout off) against
//! the other half noise-augmented per strength and embedded with MCD.
//! Records the full diagnostic set per strength: FID statistics, pVar,
//! paired validators, embedding norms, mean-term diagnostics and the
//! variance decomposition.

use crate::augment::{augment_set, AugmentSpec};
use crate::embedder::{embed_deterministic, embed_stochastic};
use crate::error::Result;
use crate::linalg::mean_and_cov;
use crate::metrics::knn_ood_score;

use super::{
    condition_metrics, paired_validators, row_from_metrics, Experiment, Latents, ResultTable,
    RunContext,
};

pub struct SensitivitySweep;

impl Experiment for SensitivitySweep {
    fn name(&self) -> &'static str {
        "sensitivity"
    }

    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultTable> {
        let cfg = ctx.cfg;
        let embedder = ctx.build_embedder()?;
        let (ref_half, test_half) = ctx.halves()?;

        let ref_latents = embed_deterministic(&embedder, &ref_half)?;
        let reference = mean_and_cov(&ref_latents.view())?;
        ctx.persist_latents("reference", "latents", Latents::Matrix(&ref_latents))?;

        let mut rows = Vec::with_capacity(cfg.strengths.len());
        for &strength in &cfg.strengths {
            let label = format!("strength-{strength}");

            let aug_test = augment_set(
                &test_half,
                &AugmentSpec::noise(strength, ctx.seed(&[&label, "aug"])),
                None,
            )?;
            let test = embed_stochastic(
                &embedder,
                &aug_test,
                cfg.mcd_passes,
                ctx.seed(&[&label, "mcd"]),
            )?;

            let test_det = embed_deterministic(&embedder, &aug_test)?;
            let knn = knn_ood_score(&test_det, &ref_latents, cfg.knn_k)?;
            let (mae, ms_ssim) = paired_validators(&test_half, &aug_test)?;

            ctx.persist_latents(&label, "test", Latents::Tensor(&test))?;

            let m = condition_metrics(&test, &reference)?;
            rows.push(row_from_metrics(
                label,
                strength,
                &m,
                Some(knn),
                mae,
                ms_ssim,
            )?);
        }

        Ok(ResultTable {
            experiment: self.name().into(),
            rows,
        })
    }
}
