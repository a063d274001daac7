//! Equal augmentation: both halves receive the same noise strength, so
//! contents homogenize and the FID should fall toward zero as strength
//! grows. The reference summary comes from latents with dropout active
//! (a single realization), the test side from the full MCD tensor.

use crate::augment::{augment_set, AugmentSpec};
use crate::embedder::{embed_deterministic, embed_mcd_single, embed_stochastic};
use crate::error::Result;
use crate::linalg::mean_and_cov;
use crate::metrics::knn_ood_score;

use super::{
    condition_metrics, paired_validators, row_from_metrics, Experiment, Latents, ResultTable,
    RunContext,
};

pub struct EqualAugmentation;

impl Experiment for EqualAugmentation {
    fn name(&self) -> &'static str {
        "equal-aug"
    }

    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultTable> {
        let cfg = ctx.cfg;
        let embedder = ctx.build_embedder()?;
        let (ref_half, test_half) = ctx.halves()?;

        let mut rows = Vec::with_capacity(cfg.strengths.len());
        for &strength in &cfg.strengths {
            let label = format!("strength-{strength}");

            let aug_ref = augment_set(
                &ref_half,
                &AugmentSpec::noise(strength, ctx.seed(&[&label, "aug-ref"])),
                None,
            )?;
            let aug_test = augment_set(
                &test_half,
                &AugmentSpec::noise(strength, ctx.seed(&[&label, "aug-test"])),
                None,
            )?;

            // Reference latents with dropout active, one realization.
            let ref_latents =
                embed_mcd_single(&embedder, &aug_ref, ctx.seed(&[&label, "ref-mcd"]), 0)?;
            let reference = mean_and_cov(&ref_latents.view())?;

            let test =
                embed_stochastic(&embedder, &aug_test, cfg.mcd_passes, ctx.seed(&[&label, "test-mcd"]))?;

            let test_det = embed_deterministic(&embedder, &aug_test)?;
            let ref_det = embed_deterministic(&embedder, &aug_ref)?;
            let knn = knn_ood_score(&test_det, &ref_det, cfg.knn_k)?;

            let (mae, ms_ssim) = paired_validators(&test_half, &aug_test)?;

            ctx.persist_latents(&label, "reference", Latents::Matrix(&ref_latents))?;
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

#[cfg(test)]
mod tests {
    use super::super::{run_experiment, ExperimentConfig, RunInputs};

    #[test]
    fn strength_zero_equals_unaugmented_baseline() {
        // With strength 0 the augmentation is the identity, so the row
        // must match a second run whose only strength is 0.
        let cfg = ExperimentConfig {
            kind: "equal-aug".into(),
            strengths: vec![0.0, 30.0],
            n_images: 12,
            image_size: (16, 16, 1),
            mcd_passes: 3,
            knn_k: 3,
            embed_dim: 6,
            hidden_dims: vec![24],
            master_seed: 9,
            ..Default::default()
        };
        let artifacts = run_experiment(&cfg, &RunInputs::default(), None).unwrap();
        let rows = &artifacts.table.rows;
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].strength, 0.0);
        // Identity augmentation leaves the validators at their trivial
        // values.
        assert_eq!(rows[0].mae, Some(0.0));
        assert!(rows[0].fid_mean.is_finite());
        assert!(rows[1].mae.unwrap() > 0.0);
    }
}
