//! OOD table: a fixed in-distribution reference (dropout-off latents)
//! scored against test sets at increasing distribution shift. The
//! synthetic protocol mixes a structurally foreign family into the test
//! set at growing fractions, with nested pools so that conditions share
//! their retained rows; externally computed embedding files can replace
//! the synthetic sets.

use crate::embedder::{embed_deterministic, embed_stochastic, LoadedEmbeddings};
use crate::error::{Error, Result};
use crate::linalg::mean_and_cov;
use crate::metrics::knn_ood_score;
use crate::synth::{self, SynthSpec};

use super::{
    condition_metrics, row_from_metrics, Experiment, Latents, ResultTable, RunContext,
};

pub struct OodTable;

impl Experiment for OodTable {
    fn name(&self) -> &'static str {
        "ood-table"
    }

    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultTable> {
        if ctx.inputs.ood_reference.is_some() || !ctx.inputs.ood_tests.is_empty() {
            self.run_external(ctx)
        } else {
            self.run_synthetic(ctx)
        }
    }
}

impl OodTable {
    /// Synthetic protocol: reference = `field` images; test set at shift
    /// fraction `q` = nested mix of `field` (native) and `stripes`
    /// (foreign) rows. The test pool seed is shared by all fractions so
    /// only the mixture composition changes between rows; it is distinct
    /// from the reference seed so the sets stay disjoint.
    fn run_synthetic(&self, ctx: &RunContext<'_>) -> Result<ResultTable> {
        let cfg = ctx.cfg;
        let embedder = ctx.build_embedder()?;
        let n_test = (cfg.n_images / 2).max(2);

        let ref_spec = SynthSpec::new("field", cfg.n_images, cfg.image_size);
        let ref_imgs = synth::generate(&ref_spec, ctx.seed(&["reference-pool"]))?;
        let ref_latents = embed_deterministic(&embedder, &ref_imgs)?;
        let reference = mean_and_cov(&ref_latents.view())?;
        ctx.persist_latents("reference", "latents", Latents::Matrix(&ref_latents))?;

        let test_pool_seed = ctx.seed(&["test-pool"]);
        let mut rows = Vec::with_capacity(cfg.shift_fractions.len());
        for &fraction in &cfg.shift_fractions {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::InvalidParameter(format!(
                    "shift fraction must be in [0, 1], got {fraction}"
                )));
            }
            let label = format!("shift-{fraction}");
            let spec = SynthSpec::new("mix", n_test, cfg.image_size).with_param("frac", fraction);
            let imgs = synth::generate(&spec, test_pool_seed)?;

            let test_det = embed_deterministic(&embedder, &imgs)?;
            let knn = knn_ood_score(&test_det, &ref_latents, cfg.knn_k)?;
            let test = embed_stochastic(
                &embedder,
                &imgs,
                cfg.mcd_passes,
                ctx.seed(&[&label, "mcd"]),
            )?;
            ctx.persist_latents(&label, "test", Latents::Tensor(&test))?;

            let m = condition_metrics(&test, &reference)?;
            rows.push(row_from_metrics(label, fraction, &m, Some(knn), None, None)?);
        }

        Ok(ResultTable {
            experiment: self.name().into(),
            rows,
        })
    }

    /// External protocol: a 2-D reference embedding set plus labelled
    /// 3-D (stochastic) test sets. kNN needs dropout-off test latents,
    /// which a stochastic file does not carry, so that column stays
    /// empty; a 2-D test file is rejected because the FID spread
    /// requires multiple dropout passes.
    fn run_external(&self, ctx: &RunContext<'_>) -> Result<ResultTable> {
        let reference_latents = ctx.inputs.ood_reference.as_ref().ok_or_else(|| {
            Error::InvalidParameter("ood-table with external tests needs a reference set".into())
        })?;
        if ctx.inputs.ood_tests.is_empty() {
            return Err(Error::InvalidParameter(
                "ood-table with an external reference needs at least one test set".into(),
            ));
        }
        let reference = mean_and_cov(&reference_latents.view())?;

        let mut rows = Vec::with_capacity(ctx.inputs.ood_tests.len());
        for (index, (label, loaded)) in ctx.inputs.ood_tests.iter().enumerate() {
            match loaded {
                LoadedEmbeddings::Stochastic(test) => {
                    ctx.persist_latents(label, "test", Latents::Tensor(test))?;
                    let m = condition_metrics(test, &reference)?;
                    rows.push(row_from_metrics(
                        label.clone(),
                        index as f64,
                        &m,
                        None,
                        None,
                        None,
                    )?);
                }
                LoadedEmbeddings::Deterministic(_) => {
                    return Err(Error::InvalidParameter(format!(
                        "test set '{label}' is 2-D; the FID spread needs a 3-D (MCD) embedding \
                         file, re-embed with --mcd"
                    )));
                }
            }
        }

        Ok(ResultTable {
            experiment: self.name().into(),
            rows,
        })
    }
}
