//! `fidtrust` — Frechet-distance quality metrics over stochastic
//! embedding sets, with trustworthiness indicators, OOD scores,
//! augmentation pipelines and experiment runners.

mod io;
mod pnm;
mod svg;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fidtrust::augment::AugmentSpec;
use fidtrust::embedder::{build_toy_embedder, load_embeddings, LoadedEmbeddings, ToyEmbedderConfig};
use fidtrust::experiments::{
    format_float, run_experiment, ExperimentConfig, ResultTable, RunInputs, EXPERIMENT_NAMES,
};
use fidtrust::linalg::mean_and_cov;
use fidtrust::metrics::{fid_samples, knn_ood_score, pvar, vfid_decomposition};
use fidtrust::rng::{derive_seed, hash_label};
use fidtrust::synth::{self, parse_size, SynthSpec};
use fidtrust::ImageTensor;

use io::OutputGuard;

#[derive(Parser)]
#[command(
    name = "fidtrust",
    version,
    about = "FID trustworthiness toolkit: stochastic-embedding FID statistics, \
             OOD scores, image validators and experiment runners",
    propagate_version = true
)]
struct Cli {
    /// Master seed; omitted seeds are generated and printed to stderr.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (falls back to FIDTRUST_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output path (file or directory, depending on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Stdout format for scalar results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Embed images (from a directory or a synthetic spec) into a .npy file.
    Embed(EmbedArgs),
    /// FID of a test embedding file against a reference embedding file.
    Fid(FidArgs),
    /// Mean k-nearest-neighbor distance on L2-normalized embeddings.
    Knn(KnnArgs),
    /// Apply a seeded augmentation pipeline to an image directory.
    Augment(AugmentArgs),
    /// Run one of the experiment protocols and write CSV + manifest.
    Experiment(ExperimentArgs),
    /// Render SVG line charts from a result table CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct EmbedArgs {
    /// Directory of .pgm/.ppm/.npy images.
    #[arg(long, conflicts_with = "synthetic")]
    input: Option<PathBuf>,

    /// Synthetic set spec, e.g. blobs:256 or mix:128:32x32x3:frac=0.5.
    #[arg(long)]
    synthetic: Option<String>,

    /// Dropout evaluation passes; 0 embeds deterministically (2-D output).
    #[arg(long, default_value_t = 0)]
    mcd: usize,

    /// Expected image size HxWxC (default: first input image, or 32x32x3
    /// for synthetic sets).
    #[arg(long)]
    image_size: Option<String>,

    /// Embedding width K.
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,

    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "256,128")]
    hidden: String,

    /// Dropout rate in [0, 1).
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
}

#[derive(Args)]
struct FidArgs {
    /// Test embeddings (.npy, 2-D for a single FID or 3-D for statistics).
    #[arg(long)]
    test: PathBuf,

    /// Reference embeddings (.npy, 2-D).
    #[arg(long)]
    reference: PathBuf,

    /// Write the per-pass FID components to this CSV (3-D tests only).
    #[arg(long)]
    decomposition: Option<PathBuf>,
}

#[derive(Args)]
struct KnnArgs {
    /// Test embeddings (.npy, 2-D).
    #[arg(long)]
    test: PathBuf,

    /// Reference embeddings (.npy, 2-D).
    #[arg(long)]
    reference: PathBuf,

    /// Neighbors per test row.
    #[arg(long, default_value_t = 5)]
    k: usize,
}

#[derive(Args)]
struct AugmentArgs {
    /// Directory of images to augment.
    #[arg(long)]
    input: PathBuf,

    /// Augmentation kind.
    #[arg(long, default_value = "noise")]
    kind: String,

    /// Noise sigma as percent of each image's maximum value.
    #[arg(long, default_value_t = 0.0)]
    strength: f64,

    /// Clamp noisy pixels back into the recorded value range.
    #[arg(long, default_value_t = false)]
    clip: bool,

    /// Overlay: patches pasted per image.
    #[arg(long, default_value_t = 4)]
    patches: usize,

    /// Overlay: patch side as a fraction of the base's smaller side.
    #[arg(long, default_value_t = 0.25)]
    patch_scale: f64,

    /// Overlay: directory of patch source images.
    #[arg(long)]
    patch_source: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Protocol: equal-aug, ood-table, sensitivity or fixed-test.
    #[arg(long)]
    kind: String,

    /// Noise strengths, comma separated (default depends on the kind).
    #[arg(long)]
    strengths: Option<String>,

    /// ood-table: synthetic shift fractions, comma separated.
    #[arg(long, default_value = "0.2,0.5,0.9")]
    shifts: String,

    /// Images per half (sweeps) / per test set (ood-table reference uses
    /// twice this).
    #[arg(long, default_value_t = 256)]
    images: usize,

    /// Synthetic image size HxWxC.
    #[arg(long, default_value = "32x32x3")]
    image_size: String,

    /// Dropout evaluation passes J.
    #[arg(long, default_value_t = 20)]
    mcd: usize,

    /// Neighbors for the kNN OOD score.
    #[arg(long, default_value_t = 5)]
    k: usize,

    /// Synthetic family for the sweep experiments.
    #[arg(long, default_value = "blobs")]
    synth: String,

    /// Embedding width K.
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,

    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "256,128")]
    hidden: String,

    /// Dropout rate in [0, 1).
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,

    /// Directory of real images replacing the synthetic dataset (sweeps).
    #[arg(long)]
    input: Option<PathBuf>,

    /// ood-table: reference embedding file (.npy, 2-D).
    #[arg(long)]
    reference: Option<PathBuf>,

    /// ood-table: labelled test embedding file, label=path (repeatable;
    /// 3-D .npy).
    #[arg(long = "test")]
    tests: Vec<String>,

    /// Persist per-condition latent tensors under <out>/latents/.
    #[arg(long, default_value_t = false)]
    keep_latents: bool,

    /// Also render SVG charts of the metric columns vs strength.
    #[arg(long, default_value_t = false)]
    charts: bool,

    /// Metric columns to chart.
    #[arg(long, default_value = "fid_mean,sigma_fid,pvar")]
    metrics: String,

    /// CSV sidecar `label,top5` joined into the table by row label.
    #[arg(long)]
    top5: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Result table CSV produced by the experiment subcommand.
    #[arg(long)]
    input: PathBuf,

    /// Metric columns to chart, comma separated.
    #[arg(long, default_value = "fid_mean,sigma_fid,pvar")]
    metrics: String,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    let seed = resolve_seed(cli.seed);
    match &cli.command {
        Command::Embed(args) => cmd_embed(&cli, args, seed),
        Command::Fid(args) => cmd_fid(&cli, args),
        Command::Knn(args) => cmd_knn(&cli, args),
        Command::Augment(args) => cmd_augment(&cli, args, seed),
        Command::Experiment(args) => cmd_experiment(&cli, args, seed),
        Command::Report(args) => cmd_report(&cli, args),
    }
}

fn init_threads(cli_threads: Option<usize>) -> Result<()> {
    let threads = match cli_threads {
        Some(n) => Some(n),
        None => match std::env::var("FIDTRUST_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| anyhow!("FIDTRUST_THREADS must be an integer, got '{v}'"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            bail!("thread count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing the thread pool")?;
    }
    Ok(())
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            let nanos = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            let generated = derive_seed(nanos, &[std::process::id() as u64]);
            eprintln!("seed: {generated}");
            generated
        }
    }
}

fn required_out(cli: &Cli, what: &str) -> Result<PathBuf> {
    cli.out
        .clone()
        .ok_or_else(|| anyhow!("--out is required ({what})"))
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("bad integer '{t}'"))
        })
        .collect()
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad number '{t}'"))
        })
        .collect()
}

fn load_2d(path: &Path, role: &str) -> Result<fidtrust::EmbeddingSet> {
    match load_embeddings(path).with_context(|| format!("loading {role} {}", path.display()))? {
        LoadedEmbeddings::Deterministic(set) => Ok(set),
        LoadedEmbeddings::Stochastic(_) => {
            bail!("{role} {} must be a 2-D embedding file", path.display())
        }
    }
}

fn print_scalars(format: Format, pairs: &[(&str, f64)]) {
    match format {
        Format::Csv => {
            let header: Vec<&str> = pairs.iter().map(|(k, _)| *k).collect();
            let values: Vec<String> = pairs.iter().map(|(_, v)| format_float(*v)).collect();
            println!("{}", header.join(","));
            println!("{}", values.join(","));
        }
        Format::Json => {
            let body: Vec<String> = pairs
                .iter()
                .map(|(k, v)| format!("\"{k}\": {}", format_float(*v)))
                .collect();
            println!("{{{}}}", body.join(", "));
        }
    }
}

fn cmd_embed(cli: &Cli, args: &EmbedArgs, seed: u64) -> Result<()> {
    let out = required_out(cli, "path of the .npy file to write")?;

    let (images, default_size) = if let Some(spec_text) = &args.synthetic {
        let default = match &args.image_size {
            Some(s) => parse_size(s)?,
            None => (32, 32, 3),
        };
        let spec = SynthSpec::parse(spec_text, default)?;
        let size = spec.size;
        let images = synth::generate(&spec, derive_seed(seed, &[hash_label("dataset")]))?;
        (images, size)
    } else if let Some(dir) = &args.input {
        let named = io::read_image_dir(dir)?;
        let images: Vec<ImageTensor> = named.into_iter().map(|(_, img)| img).collect();
        let size = match &args.image_size {
            Some(s) => parse_size(s)?,
            None => images[0].shape(),
        };
        (images, size)
    } else {
        bail!("embed needs --input <DIR> or --synthetic <SPEC>");
    };

    let config = ToyEmbedderConfig {
        input_size: default_size,
        embed_dim: args.embed_dim,
        hidden_dims: parse_usize_list(&args.hidden)?,
        dropout_rate: args.dropout,
        weight_seed: derive_seed(seed, &[hash_label("weights")]),
    };
    let embedder = build_toy_embedder(config)?;

    let mut guard = OutputGuard::new();
    let (shape, data, info): (Vec<usize>, Vec<f64>, _) = if args.mcd == 0 {
        let (set, info) = fidtrust::embedder::embed_deterministic_with_info(&embedder, &images)?;
        (
            vec![set.n_images(), set.dim()],
            set.view().iter().copied().collect(),
            info,
        )
    } else {
        let sample_seed = derive_seed(seed, &[hash_label("mcd")]);
        let (set, info) =
            fidtrust::embedder::embed_stochastic_with_info(&embedder, &images, args.mcd, sample_seed)?;
        (
            vec![set.n_images(), set.n_passes(), set.dim()],
            set.view().iter().copied().collect(),
            info,
        )
    };
    if info.resized > 0 {
        eprintln!("note: {} images were resized to the embedder input size", info.resized);
    }
    if info.p_zero_warning {
        eprintln!("warning: dropout rate is 0, MCD passes are identical to the deterministic embedding");
    }
    let mut bytes = Vec::new();
    fidtrust::npy::write_npy_f64(&mut bytes, &shape, &data)?;
    guard.write(&out, &bytes)?;
    guard.commit();
    println!("wrote {} shape {:?}", out.display(), shape);
    Ok(())
}

fn cmd_fid(cli: &Cli, args: &FidArgs) -> Result<()> {
    let reference_latents = load_2d(&args.reference, "reference")?;
    let reference = mean_and_cov(&reference_latents.view())?;

    match load_embeddings(&args.test)
        .with_context(|| format!("loading test {}", args.test.display()))?
    {
        LoadedEmbeddings::Deterministic(set) => {
            if args.decomposition.is_some() {
                bail!("--decomposition needs a 3-D (MCD) test file");
            }
            let summary = mean_and_cov(&set.view())?;
            let fid = fidtrust::linalg::frechet_gaussian(&summary, &reference)?;
            print_scalars(cli.format, &[("fid", fid)]);
        }
        LoadedEmbeddings::Stochastic(set) => {
            let dist = fid_samples(&set, &reference)?;
            let p = pvar(&set)?;
            print_scalars(
                cli.format,
                &[
                    ("fid_mean", dist.mean_fid),
                    ("sigma_fid", dist.sigma_fid),
                    ("v_fid", dist.v_fid),
                    ("pvar", p),
                ],
            );
            if let Some(path) = &args.decomposition {
                let d = vfid_decomposition(&dist)?;
                let mut csv = String::from("j,fid,term_a,term_b,term_c\n");
                for j in 0..dist.n_passes() {
                    csv.push_str(&format!(
                        "{j},{},{},{},{}\n",
                        format_float(dist.fid_samples[j]),
                        format_float(dist.terms_a[j]),
                        format_float(dist.terms_b[j]),
                        format_float(dist.terms_c[j]),
                    ));
                }
                let mut guard = OutputGuard::new();
                guard.write(path, csv.as_bytes())?;
                guard.commit();
                eprintln!(
                    "decomposition: var_a={} var_b={} var_c={} cov_ab={} cov_ac={} cov_bc={} \
                     reconstructed={} residual={}",
                    format_float(d.var_a),
                    format_float(d.var_b),
                    format_float(d.var_c),
                    format_float(d.cov_ab),
                    format_float(d.cov_ac),
                    format_float(d.cov_bc),
                    format_float(d.reconstructed_vfid),
                    format_float(d.residual),
                );
            }
        }
    }
    Ok(())
}

fn cmd_knn(cli: &Cli, args: &KnnArgs) -> Result<()> {
    let test = load_2d(&args.test, "test")?;
    let reference = load_2d(&args.reference, "reference")?;
    let score = knn_ood_score(&test, &reference, args.k)?;
    print_scalars(cli.format, &[("knn", score)]);
    Ok(())
}

fn cmd_augment(cli: &Cli, args: &AugmentArgs, seed: u64) -> Result<()> {
    let out_dir = required_out(cli, "directory for augmented images")?;
    let named = io::read_image_dir(&args.input)?;
    let images: Vec<ImageTensor> = named.iter().map(|(_, img)| img.clone()).collect();

    let spec = AugmentSpec {
        kind: args.kind.clone(),
        strength_percent: args.strength,
        clip: args.clip,
        n_patches: args.patches,
        patch_scale: args.patch_scale,
        seed,
    };
    let patch_source: Option<Vec<ImageTensor>> = match &args.patch_source {
        Some(dir) => Some(
            io::read_image_dir(dir)?
                .into_iter()
                .map(|(_, img)| img)
                .collect(),
        ),
        None => None,
    };

    let augmented = fidtrust::augment::augment_set(&images, &spec, patch_source.as_deref())?;

    std::fs::create_dir_all(&out_dir)?;
    let mut guard = OutputGuard::new();
    for ((name, _), img) in named.iter().zip(&augmented) {
        let path = out_dir.join(name);
        let lower = name.to_ascii_lowercase();
        if lower.ends_with(".npy") {
            let (h, w, c) = img.shape();
            let data: Vec<f64> = img.pixels().iter().copied().collect();
            let mut bytes = Vec::new();
            fidtrust::npy::write_npy_f64(&mut bytes, &[h, w, c], &data)?;
            guard.write(&path, &bytes)?;
        } else {
            // 8-bit formats are quantized back on write.
            guard.write(&path, &pnm::encode_pnm(img)?)?;
        }
    }
    guard.commit();
    println!("augmented {} images into {}", augmented.len(), out_dir.display());
    Ok(())
}

fn experiment_config(args: &ExperimentArgs, seed: u64) -> Result<ExperimentConfig> {
    let strengths = match &args.strengths {
        Some(list) => parse_f64_list(list)?,
        None => match args.kind.as_str() {
            "equal-aug" => vec![5.0, 20.0, 50.0, 100.0],
            _ => vec![1.0, 5.0, 10.0, 20.0, 40.0],
        },
    };
    Ok(ExperimentConfig {
        kind: args.kind.clone(),
        strengths,
        shift_fractions: parse_f64_list(&args.shifts)?,
        n_images: args.images,
        image_size: parse_size(&args.image_size)?,
        mcd_passes: args.mcd,
        knn_k: args.k,
        synth_kind: args.synth.clone(),
        embed_dim: args.embed_dim,
        hidden_dims: parse_usize_list(&args.hidden)?,
        dropout_rate: args.dropout,
        master_seed: seed,
        keep_latents: args.keep_latents,
    })
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs, seed: u64) -> Result<()> {
    if !EXPERIMENT_NAMES.contains(&args.kind.as_str()) {
        bail!(
            "unknown experiment '{}' (expected one of {:?})",
            args.kind,
            EXPERIMENT_NAMES
        );
    }
    let out_dir = required_out(cli, "directory for table.csv and manifest.json")?;
    let cfg = experiment_config(args, seed)?;

    let mut inputs = RunInputs::default();
    if let Some(dir) = &args.input {
        inputs.images = Some(
            io::read_image_dir(dir)?
                .into_iter()
                .map(|(_, img)| img)
                .collect(),
        );
    }
    if let Some(path) = &args.reference {
        inputs.ood_reference = Some(load_2d(path, "reference")?);
    }
    for entry in &args.tests {
        let (label, path) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("--test expects label=path, got '{entry}'"))?;
        let loaded = load_embeddings(Path::new(path))
            .with_context(|| format!("loading test set {path}"))?;
        inputs.ood_tests.push((label.to_string(), loaded));
    }

    std::fs::create_dir_all(&out_dir)?;
    let mut guard = OutputGuard::new();
    let latents_dir = out_dir.join("latents");
    let mut artifacts = run_experiment(&cfg, &inputs, Some(&latents_dir))?;
    if cfg.keep_latents {
        if let Ok(entries) = std::fs::read_dir(&latents_dir) {
            for entry in entries.flatten() {
                guard.track(entry.path());
            }
        }
    }

    if let Some(path) = &args.top5 {
        let pairs = parse_top5_sidecar(path)?;
        artifacts.table.join_top5(&pairs);
    }

    guard.write(&out_dir.join("table.csv"), artifacts.table.to_csv().as_bytes())?;
    guard.write(
        &out_dir.join("manifest.json"),
        artifacts.manifest_json.as_bytes(),
    )?;

    if args.charts {
        let metrics: Vec<String> = args
            .metrics
            .split(',')
            .map(|m| m.trim().to_string())
            .filter(|m| !m.is_empty())
            .collect();
        write_charts(&mut guard, &out_dir.join("charts"), &artifacts.table, &metrics)?;
    }
    guard.commit();
    println!(
        "experiment {} complete: {} rows -> {}",
        cfg.kind,
        artifacts.table.rows.len(),
        out_dir.display()
    );
    Ok(())
}

fn parse_top5_sidecar(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading top-5 sidecar {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (label, value) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("sidecar line {} is not label,top5", lineno + 1))?;
        match value.trim().parse::<f64>() {
            Ok(v) => out.push((label.trim().to_string(), v)),
            // A non-numeric first line is a header.
            Err(_) if lineno == 0 => continue,
            Err(_) => bail!("bad top5 value on sidecar line {}", lineno + 1),
        }
    }
    Ok(out)
}

fn write_charts(
    guard: &mut OutputGuard,
    dir: &Path,
    table: &ResultTable,
    metrics: &[String],
) -> Result<()> {
    let csv = table.to_csv();
    for metric in metrics {
        let points = extract_series(&csv, metric)?;
        let chart = svg::line_chart(
            &format!("{} vs strength", metric),
            "strength",
            metric,
            &points,
        );
        guard.write(&dir.join(format!("{metric}.svg")), chart.as_bytes())?;
    }
    Ok(())
}

/// Pull `(strength, metric)` pairs out of a result-table CSV.
fn extract_series(csv: &str, metric: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty CSV"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let metric_idx = columns
        .iter()
        .position(|c| *c == metric)
        .ok_or_else(|| anyhow!("CSV has no column '{metric}'"))?;
    let strength_idx = columns
        .iter()
        .position(|c| *c == "strength")
        .ok_or_else(|| anyhow!("CSV has no strength column"))?;
    let mut points = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let cell = cells
            .get(metric_idx)
            .ok_or_else(|| anyhow!("short CSV row"))?;
        if cell.is_empty() {
            continue;
        }
        let x: f64 = cells[strength_idx].parse()?;
        let y: f64 = cell.parse()?;
        points.push((x, y));
    }
    if points.is_empty() {
        bail!("no data for metric '{metric}'");
    }
    Ok(points)
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<()> {
    let out_dir = required_out(cli, "directory for the SVG charts")?;
    let csv = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let metrics: Vec<String> = args
        .metrics
        .split(',')
        .map(|m| m.trim().to_string())
        .filter(|m| !m.is_empty())
        .collect();
    if metrics.is_empty() {
        bail!("--metrics is empty");
    }
    let mut guard = OutputGuard::new();
    for metric in &metrics {
        let points = extract_series(&csv, metric)?;
        let chart = svg::line_chart(
            &format!("{} vs strength", metric),
            "strength",
            metric,
            &points,
        );
        guard.write(&out_dir.join(format!("{metric}.svg")), chart.as_bytes())?;
    }
    guard.commit();
    println!("wrote {} charts to {}", metrics.len(), out_dir.display());
    Ok(())
}
