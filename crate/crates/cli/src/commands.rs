//! Subcommand implementations.

use std::path::{Path, PathBuf};

use clap::Args;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use scsa_core::cluster::SilhouetteReport;
use scsa_core::enhance::{min_max_normalize, AppliedParams, PreparedImage};
use scsa_core::metrics::{mse, psnr_from_mse, ssim, PEAK};
use scsa_core::optimize::{GenerationBest, ImageEvaluator, Member};
use scsa_core::reconstruct::reconstruct_lines;
use scsa_core::{asf_select, enhance, rgb_to_hsv, run_nsga2, MetricsReport, ParetoFront, ScsaParams, SpectraCache};

use crate::config::{parse_list, PipelineArgs, RunConfig};
use crate::error::{CliError, CliResult};
use crate::imageio::{is_supported, limit_size, read_color, write_color, write_gray, Preprocessing};
use crate::report::{batch_csv, metrics_csv, write_histogram, write_json, BatchFailure, BatchRow};

fn load(path: &Path, max_dim: usize) -> CliResult<(scsa_core::ColorImage, Preprocessing)> {
    let image = read_color(path)?;
    Ok(limit_size(image, max_dim))
}

fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub h: f64,
    /// One exponent, or a comma-separated sweep
    #[arg(long)]
    pub gamma: String,
    #[arg(long)]
    pub output: PathBuf,
    /// Min-max stretch the result to [0, 255] instead of clamping
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = crate::config::DEFAULT_MAX_DIM)]
    pub max_dim: usize,
}

pub fn reconstruct(args: &ReconstructArgs) -> CliResult<()> {
    let gammas = parse_list(&args.gamma)?;
    let (image, _) = load(&args.input, args.max_dim)?;
    let potential = image.luma(PEAK);
    for &gamma in &gammas {
        let params = ScsaParams::new(args.h, gamma)?;
        let out = reconstruct_lines(potential.view(), params)?;
        let e = mse(&potential, &out)?;
        println!(
            "gamma={gamma} mse={e} psnr={} ssim={}",
            psnr_from_mse(e),
            ssim(&potential, &out)?
        );
        let target = if gammas.len() == 1 {
            args.output.clone()
        } else {
            let ext = args.output.extension().and_then(|e| e.to_str()).unwrap_or("png");
            sibling(&args.output, &format!("_g{gamma}"), ext)
        };
        let plane = if args.normalize {
            min_max_normalize(out.view()).0 * PEAK
        } else {
            out
        };
        write_gray(&target, &plane)?;
        info!("wrote {}", target.display());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// JSON sidecar path (default: output with a .json extension)
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Serialize)]
struct EnhanceSidecar<'a> {
    input: String,
    output: String,
    histogram: String,
    config: &'a RunConfig,
    preprocessing: Preprocessing,
    degenerate: bool,
    params: &'a AppliedParams,
    cluster_centers: &'a [f64],
    cluster_sizes: Vec<usize>,
    silhouette: Option<&'a SilhouetteReport>,
    front: Option<&'a ParetoFront>,
    metrics: &'a MetricsReport,
}

pub fn enhance_one(args: &EnhanceArgs) -> CliResult<()> {
    let cfg = args.pipeline.resolve()?;
    let (image, pre) = load(&args.input, cfg.max_dim)?;
    let result = enhance(&image, &cfg.enhance)?;
    write_color(&args.output, &result.image)?;

    let hist = sibling(&args.output, "_hist", "csv");
    write_histogram(&hist, &rgb_to_hsv(&image).value, &result.hsv.value)?;
    let sidecar = EnhanceSidecar {
        input: args.input.display().to_string(),
        output: args.output.display().to_string(),
        histogram: hist.display().to_string(),
        config: &cfg,
        preprocessing: pre,
        degenerate: result.degenerate,
        params: &result.params,
        cluster_centers: result.cluster_model.centers(),
        cluster_sizes: result.cluster_model.sizes(),
        silhouette: result.silhouette.as_ref(),
        front: result.front.as_ref(),
        metrics: &result.metrics,
    };
    let report = args.report.clone().unwrap_or_else(|| args.output.with_extension("json"));
    write_json(&report, &sidecar)?;
    if result.degenerate {
        warn!("{}: constant value channel, image returned unchanged", args.input.display());
    }
    println!("{}", serde_json::to_string(&result.metrics)?);
    Ok(())
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub reference: PathBuf,
    pub test: PathBuf,
    /// Also write the JSON report here
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn metrics(args: &MetricsArgs) -> CliResult<()> {
    let a = read_color(&args.reference)?;
    let b = read_color(&args.test)?;
    if a.dim() != b.dim() {
        return Err(CliError::Usage(format!(
            "image sizes differ: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let report = MetricsReport::compute(&a, &b)?;
    println!("{}", serde_json::to_string(&report)?);
    print!("{}", metrics_csv(&report)?);
    if let Some(path) = &args.output {
        write_json(path, &report)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub input: PathBuf,
    /// Write the JSON result here as well as to stdout
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    config: &'a RunConfig,
    preprocessing: Preprocessing,
    k: usize,
    cluster_centers: &'a [f64],
    selected: Member,
    gammas: Vec<f64>,
    front: ParetoFront,
    history: Vec<GenerationBest>,
}

pub fn optimize(args: &OptimizeArgs) -> CliResult<()> {
    let cfg = args.pipeline.resolve()?;
    let (image, pre) = load(&args.input, cfg.max_dim)?;
    let prepared = PreparedImage::new(&image, &cfg.enhance)?
        .ok_or_else(|| CliError::Usage("constant value channel, nothing to optimize".into()))?;
    let cache = SpectraCache::new(cfg.enhance.cache_capacity);
    let mut ga = cfg.enhance.ga.clone();
    ga.seed = cfg.enhance.seed;
    let evaluator = ImageEvaluator::new(&prepared, &cache, ga.global_ssim);
    let run = run_nsga2(&evaluator, prepared.model().k(), &ga)?;
    let selected = asf_select(&run.front, cfg.enhance.asf_weights, None)?;
    let report = OptimizeReport {
        config: &cfg,
        preprocessing: pre,
        k: prepared.model().k(),
        cluster_centers: prepared.model().centers(),
        gammas: evaluator.expand(&selected.chromosome.gammas),
        selected,
        front: run.front,
        history: run.history,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    pub dataset: PathBuf,
    /// CSV report path; the JSON report is written next to it
    #[arg(long)]
    pub report: PathBuf,
    /// Directory for the enhanced images
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Serialize)]
struct BatchJson<'a> {
    config: &'a RunConfig,
    rows: &'a [BatchRow],
    mean: Option<MetricsReport>,
    failures: &'a [BatchFailure],
}

fn batch_item(path: &Path, cfg: &RunConfig, out_dir: Option<&Path>) -> CliResult<BatchRow> {
    let (image, _) = load(path, cfg.max_dim)?;
    let result = enhance(&image, &cfg.enhance)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    if let Some(dir) = out_dir {
        write_color(&dir.join(&name), &result.image)?;
    }
    Ok(BatchRow {
        image: name,
        metrics: result.metrics,
        params: result.params,
        degenerate: result.degenerate,
    })
}

pub fn batch(args: &BatchArgs) -> CliResult<()> {
    let cfg = args.pipeline.resolve()?;
    let entries = std::fs::read_dir(&args.dataset)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.dataset.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("no images found in {}", args.dataset.display())));
    }
    if let Some(dir) = &args.output {
        std::fs::create_dir_all(dir)?;
    }

    let outcomes: Vec<(PathBuf, CliResult<BatchRow>)> = files
        .par_iter()
        .map(|p| (p.clone(), batch_item(p, &cfg, args.output.as_deref())))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (path, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => {
                warn!("{}: {e}", path.display());
                failures.push(BatchFailure {
                    image: path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
                    error: e.to_string(),
                });
            }
        }
    }

    let metrics: Vec<MetricsReport> = rows.iter().map(|r| r.metrics).collect();
    let mean = MetricsReport::mean(&metrics);
    std::fs::write(&args.report, batch_csv(&rows, mean.as_ref())?)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.report.display())))?;
    write_json(
        &args.report.with_extension("json"),
        &BatchJson {
            config: &cfg,
            rows: &rows,
            mean,
            failures: &failures,
        },
    )?;
    println!("{} processed, {} failed", rows.len(), failures.len());
    if rows.is_empty() {
        return Err(CliError::AllFailed);
    }
    Ok(())
}
