//! Effective run configuration: flags override a JSON file, which overrides
//! the defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use scsa_core::enhance::{ClusterChoice, EnhanceConfig, GammaChoice};

use crate::error::{CliError, CliResult};

pub const DEFAULT_MAX_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub enhance: EnhanceConfig,
    /// Longest side allowed before box downsampling; 0 disables it.
    pub max_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            enhance: EnhanceConfig::default(),
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// Flags shared by the pipeline commands.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Semi-classical parameter h (ignored when gammas are searched)
    #[arg(long)]
    pub h: Option<f64>,
    /// Comma-separated per-cluster exponents, or "auto" for NSGA-II
    #[arg(long)]
    pub gammas: Option<String>,
    /// Cluster count, or "auto" for silhouette selection
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file mirroring the flag names
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Downsample so the longer side is at most this many pixels (0 = off)
    #[arg(long)]
    pub max_dim: Option<usize>,
}

pub fn parse_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("not a number: {t:?}")))
        })
        .collect()
}

pub fn parse_gammas(text: &str) -> CliResult<GammaChoice> {
    if text.trim().eq_ignore_ascii_case("auto") {
        Ok(GammaChoice::Auto)
    } else {
        parse_list(text).map(GammaChoice::Fixed)
    }
}

pub fn parse_k(text: &str) -> CliResult<ClusterChoice> {
    if text.trim().eq_ignore_ascii_case("auto") {
        return Ok(ClusterChoice::Auto);
    }
    text.trim()
        .parse::<usize>()
        .map(ClusterChoice::Fixed)
        .map_err(|_| CliError::Usage(format!("--k expects an integer or \"auto\", got {text:?}")))
}

pub fn load_file(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl PipelineArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(h) = self.h {
            cfg.enhance.h = h;
        }
        if let Some(g) = &self.gammas {
            cfg.enhance.gammas = parse_gammas(g)?;
        }
        if let Some(k) = &self.k {
            cfg.enhance.k = parse_k(k)?;
        }
        if let Some(seed) = self.seed {
            cfg.enhance.seed = seed;
        }
        if let Some(m) = self.max_dim {
            cfg.max_dim = m;
        }
        cfg.enhance.validate()?;
        Ok(cfg)
    }
}
