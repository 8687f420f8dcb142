//! CSV and JSON report writers.

use std::path::Path;

use serde::Serialize;

use scsa_core::enhance::AppliedParams;
use scsa_core::metrics::value_histogram;
use scsa_core::{MetricsReport, Plane};

use crate::error::{CliError, CliResult};

pub const BATCH_HEADER: [&str; 12] = [
    "image", "mse", "psnr", "ambe", "entropy", "ssim", "gmsd", "fsim", "pcqi", "h", "gammas", "k",
];

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn metric_fields(m: &MetricsReport) -> Vec<String> {
    [m.mse, m.psnr, m.ambe, m.entropy, m.ssim, m.gmsd, m.fsim, m.pcqi]
        .iter()
        .map(|v| v.to_string())
        .collect()
}

/// One processed image of a batch run.
#[derive(Debug, Clone, Serialize)]
pub struct BatchRow {
    pub image: String,
    pub metrics: MetricsReport,
    pub params: AppliedParams,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchFailure {
    pub image: String,
    pub error: String,
}

pub fn batch_csv(rows: &[BatchRow], mean: Option<&MetricsReport>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(BATCH_HEADER).map_err(io)?;
    for row in rows {
        let mut rec = vec![row.image.clone()];
        rec.extend(metric_fields(&row.metrics));
        rec.push(row.params.h.to_string());
        rec.push(
            row.params
                .gammas
                .iter()
                .map(|g| g.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        );
        rec.push(row.params.k.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    if let Some(m) = mean {
        let mut rec = vec!["mean".to_string()];
        rec.extend(metric_fields(m));
        rec.extend([String::new(), String::new(), String::new()]);
        w.write_record(&rec).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Header and single row of the eight metrics.
pub fn metrics_csv(m: &MetricsReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&BATCH_HEADER[1..9]).map_err(io)?;
    w.write_record(metric_fields(m)).map_err(io)?;
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `bin,count_before,count_after` over the 256 value-channel bins.
pub fn write_histogram(path: &Path, before: &Plane, after: &Plane) -> CliResult<()> {
    let hb = value_histogram(before);
    let ha = value_histogram(after);
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["bin", "count_before", "count_after"])
        .map_err(|e| csv_error(path, e))?;
    for bin in 0..256 {
        w.write_record([bin.to_string(), hb[bin].to_string(), ha[bin].to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
