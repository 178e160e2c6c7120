//! End-to-end diagnostic pipelines for the two bundled datasets: the
//! white-wine quality ratings (ordinal) and the 2012 hourly bike-rental
//! counts. Each pipeline runs a fixed sequence of model stages, emits
//! heatmap/Fn-Fn artifacts per stage, and writes a JSON report plus an
//! HTML index. Runs are deterministic: no RNG is involved anywhere.

mod bike;
mod report;
mod wine;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::core::dataset::Dataset;
use crate::diagnostics::{fnfn, heatmap, lowess, svg};
use crate::error::Result;
use crate::models::{FittedModel, ModelSummary};
use crate::residuals::{residuals_for, FunctionalResidual, ResidualScale};

pub use bike::{bike_pipeline, BikeConfig, SplineTermConfig};
pub use wine::{wine_pipeline, OutlierRule, WineConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub model: serde_json::Value,
    pub aic: Option<f64>,
    pub dispersion: Option<f64>,
    pub fnfn_sup_dev: f64,
    /// LOWESS range of the normal-scale point summaries per plotted
    /// covariate.
    pub lowess_ranges: BTreeMap<String, f64>,
    /// Rows whose residual interval was numerically degenerate and were
    /// left out of the plots.
    pub rows_skipped: usize,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleaningEntry {
    pub rule: String,
    pub removed_rows: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub pipeline: String,
    pub dataset_path: String,
    /// FNV-1a content hash of the input file, for regeneration checks.
    pub dataset_hash: String,
    pub n_ingested: usize,
    pub outcome_offset: u32,
    /// Reading aids for the summaries, e.g. the ordinal sign convention.
    pub notes: Vec<String>,
    pub cleaning: Vec<CleaningEntry>,
    pub stages: Vec<StageReport>,
}

impl PipelineReport {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(out_dir.join("report.json"), json)?;
        std::fs::write(out_dir.join("index.html"), report::html_index(self))?;
        Ok(())
    }
}

pub(crate) fn content_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    Ok(format!("{h:016x}"))
}

/// Shared per-stage artifact emission: Fn-Fn plot plus one heatmap (with
/// LOWESS overlay) per requested covariate, everything also exported as
/// CSV.
#[allow(clippy::too_many_arguments)]
pub(crate) fn emit_stage(
    stage_name: &str,
    model: &FittedModel,
    data: &Dataset,
    plot_covariates: &[String],
    out_dir: &Path,
    bins: usize,
    span: f64,
    iters: usize,
) -> Result<StageReport> {
    let stage_dir = out_dir.join(stage_name);
    std::fs::create_dir_all(&stage_dir)?;
    let set = residuals_for(model, data)?;
    let mut artifacts = Vec::new();

    let curve = fnfn(&set.residuals)?;
    let fnfn_svg = stage_dir.join("fnfn.svg");
    svg::render_fnfn(&curve, &format!("Fn-Fn: {stage_name}"), &fnfn_svg)?;
    let fnfn_csv = stage_dir.join("fnfn.csv");
    curve.export_csv(&fnfn_csv)?;
    artifacts.push(rel(out_dir, &fnfn_svg));
    artifacts.push(rel(out_dir, &fnfn_csv));

    let res_csv = stage_dir.join("residuals.csv");
    crate::residuals::export_csv(&res_csv, &set.residuals, data.y())?;
    artifacts.push(rel(out_dir, &res_csv));

    let mut lowess_ranges = BTreeMap::new();
    for cov in plot_covariates {
        let (grid_path, csv_path, range) =
            emit_heatmap(&set.residuals, data, cov, &stage_dir, bins, span, iters)?;
        lowess_ranges.insert(cov.clone(), range);
        artifacts.push(rel(out_dir, &grid_path));
        artifacts.push(rel(out_dir, &csv_path));
    }

    let summary: ModelSummary = model.summary();
    Ok(StageReport {
        name: stage_name.to_string(),
        model: serde_json::to_value(&summary)?,
        aic: model.aic(),
        dispersion: model.dispersion,
        fnfn_sup_dev: curve.sup_dev,
        lowess_ranges,
        rows_skipped: set.skipped.len(),
        artifacts,
    })
}

fn emit_heatmap(
    residuals: &[FunctionalResidual],
    data: &Dataset,
    covariate: &str,
    stage_dir: &Path,
    bins: usize,
    span: f64,
    iters: usize,
) -> Result<(PathBuf, PathBuf, f64)> {
    let x = data.column(covariate)?;
    let grid = heatmap(residuals, x, ResidualScale::Normal, bins, bins)?;
    let xs: Vec<f64> = residuals.iter().map(|r| x[r.index]).collect();
    let vs: Vec<f64> = residuals
        .iter()
        .map(|r| r.point_summary(ResidualScale::Normal))
        .collect();
    let fit = lowess(&xs, &vs, span, iters)?;
    let range = fit.range();
    let safe = covariate.replace(['.', '/'], "_");
    let svg_path = stage_dir.join(format!("heat_{safe}.svg"));
    svg::render_heatmap(
        &grid,
        Some(&fit),
        &format!("functional residuals vs {covariate}"),
        covariate,
        &svg_path,
    )?;
    let csv_path = stage_dir.join(format!("heat_{safe}.csv"));
    grid.export_csv(&csv_path)?;
    Ok((svg_path, csv_path, range))
}

fn rel(base: &Path, p: &Path) -> String {
    p.strip_prefix(base)
        .unwrap_or(p)
        .to_string_lossy()
        .into_owned()
}
