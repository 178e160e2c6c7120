//! Diagnostic constructions: Fn-Fn curves, residual-vs-covariate
//! heatmaps, and the LOWESS smoother used to overlay them.

mod heatmap;
mod lowess;
pub mod svg;

use std::path::Path;

use crate::error::{Error, Result};
use crate::residuals::{average_curve, FunctionalResidual};

pub use heatmap::{heatmap, HeatmapGrid};
pub use lowess::{lowess, LowessFit};

/// Defaults for smoothing expectation-based residual trends. The point
/// summaries are bounded conditional expectations, so there are no gross
/// outliers to guard against, and bisquare reweighting would bias their
/// skewed mean-zero distribution toward the local median; the trend
/// statistic therefore smooths without robustness passes. Random-draw
/// overlays (symmetric inputs) use `DRAW_TREND_ITERS`.
pub const TREND_SPAN: f64 = 2.0 / 3.0;
pub const TREND_ITERS: usize = 0;
pub const DRAW_TREND_ITERS: usize = 3;

/// The averaged residual CDF against the identity, with its maximum
/// deviation. The `t` grid is the exact knot set of the average.
#[derive(Debug, Clone)]
pub struct FnFnCurve {
    pub t: Vec<f64>,
    pub resbar: Vec<f64>,
    pub sup_dev: f64,
    pub n: usize,
    pub subgroup: Option<String>,
}

/// Build the Fn-Fn curve from the exact average of the residual CDFs.
pub fn fnfn(residuals: &[FunctionalResidual]) -> Result<FnFnCurve> {
    if residuals.is_empty() {
        return Err(Error::EmptySubgroup);
    }
    let curve = average_curve(residuals);
    Ok(FnFnCurve {
        sup_dev: curve.sup_deviation(),
        t: curve.knots().to_vec(),
        resbar: curve.values().to_vec(),
        n: residuals.len(),
        subgroup: None,
    })
}

/// Fn-Fn curve over the rows selected by `keep` (indexed against the
/// residuals slice), recording a description of the filter.
pub fn subgroup_fnfn(
    residuals: &[FunctionalResidual],
    keep: impl Fn(&FunctionalResidual) -> bool,
    description: &str,
) -> Result<FnFnCurve> {
    let filtered: Vec<FunctionalResidual> = residuals.iter().copied().filter(|r| keep(r)).collect();
    if filtered.is_empty() {
        return Err(Error::EmptySubgroup);
    }
    let mut curve = fnfn(&filtered)?;
    curve.subgroup = Some(description.to_string());
    Ok(curve)
}

impl FnFnCurve {
    /// Curve value at arbitrary t by interpolation on the knot grid.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self.t.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => self.resbar[i],
            Err(i) => {
                let (t0, t1) = (self.t[i - 1], self.t[i]);
                let (v0, v1) = (self.resbar[i - 1], self.resbar[i]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Write the curve as CSV (t, resbar).
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "resbar"])?;
        for (t, v) in self.t.iter().zip(&self.resbar) {
            w.write_record([format!("{t}"), format!("{v}")])?;
        }
        w.flush()?;
        Ok(())
    }
}
