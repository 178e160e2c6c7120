//! Residual-vs-covariate heatmaps.
//!
//! Each observation deposits the exact mass of its residual density into
//! the residual-axis bins of its covariate bin: interval-overlap lengths
//! on the uniform scale, normal-CDF differences on the normal scale. No
//! sampling is involved, so grids regenerate bit-identically.

use std::path::Path;

use crate::core::normal::std_normal_cdf;
use crate::error::{Error, Result};
use crate::residuals::{FunctionalResidual, ResidualScale};

/// Display window on the normal scale; mass outside accumulates into the
/// edge bins.
pub const NORMAL_WINDOW: (f64, f64) = (-3.5, 3.5);

#[derive(Debug, Clone)]
pub struct HeatmapGrid {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// mass[i][j]: covariate bin i, residual bin j.
    pub mass: Vec<Vec<f64>>,
    pub scale: ResidualScale,
    pub n: usize,
}

/// Bin the residual densities against a covariate. `x` must align with
/// the residuals' `index` fields (it is indexed by them).
pub fn heatmap(
    residuals: &[FunctionalResidual],
    x: &[f64],
    scale: ResidualScale,
    x_bins: usize,
    y_bins: usize,
) -> Result<HeatmapGrid> {
    if residuals.is_empty() {
        return Err(Error::EmptySubgroup);
    }
    let xs: Vec<f64> = residuals.iter().map(|r| x[r.index]).collect();
    let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (x_edges, nx) = if xmin == xmax {
        // degenerate covariate: a single bin around the common value
        (vec![xmin - 0.5, xmin + 0.5], 1)
    } else {
        let nx = x_bins.max(1);
        let step = (xmax - xmin) / nx as f64;
        ((0..=nx).map(|k| xmin + k as f64 * step).collect(), nx)
    };

    let ny = y_bins.max(1);
    let (ylo, yhi) = match scale {
        ResidualScale::Uniform => (0.0, 1.0),
        ResidualScale::Normal => NORMAL_WINDOW,
    };
    let ystep = (yhi - ylo) / ny as f64;
    let y_edges: Vec<f64> = (0..=ny).map(|k| ylo + k as f64 * ystep).collect();

    let mut mass = vec![vec![0.0; ny]; nx];
    for (r, &xi) in residuals.iter().zip(&xs) {
        let col = if nx == 1 {
            0
        } else {
            (((xi - xmin) / (xmax - xmin) * nx as f64) as usize).min(nx - 1)
        };
        deposit(r, scale, &y_edges, &mut mass[col]);
    }
    Ok(HeatmapGrid {
        x_edges,
        y_edges,
        mass,
        scale,
        n: residuals.len(),
    })
}

/// Integral of the residual density over each y-bin. On the normal scale
/// the first and last bins extend to -inf / +inf.
fn deposit(r: &FunctionalResidual, scale: ResidualScale, y_edges: &[f64], out: &mut [f64]) {
    let ny = out.len();
    match scale {
        ResidualScale::Uniform => {
            let w = r.width();
            for j in 0..ny {
                let a = y_edges[j].max(r.lo);
                let b = y_edges[j + 1].min(r.hi);
                if b > a {
                    out[j] += (b - a) / w;
                }
            }
        }
        ResidualScale::Normal => {
            let (z_lo, z_hi) = r.to_normal_scale();
            let w = r.width();
            for j in 0..ny {
                let lo_edge = if j == 0 {
                    f64::NEG_INFINITY
                } else {
                    y_edges[j]
                };
                let hi_edge = if j == ny - 1 {
                    f64::INFINITY
                } else {
                    y_edges[j + 1]
                };
                let a = lo_edge.max(z_lo);
                let b = hi_edge.min(z_hi);
                if b > a {
                    out[j] += (std_normal_cdf(b) - std_normal_cdf(a)) / w;
                }
            }
        }
    }
}

impl HeatmapGrid {
    pub fn x_bins(&self) -> usize {
        self.mass.len()
    }

    pub fn y_bins(&self) -> usize {
        self.y_edges.len() - 1
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().map(|col| col.iter().sum::<f64>()).sum()
    }

    pub fn column_mass(&self, i: usize) -> f64 {
        self.mass[i].iter().sum()
    }

    pub fn max_cell(&self) -> f64 {
        self.mass
            .iter()
            .flat_map(|col| col.iter())
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Export as CSV rows (x_lo, x_hi, y_lo, y_hi, mass).
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x_lo", "x_hi", "y_lo", "y_hi", "mass"])?;
        for i in 0..self.x_bins() {
            for j in 0..self.y_bins() {
                w.write_record([
                    format!("{}", self.x_edges[i]),
                    format!("{}", self.x_edges[i + 1]),
                    format!("{}", self.y_edges[j]),
                    format!("{}", self.y_edges[j + 1]),
                    format!("{}", self.mass[i][j]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
