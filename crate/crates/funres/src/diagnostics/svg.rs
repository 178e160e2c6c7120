//! Plain-SVG emission for the diagnostic plots: heatmaps with a LOWESS
//! overlay, Fn-Fn curves against the diagonal, and standalone LOWESS
//! panels. Output is deterministic text so artifacts diff cleanly.

use std::fmt::Write as _;
use std::path::Path;

use crate::diagnostics::{FnFnCurve, HeatmapGrid, LowessFit};
use crate::error::Result;
use crate::residuals::ResidualScale;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }
    fn py(&self, y: f64) -> f64 {
        // SVG y grows downward
        HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn svg_open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = write!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (px0, px1) = (f.px(f.x0), f.px(f.x1));
    let (py0, py1) = (f.py(f.y0), f.py(f.y1));
    let _ = write!(
        out,
        r#"<rect x="{px0:.2}" y="{py1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        px1 - px0,
        py0 - py1
    );
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let xv = f.x0 + frac * (f.x1 - f.x0);
        let yv = f.y0 + frac * (f.y1 - f.y0);
        let _ = write!(
            out,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{4}</text>"#,
            f.px(xv),
            py0,
            py0 + 5.0,
            py0 + 18.0,
            fmt_tick(xv)
        );
        let _ = write!(
            out,
            r#"<line x1="{1:.2}" y1="{0:.2}" x2="{2:.2}" y2="{0:.2}" stroke="black"/><text x="{3:.2}" y="{4:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{5}</text>"#,
            f.py(yv),
            px0,
            px0 - 5.0,
            px0 - 8.0,
            f.py(yv) + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = write!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        (px0 + px1) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = write!(
        out,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0,
        escape(y_label)
    );
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (0.001..10000.0).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn polyline(out: &mut String, f: &Frame, xs: &[f64], ys: &[f64], style: &str) {
    let mut points = String::new();
    for (x, y) in xs.iter().zip(ys) {
        let _ = write!(points, "{:.2},{:.2} ", f.px(*x), f.py(*y));
    }
    let _ = write!(
        out,
        r#"<polyline fill="none" {style} points="{}"/>"#,
        points.trim_end()
    );
}

/// White-to-dark linear ramp on cell mass.
fn ramp(frac: f64) -> String {
    let f = frac.clamp(0.0, 1.0);
    // white -> deep blue-black
    let r = (255.0 * (1.0 - f * 0.92)) as u8;
    let g = (255.0 * (1.0 - f * 0.85)) as u8;
    let b = (255.0 * (1.0 - f * 0.55)) as u8;
    format!("rgb({r},{g},{b})")
}

/// Heatmap with optional LOWESS overlay (solid) and a dashed zero /
/// center reference line.
pub fn render_heatmap(
    grid: &HeatmapGrid,
    overlay: Option<&LowessFit>,
    title: &str,
    x_label: &str,
    path: &Path,
) -> Result<()> {
    let f = Frame {
        x0: grid.x_edges[0],
        x1: *grid.x_edges.last().unwrap(),
        y0: grid.y_edges[0],
        y1: *grid.y_edges.last().unwrap(),
    };
    let mut out = String::new();
    svg_open(&mut out, title);
    let max_mass = grid.max_cell().max(1e-300);
    for i in 0..grid.x_bins() {
        for j in 0..grid.y_bins() {
            let m = grid.mass[i][j];
            if m <= 0.0 {
                continue;
            }
            let x = f.px(grid.x_edges[i]);
            let y = f.py(grid.y_edges[j + 1]);
            let w = f.px(grid.x_edges[i + 1]) - x;
            let h = f.py(grid.y_edges[j]) - y;
            let _ = write!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{}"/>"#,
                ramp(m / max_mass)
            );
        }
    }
    // dashed center line: 0.5 on the uniform scale, 0 on the normal scale
    let center = match grid.scale {
        ResidualScale::Uniform => 0.5,
        ResidualScale::Normal => 0.0,
    };
    let _ = write!(
        out,
        r#"<line x1="{:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
        f.px(f.x0),
        f.py(center),
        f.px(f.x1)
    );
    if let Some(fit) = overlay {
        polyline(
            &mut out,
            &f,
            &fit.x,
            &fit.fitted,
            r#"stroke="crimson" stroke-width="2""#,
        );
    }
    let y_label = match grid.scale {
        ResidualScale::Uniform => "residual (uniform scale)",
        ResidualScale::Normal => "residual (normal scale)",
    };
    axes(&mut out, &f, x_label, y_label);
    out.push_str("</svg>\n");
    std::fs::write(path, out)?;
    Ok(())
}

/// Plot-grid resolution; the exact knot set (which can run to hundreds
/// of thousands of points) is resampled onto this many points for the
/// SVG, while CSV exports keep the exact curve.
const FNFN_PLOT_POINTS: usize = 512;

/// Fn-Fn curve against the dashed 45-degree diagonal.
pub fn render_fnfn(curve: &FnFnCurve, title: &str, path: &Path) -> Result<()> {
    let f = Frame {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };
    let mut out = String::new();
    svg_open(&mut out, title);
    let _ = write!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
        f.px(0.0),
        f.py(0.0),
        f.px(1.0),
        f.py(1.0)
    );
    if curve.t.len() > FNFN_PLOT_POINTS {
        let ts: Vec<f64> = (0..FNFN_PLOT_POINTS)
            .map(|k| k as f64 / (FNFN_PLOT_POINTS - 1) as f64)
            .collect();
        let vs: Vec<f64> = ts.iter().map(|&t| curve.eval(t)).collect();
        polyline(
            &mut out,
            &f,
            &ts,
            &vs,
            r#"stroke="steelblue" stroke-width="2""#,
        );
    } else {
        polyline(
            &mut out,
            &f,
            &curve.t,
            &curve.resbar,
            r#"stroke="steelblue" stroke-width="2""#,
        );
    }
    let note = format!("n = {}, sup deviation = {:.4}", curve.n, curve.sup_dev);
    let _ = write!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
        MARGIN_L + 8.0,
        MARGIN_T + 14.0,
        escape(&note)
    );
    axes(&mut out, &f, "t", "averaged residual CDF");
    out.push_str("</svg>\n");
    std::fs::write(path, out)?;
    Ok(())
}

/// Standalone LOWESS panel: solid smoothed line, scattered points, and a
/// dashed zero line.
pub fn render_lowess(
    fit: &LowessFit,
    points: Option<(&[f64], &[f64])>,
    title: &str,
    x_label: &str,
    y_label: &str,
    path: &Path,
) -> Result<()> {
    let mut ymin = fit
        .fitted
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let mut ymax = fit
        .fitted
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    if let Some((_, vs)) = points {
        for &v in vs {
            ymin = ymin.min(v);
            ymax = ymax.max(v);
        }
    }
    let pad = 0.08 * (ymax - ymin).max(1e-6);
    let f = Frame {
        x0: fit.x[0],
        x1: *fit.x.last().unwrap(),
        y0: ymin - pad,
        y1: ymax + pad,
    };
    let mut out = String::new();
    svg_open(&mut out, title);
    if let Some((xs, vs)) = points {
        for (x, v) in xs.iter().zip(vs) {
            let _ = write!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="steelblue" fill-opacity="0.35"/>"#,
                f.px(*x),
                f.py(*v)
            );
        }
    }
    let _ = write!(
        out,
        r#"<line x1="{:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
        f.px(f.x0),
        f.py(0.0),
        f.px(f.x1)
    );
    polyline(
        &mut out,
        &f,
        &fit.x,
        &fit.fitted,
        r#"stroke="crimson" stroke-width="2""#,
    );
    axes(&mut out, &f, x_label, y_label);
    out.push_str("</svg>\n");
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{fnfn, heatmap, lowess};
    use crate::residuals::FunctionalResidual;

    #[test]
    fn svg_files_are_written_and_wellformed() {
        let dir = std::env::temp_dir().join(format!("funres_svg_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let residuals: Vec<FunctionalResidual> = (0..40)
            .map(|i| {
                let lo = i as f64 / 80.0;
                FunctionalResidual::new(lo, lo + 0.4, i).unwrap()
            })
            .collect();
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();

        let grid = heatmap(&residuals, &xs, ResidualScale::Normal, 10, 12).unwrap();
        let vals: Vec<f64> = residuals
            .iter()
            .map(|r| r.point_summary(ResidualScale::Normal))
            .collect();
        let fit = lowess(&xs, &vals, 0.5, 2).unwrap();
        let heat_path = dir.join("heat.svg");
        render_heatmap(&grid, Some(&fit), "heat", "x", &heat_path).unwrap();

        let curve = fnfn(&residuals).unwrap();
        let fnfn_path = dir.join("fnfn.svg");
        render_fnfn(&curve, "fnfn", &fnfn_path).unwrap();

        let low_path = dir.join("lowess.svg");
        render_lowess(
            &fit,
            Some((&xs, &vals)),
            "trend",
            "x",
            "point residual",
            &low_path,
        )
        .unwrap();

        for p in [&heat_path, &fnfn_path, &low_path] {
            let body = std::fs::read_to_string(p).unwrap();
            assert!(body.starts_with("<svg"));
            assert!(body.trim_end().ends_with("</svg>"));
            assert!(body.contains("polyline") || body.contains("rect"));
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn deterministic_output() {
        let residuals: Vec<FunctionalResidual> = (0..10)
            .map(|i| FunctionalResidual::new(0.05 * i as f64, 0.5 + 0.05 * i as f64, i).unwrap())
            .collect();
        let curve = fnfn(&residuals).unwrap();
        let dir = std::env::temp_dir();
        let p1 = dir.join(format!("funres_det1_{}.svg", std::process::id()));
        let p2 = dir.join(format!("funres_det2_{}.svg", std::process::id()));
        render_fnfn(&curve, "t", &p1).unwrap();
        render_fnfn(&curve, "t", &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        std::fs::remove_file(p1).ok();
        std::fs::remove_file(p2).ok();
    }
}
