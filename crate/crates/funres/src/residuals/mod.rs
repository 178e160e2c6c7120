//! Functional residuals: probability intervals, their CDF/density views,
//! scale transforms, aggregation, and the derived point residuals.
//!
//! The residual for an observation `(y, x)` is the interval
//! `(pi(y-1; x), pi(y; x))`. Its CDF view is the uniform CDF on that
//! interval; averaging those CDFs over the sample gives the curve the
//! Fn-Fn plot compares against the identity.

mod curve;

use std::path::Path;

use crate::core::dataset::Dataset;
use crate::core::normal::{std_normal_pdf, std_normal_quantile};
use crate::core::rng::RngStream;
use crate::error::{Error, Result};
use crate::models::{Family, FittedModel, LinkKind};

pub use curve::{average_curve, ResidualCurve};

/// Endpoint clip applied before the normal-scale transform; count models
/// hit hi = 1 exactly in the upper tail.
pub const NORMAL_CLIP: f64 = 1e-10;

/// Interval width below which an outcome is treated as numerically
/// impossible under the model.
pub const MIN_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualScale {
    Uniform,
    Normal,
}

/// The probability interval (pi(y-1; x), pi(y; x)) for one observation.
#[derive(Debug, Clone, Copy)]
pub struct FunctionalResidual {
    pub lo: f64,
    pub hi: f64,
    /// Originating row id.
    pub index: usize,
}

impl FunctionalResidual {
    pub fn new(lo: f64, hi: f64, index: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return Err(Error::InvalidData(format!(
                "residual interval ({lo}, {hi}) escapes [0, 1]"
            )));
        }
        if hi - lo < MIN_WIDTH {
            return Err(Error::DegenerateInterval {
                y: index as i64,
                width: hi - lo,
            });
        }
        Ok(FunctionalResidual { lo, hi, index })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// CDF view: Pr{ U(lo, hi) <= t }.
    pub fn eval(&self, t: f64) -> f64 {
        ((t - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    /// Density on the uniform scale: 1 / (hi - lo) on (lo, hi], else 0.
    pub fn density(&self, t: f64) -> f64 {
        if t > self.lo && t <= self.hi {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    /// Density after the z = Phi^{-1}(t) change of variables:
    /// phi(z) / (hi - lo) on the transformed interval.
    pub fn density_normal_scale(&self, z: f64) -> f64 {
        let (z_lo, z_hi) = self.to_normal_scale();
        if z > z_lo && z <= z_hi {
            std_normal_pdf(z) / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    /// Interval endpoints mapped through the normal quantile, clipped at
    /// `NORMAL_CLIP` so exact 0 / 1 endpoints stay finite.
    pub fn to_normal_scale(&self) -> (f64, f64) {
        let lo = self.lo.max(NORMAL_CLIP);
        let hi = self.hi.min(1.0 - NORMAL_CLIP);
        let z_lo = std_normal_quantile(lo).expect("clipped lo is interior");
        let z_hi = std_normal_quantile(hi).expect("clipped hi is interior");
        (z_lo, z_hi)
    }

    /// Sign-based point residual: lo + hi - 1, the difference
    /// Pr{y > Y} - Pr{y < Y} under the fitted distribution.
    pub fn sign_residual(&self) -> f64 {
        self.lo + self.hi - 1.0
    }

    /// Representative point on the displayed scale: the interval midpoint
    /// (uniform) or the mean of Phi^{-1}(U(lo, hi)) (normal), which is the
    /// truncated-normal mean (phi(z_lo) - phi(z_hi)) / (hi - lo).
    pub fn point_summary(&self, scale: ResidualScale) -> f64 {
        match scale {
            ResidualScale::Uniform => 0.5 * (self.lo + self.hi),
            ResidualScale::Normal => {
                let (z_lo, z_hi) = self.to_normal_scale();
                (std_normal_pdf(z_lo) - std_normal_pdf(z_hi)) / (self.hi - self.lo)
            }
        }
    }
}

/// Residual for a single observation at the fitted (plug-in) parameters.
pub fn functional_residual(
    model: &FittedModel,
    y: i64,
    x: &[f64],
    index: usize,
) -> Result<FunctionalResidual> {
    let lo = model.cumulative_prob(y - 1, x)?;
    let hi = model.cumulative_prob(y, x)?;
    if hi - lo < MIN_WIDTH {
        return Err(Error::DegenerateInterval { y, width: hi - lo });
    }
    FunctionalResidual::new(lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0), index)
}

/// Residuals for every dataset row. Rows whose interval is numerically
/// degenerate are reported in `skipped` and left out of `residuals`.
#[derive(Debug, Clone)]
pub struct ResidualSet {
    pub residuals: Vec<FunctionalResidual>,
    pub skipped: Vec<(usize, String)>,
}

pub fn residuals_for(model: &FittedModel, data: &Dataset) -> Result<ResidualSet> {
    let mut residuals = Vec::with_capacity(data.n());
    let mut skipped = Vec::new();
    for i in 0..data.n() {
        let x = data.covariate_row(i);
        match functional_residual(model, data.y()[i] as i64, &x, i) {
            Ok(r) => residuals.push(r),
            Err(Error::DegenerateInterval { y, width }) => {
                skipped.push((i, format!("outcome {y} has interval width {width:e}")));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ResidualSet { residuals, skipped })
}

/// One draw of the surrogate point residual: G^{-1}(u) with
/// u ~ U(lo, hi). For a cumulative link fit this reproduces the latent
/// residual truncated to the observed category's cell.
pub fn surrogate_from_interval(
    res: &FunctionalResidual,
    link: LinkKind,
    rng: &mut RngStream,
) -> f64 {
    let u = rng
        .uniform_in(res.lo.max(NORMAL_CLIP), res.hi.min(1.0 - NORMAL_CLIP))
        .clamp(NORMAL_CLIP, 1.0 - NORMAL_CLIP);
    link.quantile(u).expect("clipped draw is interior")
}

/// Model-checked surrogate draw; only cumulative link fits carry the
/// latent structure the draw is equivalent to.
pub fn surrogate_draw(
    model: &FittedModel,
    res: &FunctionalResidual,
    rng: &mut RngStream,
) -> Result<f64> {
    match model.family {
        Family::CumulativeLink(link) => Ok(surrogate_from_interval(res, link, rng)),
        _ => Err(Error::UnsupportedFamily(
            "surrogate_draw",
            "cumulative-link",
        )),
    }
}

/// Classical Pearson residual (binary and Poisson-type families).
pub fn pearson_residual(model: &FittedModel, y: f64, x: &[f64]) -> Result<f64> {
    match model.family {
        Family::BinaryLogit => {
            let p = model.mean(x)?;
            Ok((y - p) / (p * (1.0 - p)).sqrt())
        }
        Family::Poisson => {
            let mu = model.mean(x)?;
            Ok((y - mu) / mu.sqrt())
        }
        Family::QuasiPoisson => {
            let mu = model.mean(x)?;
            let d = model.dispersion.unwrap_or(1.0).max(1.0);
            Ok((y - mu) / (d * mu).sqrt())
        }
        _ => Err(Error::UnsupportedFamily(
            "pearson_residual",
            "binary and count",
        )),
    }
}

/// Classical deviance residual (binary and Poisson-type families).
pub fn deviance_residual(model: &FittedModel, y: f64, x: &[f64]) -> Result<f64> {
    match model.family {
        Family::BinaryLogit => {
            let p = model.mean(x)?;
            let d = if y > 0.5 {
                -2.0 * p.ln()
            } else {
                -2.0 * (1.0 - p).ln()
            };
            Ok(if y > 0.5 { d.sqrt() } else { -d.sqrt() })
        }
        Family::Poisson | Family::QuasiPoisson => {
            let mu = model.mean(x)?;
            // unit deviance with the y = 0 limit 2 mu
            let d = if y == 0.0 {
                2.0 * mu
            } else {
                2.0 * (y * (y / mu).ln() - (y - mu))
            };
            let scale = match model.family {
                Family::QuasiPoisson => model.dispersion.unwrap_or(1.0).max(1.0),
                _ => 1.0,
            };
            let r = (d.max(0.0) / scale).sqrt();
            Ok(if y >= mu { r } else { -r })
        }
        _ => Err(Error::UnsupportedFamily(
            "deviance_residual",
            "binary and count",
        )),
    }
}

/// Export residuals with their transforms as CSV: index, y, lo, hi,
/// z_lo, z_hi, point_uniform, point_normal, sign_residual.
pub fn export_csv(path: &Path, residuals: &[FunctionalResidual], y: &[u32]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "index",
        "y",
        "lo",
        "hi",
        "z_lo",
        "z_hi",
        "point_uniform",
        "point_normal",
        "sign_residual",
    ])?;
    for r in residuals {
        let (z_lo, z_hi) = r.to_normal_scale();
        w.write_record([
            r.index.to_string(),
            y.get(r.index).map_or(String::new(), |v| v.to_string()),
            format!("{}", r.lo),
            format!("{}", r.hi),
            format!("{z_lo}"),
            format!("{z_hi}"),
            format!("{}", r.point_summary(ResidualScale::Uniform)),
            format!("{}", r.point_summary(ResidualScale::Normal)),
            format!("{}", r.sign_residual()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(lo: f64, hi: f64) -> FunctionalResidual {
        FunctionalResidual::new(lo, hi, 0).unwrap()
    }

    #[test]
    fn eval_worked_example() {
        // interval (0, 0.27): eval is t / 0.27 capped at 1
        let r = res(0.0, 0.27);
        assert!((r.eval(0.135) - 0.5).abs() < 1e-12);
        assert_eq!(r.eval(0.5), 1.0);
        assert_eq!(res(0.2, 0.8).eval(0.2), 0.0);
        assert_eq!(r.eval(0.0), 0.0);
        assert_eq!(r.eval(1.0), 1.0);
    }

    #[test]
    fn eval_monotone_with_unit_ends() {
        let r = res(0.31, 0.62);
        let mut prev = -1.0;
        let mut t = 0.0;
        while t <= 1.0 {
            let v = r.eval(t);
            assert!(v >= prev);
            prev = v;
            t += 0.01;
        }
        assert_eq!(r.eval(r.lo), 0.0);
        assert_eq!(r.eval(r.hi), 1.0);
    }

    #[test]
    fn density_values() {
        let r = res(0.0, 0.27);
        assert!((r.density(0.1) - 1.0 / 0.27).abs() < 1e-12);
        assert_eq!(r.density(0.5), 0.0);
        let full = res(0.0, 1.0);
        assert!((full.density(0.35) - 1.0).abs() < 1e-12);
        assert_eq!(full.density(0.0), 0.0);
    }

    #[test]
    fn normal_scale_density_integrates_to_one() {
        // trapezoid quadrature over the clipped support
        for (lo, hi) in [(0.0, 1.0), (0.1, 0.4), (0.85, 0.999)] {
            let r = res(lo, hi);
            let (z_lo, z_hi) = r.to_normal_scale();
            let steps = 200_000;
            let h = (z_hi - z_lo) / steps as f64;
            let mut total = 0.0;
            for k in 0..steps {
                let z0 = z_lo + k as f64 * h;
                let z1 = z0 + h;
                // open at the left endpoint; use midpoints
                let zm = 0.5 * (z0 + z1);
                total += r.density_normal_scale(zm) * h;
            }
            assert!(
                (total - 1.0).abs() < 1e-6,
                "integral over ({lo},{hi}) = {total}"
            );
        }
    }

    #[test]
    fn to_normal_scale_values() {
        let r = res(0.99, 0.999);
        let (z_lo, z_hi) = r.to_normal_scale();
        assert!((z_lo - 2.326_347_874_040_840_8).abs() < 1e-10);
        assert!((z_hi - 3.090_232_306_167_813_2).abs() < 1e-10);

        let r = res(0.0, 0.27);
        let (z_lo, z_hi) = r.to_normal_scale();
        assert!((z_lo + 6.361_340_902_404_056).abs() < 1e-6);
        assert!((z_hi + 0.612_812_991_016_627).abs() < 1e-9);
    }

    #[test]
    fn sign_residual_values() {
        assert!(res(0.0, 1.0).sign_residual().abs() < 1e-15);
        assert!((res(0.0, 0.27).sign_residual() + 0.73).abs() < 1e-12);
        assert!((res(0.9526, 1.0).sign_residual() - 0.9526).abs() < 1e-12);
        assert!((res(0.5, 1.0).sign_residual() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn point_summary_values() {
        assert!((res(0.0, 1.0).point_summary(ResidualScale::Uniform) - 0.5).abs() < 1e-12);
        assert!(res(0.0, 1.0).point_summary(ResidualScale::Normal).abs() < 1e-8);
        // symmetric interval maps to 0 on the normal scale
        assert!(res(0.2, 0.8).point_summary(ResidualScale::Normal).abs() < 1e-12);
    }

    #[test]
    fn point_summary_matches_monte_carlo_truncated_mean() {
        let r = res(0.13, 0.58);
        let mut rng = RngStream::new(5, 5);
        let n = 400_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = rng.uniform_in(r.lo, r.hi);
            sum += std_normal_quantile(u.clamp(1e-12, 1.0 - 1e-12)).unwrap();
        }
        let mc = sum / n as f64;
        let exact = r.point_summary(ResidualScale::Normal);
        assert!((mc - exact).abs() < 0.005, "mc {mc} vs exact {exact}");
    }

    #[test]
    fn degenerate_interval_is_an_error() {
        assert!(matches!(
            FunctionalResidual::new(0.4, 0.4, 3),
            Err(Error::DegenerateInterval { .. })
        ));
        assert!(FunctionalResidual::new(0.6, 0.4, 3).is_err());
    }

    #[test]
    fn sign_residual_equals_stieltjes_integral() {
        // 2 * int t d(eval) - 1 over random intervals, by quadrature on
        // the uniform density
        let mut rng = RngStream::new(9, 1);
        for _ in 0..25 {
            let a = rng.uniform() * 0.8;
            let b = a + 0.05 + rng.uniform() * (1.0 - a - 0.05);
            let r = FunctionalResidual::new(a, b.min(1.0), 0).unwrap();
            let steps = 20_000;
            let h = (r.hi - r.lo) / steps as f64;
            let mut integral = 0.0;
            for k in 0..steps {
                let t = r.lo + (k as f64 + 0.5) * h;
                integral += t * r.density(t) * h;
            }
            let lhs = r.sign_residual();
            let rhs = 2.0 * integral - 1.0;
            assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
        }
    }
}
