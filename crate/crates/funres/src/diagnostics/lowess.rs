//! Locally weighted scatterplot smoothing (tricube local-linear with
//! bisquare robustness reweighting).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LowessFit {
    /// Sorted covariate values.
    pub x: Vec<f64>,
    /// Smoothed values aligned with `x`.
    pub fitted: Vec<f64>,
    pub span: f64,
    pub robustness_iters: usize,
}

/// Smooth `v` against `x` with window fraction `span` and `iters`
/// bisquare robustness reweightings. Deterministic; ties in `x` are kept.
pub fn lowess(x: &[f64], v: &[f64], span: f64, iters: usize) -> Result<LowessFit> {
    if x.len() != v.len() {
        return Err(Error::InvalidData(format!(
            "lowess inputs disagree: {} x values, {} responses",
            x.len(),
            v.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidData("lowess needs at least 3 points".into()));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::InvalidData(format!(
            "lowess span {span} outside (0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let vs: Vec<f64> = order.iter().map(|&i| v[i]).collect();
    if xs[0] == xs[n - 1] {
        return Err(Error::InvalidData("lowess covariate is constant".into()));
    }

    let window = ((span * n as f64).ceil() as usize).clamp(2, n);
    let mut robustness = vec![1.0; n];
    let mut fitted = vec![0.0; n];

    for iteration in 0..=iters {
        for i in 0..n {
            fitted[i] = local_fit(&xs, &vs, &robustness, i, window);
        }
        if iteration == iters {
            break;
        }
        // bisquare reweighting on the residuals
        let mut abs_resid: Vec<f64> = vs.iter().zip(&fitted).map(|(a, b)| (a - b).abs()).collect();
        let mut sorted = abs_resid.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s = 6.0 * median_sorted(&sorted);
        if s <= 0.0 {
            break; // perfect fit; nothing to reweight
        }
        for (w, r) in robustness.iter_mut().zip(abs_resid.iter_mut()) {
            let u = (*r / s).min(1.0);
            *w = (1.0 - u * u) * (1.0 - u * u);
        }
    }

    Ok(LowessFit {
        x: xs,
        fitted,
        span,
        robustness_iters: iters,
    })
}

/// Weighted local linear fit at point `i` over the `window` nearest
/// neighbors.
fn local_fit(xs: &[f64], vs: &[f64], robustness: &[f64], i: usize, window: usize) -> f64 {
    let n = xs.len();
    let xi = xs[i];
    // nearest-neighbor window [lo, hi) around i
    let mut lo = i.saturating_sub(window - 1);
    let mut hi = (lo + window).min(n);
    lo = hi - window;
    while lo > 0 && hi < n {
        if xi - xs[lo - 1] < xs[hi] - xi {
            lo -= 1;
            hi -= 1;
        } else {
            break;
        }
    }
    while hi < n && lo < i {
        if xs[hi] - xi < xi - xs[lo] {
            lo += 1;
            hi += 1;
        } else {
            break;
        }
    }
    let h = (xi - xs[lo]).max(xs[hi - 1] - xi).max(1e-300);

    // tricube kernel times robustness weights, weighted linear regression
    let accumulate = |use_robustness: bool| {
        let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in lo..hi {
            let d = ((xs[k] - xi) / h).abs();
            let tri = {
                let c = (1.0 - d * d * d).max(0.0);
                c * c * c
            };
            let w = if use_robustness {
                tri * robustness[k]
            } else {
                tri
            };
            if w <= 0.0 {
                continue;
            }
            sw += w;
            swx += w * xs[k];
            swy += w * vs[k];
            swxx += w * xs[k] * xs[k];
            swxy += w * xs[k] * vs[k];
        }
        (sw, swx, swy, swxx, swxy)
    };
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = accumulate(true);
    if sw <= 0.0 {
        // every window point was downweighted to zero; fall back to the
        // plain tricube fit for this point
        (sw, swx, swy, swxx, swxy) = accumulate(false);
    }
    if sw <= 0.0 {
        return vs[i];
    }
    let denom = sw * swxx - swx * swx;
    if denom.abs() < 1e-12 * sw * sw.max(1.0) {
        // degenerate in x within the window: weighted mean
        return swy / sw;
    }
    let beta = (sw * swxy - swx * swy) / denom;
    let alpha = (swy - beta * swx) / sw;
    alpha + beta * xi
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

impl LowessFit {
    /// Fitted-value range, the misspecification statistic used by the
    /// scenario checks.
    pub fn range(&self) -> f64 {
        let lo = self.fitted.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self
            .fitted
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn export_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "fitted"])?;
        for (x, f) in self.x.iter().zip(&self.fitted) {
            w.write_record([format!("{x}"), format!("{f}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_yields_constant_fit() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let v = vec![3.25; 50];
        let fit = lowess(&x, &v, 2.0 / 3.0, 3).unwrap();
        for f in &fit.fitted {
            assert!((f - 3.25).abs() < 1e-12);
        }
        assert!(fit.range() < 1e-12);
    }

    #[test]
    fn reproduces_linear_data_exactly() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.25 - 3.0).collect();
        let v: Vec<f64> = x.clone();
        let fit = lowess(&x, &v, 1.0, 0).unwrap();
        for (f, xv) in fit.fitted.iter().zip(&fit.x) {
            assert!((f - xv).abs() < 1e-8, "{f} vs {xv}");
        }
    }

    #[test]
    fn smooths_a_noisy_quadratic() {
        let mut rng = crate::core::rng::RngStream::new(3, 14);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let v: Vec<f64> = x.iter().map(|&xi| xi * xi + 0.3 * rng.normal()).collect();
        let fit = lowess(&x, &v, 0.3, 3).unwrap();
        // near zero the curve should sit close to 0; at |x| ~ 2 near 4
        for (xv, f) in fit.x.iter().zip(&fit.fitted) {
            if xv.abs() < 0.2 {
                assert!(f.abs() < 0.5, "fit at {xv} = {f}");
            }
            if (xv.abs() - 2.0).abs() < 0.2 {
                assert!((f - 4.0).abs() < 1.2, "fit at {xv} = {f}");
            }
        }
    }

    #[test]
    fn robustness_tames_a_gross_outlier() {
        // a single gross outlier in a wide window: the bisquare pass
        // should pull the fit back to the underlying line
        let n = 200;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.05).collect();
        let mut v: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, xi)| 2.0 * xi + 0.1 * (i as f64 * 2.1).sin())
            .collect();
        v[100] = 50.0;
        let robust = lowess(&x, &v, 2.0 / 3.0, 3).unwrap();
        let naive = lowess(&x, &v, 2.0 / 3.0, 0).unwrap();
        let idx = 100;
        let target = 2.0 * robust.x[idx];
        assert!((robust.fitted[idx] - target).abs() < (naive.fitted[idx] - target).abs());
        assert!((robust.fitted[idx] - target).abs() < 0.5);
    }

    #[test]
    fn input_validation() {
        let x = vec![1.0, 2.0];
        assert!(lowess(&x, &[1.0, 2.0], 0.5, 0).is_err()); // too short
        let x = vec![1.0, 2.0, 3.0];
        assert!(lowess(&x, &[1.0, 2.0], 0.5, 0).is_err()); // length mismatch
        assert!(lowess(&x, &[1.0, 2.0, 3.0], 0.0, 0).is_err()); // bad span
        assert!(lowess(&x, &[1.0, 2.0, 3.0], 1.5, 0).is_err());
        let xc = vec![2.0, 2.0, 2.0];
        assert!(lowess(&xc, &[1.0, 2.0, 3.0], 0.5, 0).is_err()); // constant x
    }

    #[test]
    fn deterministic_across_calls() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin() * 2.0).collect();
        let v: Vec<f64> = (0..100).map(|i| (i as f64 * 0.3).cos()).collect();
        let a = lowess(&x, &v, 2.0 / 3.0, 3).unwrap();
        let b = lowess(&x, &v, 2.0 / 3.0, 3).unwrap();
        assert_eq!(a.fitted, b.fitted);
    }
}
