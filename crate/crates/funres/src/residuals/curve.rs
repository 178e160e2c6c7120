//! Exact piecewise-linear representation of the averaged residual CDF.

use super::FunctionalResidual;

/// The averaged curve Res(t) = mean_i Pr{ U(lo_i, hi_i) <= t }. Piecewise
/// linear with knots at the union of interval endpoints; when `exact` the
/// values were accumulated without grid error.
#[derive(Debug, Clone)]
pub struct ResidualCurve {
    knots: Vec<f64>,
    values: Vec<f64>,
    pub exact: bool,
}

/// Below this knot-count x residual-count budget the knot values are
/// evaluated directly (exact to rounding); above it a compensated sweep
/// integrates the slope events.
const DIRECT_BUDGET: usize = 1 << 22;

/// Average the CDF views of `residuals` into their exact piecewise-linear
/// mean.
pub fn average_curve(residuals: &[FunctionalResidual]) -> ResidualCurve {
    assert!(
        !residuals.is_empty(),
        "average_curve needs at least one residual"
    );
    let n = residuals.len();

    let mut knots = Vec::with_capacity(2 * n + 2);
    knots.push(0.0);
    knots.push(1.0);
    for r in residuals {
        knots.push(r.lo);
        knots.push(r.hi);
    }
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup();

    let values = if n * knots.len() <= DIRECT_BUDGET {
        direct_values(residuals, &knots)
    } else {
        sweep_values(residuals, &knots)
    };

    ResidualCurve {
        knots,
        values,
        exact: true,
    }
}

fn direct_values(residuals: &[FunctionalResidual], knots: &[f64]) -> Vec<f64> {
    let n = residuals.len() as f64;
    knots
        .iter()
        .map(|&t| {
            let mut sum = 0.0;
            let mut comp = 0.0;
            for r in residuals {
                kahan_add(&mut sum, &mut comp, r.eval(t));
            }
            (sum / n).clamp(0.0, 1.0)
        })
        .collect()
}

fn sweep_values(residuals: &[FunctionalResidual], knots: &[f64]) -> Vec<f64> {
    let n = residuals.len() as f64;
    // slope events: +1/(n w) at lo, -1/(n w) at hi
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * residuals.len());
    for r in residuals {
        let s = 1.0 / (n * r.width());
        events.push((r.lo, s));
        events.push((r.hi, -s));
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut values = Vec::with_capacity(knots.len());
    let mut slope = 0.0;
    let mut slope_comp = 0.0;
    let mut value = 0.0;
    let mut value_comp = 0.0;
    let mut ev = 0;
    for (k, &t) in knots.iter().enumerate() {
        if k > 0 {
            let dt = t - knots[k - 1];
            kahan_add(&mut value, &mut value_comp, slope * dt);
        }
        values.push(value.clamp(0.0, 1.0));
        while ev < events.len() && events[ev].0 <= t {
            kahan_add(&mut slope, &mut slope_comp, events[ev].1);
            ev += 1;
        }
    }
    // endpoint identities hold analytically; pin them against drift
    if let Some(first) = values.first_mut() {
        *first = 0.0;
    }
    if let Some(last) = values.last_mut() {
        *last = 1.0;
    }
    values
}

#[inline]
fn kahan_add(sum: &mut f64, comp: &mut f64, v: f64) {
    let y = v - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

impl ResidualCurve {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Curve value at `t` by linear interpolation between knots.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => self.values[i],
            Err(i) => {
                // t lies strictly between knots i-1 and i
                let (t0, t1) = (self.knots[i - 1], self.knots[i]);
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// sup_t |curve(t) - t|. For a piecewise-linear curve the supremum is
    /// attained at a knot.
    pub fn sup_deviation(&self) -> f64 {
        self.knots
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| (v - t).abs())
            .fold(0.0, f64::max)
    }

    /// Resample onto a uniform grid of `points` values in [0, 1]
    /// (plotting convenience; the exact representation stays available).
    pub fn grid(&self, points: usize) -> (Vec<f64>, Vec<f64>) {
        let m = points.max(2);
        let ts: Vec<f64> = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
        let vs = ts.iter().map(|&t| self.eval(t)).collect();
        (ts, vs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::rng::RngStream;

    fn res(lo: f64, hi: f64, i: usize) -> FunctionalResidual {
        FunctionalResidual::new(lo, hi, i).unwrap()
    }

    #[test]
    fn single_full_interval_is_identity() {
        let curve = average_curve(&[res(0.0, 1.0, 0)]);
        for &t in &[0.0, 0.2, 0.53, 0.999, 1.0] {
            assert!((curve.eval(t) - t).abs() < 1e-15);
        }
        assert!(curve.sup_deviation() < 1e-15);
    }

    #[test]
    fn complementary_intervals_average_to_identity() {
        let curve = average_curve(&[res(0.0, 0.5, 0), res(0.5, 1.0, 1)]);
        assert!((curve.eval(0.25) - 0.25).abs() < 1e-15);
        assert!((curve.eval(0.5) - 0.5).abs() < 1e-15);
        assert!((curve.eval(0.75) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn endpoints_are_pinned() {
        let curve = average_curve(&[res(0.2, 0.7, 0), res(0.1, 0.9, 1)]);
        assert_eq!(curve.eval(0.0), 0.0);
        assert_eq!(curve.eval(1.0), 1.0);
        let v = curve.values();
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 1.0);
    }

    #[test]
    fn curve_is_nondecreasing() {
        let mut rng = RngStream::new(33, 0);
        let residuals: Vec<FunctionalResidual> = (0..150)
            .map(|i| {
                let a = rng.uniform() * 0.9;
                let b = a + 0.01 + rng.uniform() * (1.0 - a - 0.01);
                res(a, b.min(1.0), i)
            })
            .collect();
        let curve = average_curve(&residuals);
        for w in curve.values().windows(2) {
            assert!(w[1] >= w[0] - 1e-14);
        }
    }

    #[test]
    fn matches_brute_force_mean_to_1e12() {
        let mut rng = RngStream::new(7, 7);
        for _ in 0..40 {
            let n = 1 + (rng.next_u64() % 120) as usize;
            let residuals: Vec<FunctionalResidual> = (0..n)
                .map(|i| {
                    let a = rng.uniform() * 0.95;
                    let b = a + 1e-3 + rng.uniform() * (1.0 - a - 1e-3);
                    res(a, b.min(1.0), i)
                })
                .collect();
            let curve = average_curve(&residuals);
            for _ in 0..50 {
                let t = rng.uniform();
                let brute: f64 = residuals.iter().map(|r| r.eval(t)).sum::<f64>() / n as f64;
                assert!(
                    (curve.eval(t) - brute).abs() < 1e-12,
                    "n={n} t={t}: {} vs {brute}",
                    curve.eval(t)
                );
            }
        }
    }

    #[test]
    fn sweep_path_agrees_with_direct_path() {
        // force the sweep by exceeding the direct budget
        let mut rng = RngStream::new(1234, 0);
        let n = 3000;
        let residuals: Vec<FunctionalResidual> = (0..n)
            .map(|i| {
                let a = rng.uniform() * 0.9;
                let b = a + 0.01 + rng.uniform() * (1.0 - a - 0.01);
                res(a, b.min(1.0), i)
            })
            .collect();
        let knots: Vec<f64> = {
            let mut k = vec![0.0, 1.0];
            for r in &residuals {
                k.push(r.lo);
                k.push(r.hi);
            }
            k.sort_by(|a, b| a.partial_cmp(b).unwrap());
            k.dedup();
            k
        };
        let direct = direct_values(&residuals, &knots);
        let swept = sweep_values(&residuals, &knots);
        for (d, s) in direct.iter().zip(&swept) {
            assert!((d - s).abs() < 1e-12);
        }
    }
}
