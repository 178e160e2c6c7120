//! Diagnostic-construction integration tests: the conditional-mean
//! envelope, heatmap column behavior under a correct fit, the binned
//! detectability factor, and subgroup curves.

use funres::core::rng::RngStream;
use funres::diagnostics::{fnfn, heatmap, subgroup_fnfn};
use funres::models::fit;
use funres::residuals::{residuals_for, FunctionalResidual, ResidualScale};
use funres::simulation::{scenario, scenarios, worked_example_logistic, Axis};

/// Per-t envelope of the conditional-mean identity: with Y simulated from
/// the true model at fixed x, the Monte Carlo average of eval(res, t)
/// stays within 4 sqrt(t (1 - t) / N) of t across a 99-point grid.
#[test]
fn conditional_mean_per_t_envelope() {
    let n_reps = 100_000usize;
    let cases: Vec<(funres::simulation::TrueModel, f64, u64)> = vec![
        (worked_example_logistic(), 1.0, 41),
        (worked_example_logistic(), -1.0, 42),
        (scenario("ordinal-correct").unwrap().truth, 0.0, 43),
    ];
    for (truth, x, stream) in cases {
        let mut rng = RngStream::new(7321, stream);
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..n_reps {
            *counts
                .entry(truth.sample(&[x], &mut rng).unwrap())
                .or_insert(0u64) += 1;
        }
        let cells: Vec<(f64, f64, f64)> = counts
            .iter()
            .map(|(&y, &c)| {
                (
                    truth.cumulative(y as i64 - 1, &[x]),
                    truth.cumulative(y as i64, &[x]),
                    c as f64 / n_reps as f64,
                )
            })
            .collect();
        for k in 1..=99 {
            let t = k as f64 / 100.0;
            let mut mean = 0.0;
            for &(lo, hi, f) in &cells {
                let e = if hi > lo {
                    ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                mean += f * e;
            }
            let bound = 4.0 * (t * (1.0 - t) / n_reps as f64).sqrt();
            assert!(
                (mean - t).abs() < bound,
                "x={x} t={t}: mean {mean} vs bound {bound}"
            );
        }
    }
}

/// Correct-model heatmap columns stay centered: every >= 30-observation
/// column's mean point summary sits inside its own 4-sigma sampling
/// envelope, and the overall mean sits within 0.1 of zero (the point
/// summaries have near-unit spread, so 0.1 is the 4-sigma aggregate
/// bound at n = 1000).
#[test]
fn heatmap_columns_center_under_correct_model() {
    let spec = scenario("ordinal-correct").unwrap();
    let data = spec.generate_default().unwrap();
    let model = fit(&spec.correct, &data).unwrap();
    let set = residuals_for(&model, &data).unwrap();
    let x = data.column("x").unwrap();

    // reuse the heatmap's own binning to group observations
    let grid = heatmap(&set.residuals, x, ResidualScale::Normal, 20, 100).unwrap();
    let xmin = grid.x_edges[0];
    let xmax = *grid.x_edges.last().unwrap();
    let nx = grid.x_bins();
    let mut sums = vec![0.0; nx];
    let mut counts = vec![0usize; nx];
    let mut total = 0.0;
    for r in &set.residuals {
        let xi = x[r.index];
        let col = (((xi - xmin) / (xmax - xmin) * nx as f64) as usize).min(nx - 1);
        let v = r.point_summary(ResidualScale::Normal);
        sums[col] += v;
        counts[col] += 1;
        total += v;
    }
    // Under the fitted model the conditional mean of the point summary
    // is exactly zero (the category intervals telescope over (0,1)), and
    // its conditional variance is computable by enumerating categories;
    // that yields a valid envelope even in near-degenerate tail bins
    // where the sample variance misses rare categories.
    let mut var_by_col = vec![0.0; nx];
    for r in &set.residuals {
        let xrow = [x[r.index]];
        let col = (((xrow[0] - xmin) / (xmax - xmin) * nx as f64) as usize).min(nx - 1);
        let probs = model.category_probs(&xrow).unwrap();
        let mut second = 0.0;
        let mut lo = 0.0;
        for (y, &p) in probs.iter().enumerate() {
            let hi = model.cumulative_prob(y as i64, &xrow).unwrap();
            if hi - lo > 1e-14 && p > 0.0 {
                let zl = funres::core::normal::std_normal_quantile(lo.max(1e-10)).unwrap();
                let zh = funres::core::normal::std_normal_quantile(hi.min(1.0 - 1e-10)).unwrap();
                let ps = (funres::core::normal::std_normal_pdf(zl)
                    - funres::core::normal::std_normal_pdf(zh))
                    / (hi - lo);
                second += p * ps * ps;
            }
            lo = hi;
        }
        var_by_col[col] += second;
    }
    let mut checked = 0;
    for i in 0..nx {
        if counts[i] >= 30 {
            let n = counts[i] as f64;
            let mean = sums[i] / n;
            let envelope = 4.0 * var_by_col[i].sqrt() / n;
            assert!(
                mean.abs() < envelope,
                "column {i} ({} obs): mean {mean} outside envelope {envelope}",
                counts[i]
            );
            checked += 1;
        }
    }
    assert!(checked >= 5, "only {checked} columns had 30+ observations");
    let global = total / set.residuals.len() as f64;
    assert!(global.abs() < 0.1, "global mean point summary {global}");
}

/// Binned detectability: under the dropped-quadratic working model the
/// worst per-column mean point summary is at least 3x the correct
/// model's, for both the ordinal and Poisson designs.
#[test]
fn binned_mean_detectability_factor() {
    for name in ["ordinal-quadratic", "poisson-quadratic"] {
        let spec = scenario(name).unwrap();
        let data = spec.generate_default().unwrap();
        let x = data.column("x").unwrap();
        let binned_sup = |spec_model: &funres::models::ModelSpec| -> f64 {
            let model = fit(spec_model, &data).unwrap();
            let set = residuals_for(&model, &data).unwrap();
            let nx = 20;
            let xmin = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let xmax = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sums = vec![0.0; nx];
            let mut counts = vec![0usize; nx];
            for r in &set.residuals {
                let col = (((x[r.index] - xmin) / (xmax - xmin) * nx as f64) as usize).min(nx - 1);
                sums[col] += r.point_summary(ResidualScale::Normal);
                counts[col] += 1;
            }
            (0..nx)
                .filter(|&i| counts[i] >= 30)
                .map(|i| (sums[i] / counts[i] as f64).abs())
                .fold(0.0, f64::max)
        };
        let bad = binned_sup(&spec.working);
        let good = binned_sup(&spec.correct);
        assert!(
            bad >= 3.0 * good,
            "{name}: binned sup {bad} vs correct {good} (need 3x)"
        );
    }
}

/// The x < 0 subgroup of the correct ordinal fit still tracks the
/// diagonal.
#[test]
fn subgroup_below_zero_tracks_diagonal() {
    let spec = scenario("ordinal-correct").unwrap();
    let data = spec.generate_default().unwrap();
    let model = fit(&spec.correct, &data).unwrap();
    let set = residuals_for(&model, &data).unwrap();
    let x = data.column("x").unwrap().to_vec();
    let curve = subgroup_fnfn(&set.residuals, |r| x[r.index] < 0.0, "x < 0").unwrap();
    assert!(curve.n > 400 && curve.n < 600, "subgroup size {}", curve.n);
    assert!(curve.sup_dev < 0.05, "subgroup sup_dev {}", curve.sup_dev);
    assert_eq!(curve.subgroup.as_deref(), Some("x < 0"));
}

/// Single-observation geometry: the sup deviation of one interval's
/// curve is max(lo, 1 - hi).
#[test]
fn single_observation_sup_dev_geometry() {
    let mut rng = RngStream::new(4, 4);
    for _ in 0..50 {
        let lo = rng.uniform() * 0.9;
        let hi = lo + 0.05 + rng.uniform() * (1.0 - lo - 0.05);
        let r = FunctionalResidual::new(lo, hi.min(1.0), 0).unwrap();
        let curve = fnfn(&[r]).unwrap();
        let expect = lo.max(1.0 - hi.min(1.0));
        assert!(
            (curve.sup_dev - expect).abs() < 1e-12,
            "({lo}, {hi}): {} vs {expect}",
            curve.sup_dev
        );
    }
}

/// Every scenario's correctly specified fit stays below its committed
/// null sup-deviation threshold at the committed seed.
#[test]
fn scenario_null_thresholds_hold() {
    for spec in scenarios() {
        let data = spec.generate_default().unwrap();
        let model = fit(&spec.correct, &data).unwrap();
        let set = residuals_for(&model, &data).unwrap();
        let sup = fnfn(&set.residuals).unwrap().sup_dev;
        assert!(
            sup < spec.null_sup_dev,
            "{}: sup_dev {sup} >= committed null threshold {}",
            spec.name,
            spec.null_sup_dev
        );
    }
}

/// The trigger-axis values come back aligned with the residual indices.
#[test]
fn axis_product_values() {
    let spec = scenario("ordinal-interaction").unwrap();
    let data = spec.generate_default().unwrap();
    let vals = Axis::Product("x1", "x2").values(&data).unwrap();
    let x1 = data.column("x1").unwrap();
    let x2 = data.column("x2").unwrap();
    for i in 0..data.n() {
        assert_eq!(vals[i], x1[i] * x2[i]);
    }
    assert!(Axis::Column("nope").values(&data).is_err());
}

/// Misspecification bias floor: the dropped-quadratic working model's
/// Fn-Fn deviation does not vanish as n grows to 1e4.
#[test]
fn misspecified_sup_dev_has_a_bias_floor() {
    let spec = scenario("ordinal-quadratic").unwrap();
    let data = spec.generate(10_000, &mut spec.stream(19)).unwrap();
    let model = fit(&spec.working, &data).unwrap();
    let set = residuals_for(&model, &data).unwrap();
    let sup = fnfn(&set.residuals).unwrap().sup_dev;
    assert!(
        sup > 0.02,
        "misspecified sup_dev {sup} collapsed below the bias floor"
    );
}

/// Surrogate equivalence holds for every latent link, including cloglog
/// (the acceptance gate pins logit and probit; this extends the check).
#[test]
fn surrogate_equivalence_all_links() {
    use funres::models::LinkKind;
    use funres::simulation::verify::surrogate_equivalence_ks;
    for (k, link) in [LinkKind::Logit, LinkKind::Probit, LinkKind::Cloglog]
        .into_iter()
        .enumerate()
    {
        let mut rng = RngStream::new(6100, k as u64);
        let d = surrogate_equivalence_ks(link, 0.15, 0.8, 100_000, &mut rng);
        assert!(d < 0.015, "{:?}: KS {d}", link.name());
    }
}

/// At n = 1e4 the correctly specified ordinal fit's median sup deviation
/// sits below 0.012.
#[test]
fn convergence_median_at_ten_thousand() {
    use funres::simulation::verify::verify_convergence_rate;
    let spec = scenario("ordinal-correct").unwrap();
    let seeds: Vec<u64> = (100..120).collect();
    let rep = verify_convergence_rate(&spec, &[10_000], &seeds).unwrap();
    assert!(
        rep.rows[0].median_sup_dev < 0.012,
        "median sup_dev at n=1e4: {}",
        rep.rows[0].median_sup_dev
    );
}
