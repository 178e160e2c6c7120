//! Case-study pipeline integration tests on the bundled datasets:
//! reported values, cleaning behavior, LOWESS-range movements, and
//! bit-identical regeneration.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use funres::casestudy::{bike_pipeline, wine_pipeline, BikeConfig, PipelineReport, WineConfig};

fn data_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn tmp(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("funres_cs_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// The wine pipeline is slow enough to share one run across tests.
fn wine_report() -> &'static PipelineReport {
    static REPORT: OnceLock<PipelineReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let out = tmp("wine_shared");
        wine_pipeline(
            &data_file("winequality-white.csv"),
            &WineConfig::default(),
            &out,
        )
        .unwrap()
    })
}

#[test]
fn wine_ingests_and_cleans_as_configured() {
    let rep = wine_report();
    assert_eq!(rep.n_ingested, 4898);
    assert_eq!(rep.outcome_offset, 3);
    // three rules, five distinct rows removed in total
    assert_eq!(rep.cleaning.len(), 3);
    let mut removed: Vec<usize> = rep
        .cleaning
        .iter()
        .flat_map(|c| c.removed_rows.iter().copied())
        .collect();
    removed.sort_unstable();
    removed.dedup();
    assert_eq!(removed.len(), 5, "removed rows: {removed:?}");
}

#[test]
fn wine_stage_aics_match_reported_values() {
    let rep = wine_report();
    let aic: Vec<f64> = rep.stages.iter().map(|s| s.aic.unwrap()).collect();
    // stage 2 and 3 carry the published values (widened by the
    // outlier-rule ambiguity tolerance); stage 3 minus stage 2 is the
    // quadratic improvement
    assert!((aic[1] - 10998.0).abs() < 25.0, "stage-2 AIC {}", aic[1]);
    assert!((aic[2] - 10813.0).abs() < 25.0, "stage-3 AIC {}", aic[2]);
    assert!(
        aic[2] - aic[1] < -100.0,
        "quadratic must improve AIC by > 100"
    );
    for s in &rep.stages {
        assert!(
            s.model["converged"].as_bool().unwrap(),
            "{} did not converge",
            s.name
        );
    }
}

#[test]
fn wine_quadratic_coefficient_matches_reported_scale() {
    let rep = wine_report();
    let params = rep.stages[2].model["parameters"].as_array().unwrap();
    let quad = params
        .iter()
        .find(|p| p["name"].as_str().unwrap() == "free.sulfur.dioxide^2")
        .expect("stage 3 carries the quadratic term");
    let est = quad["estimate"].as_f64().unwrap();
    let se = quad["std_error"].as_f64().unwrap();
    assert!((est - 0.0005).abs() < 0.0001, "quadratic coefficient {est}");
    // |z| > 3.29 is the two-sided 0.001 level
    assert!(
        est / se > 3.29,
        "quadratic term not significant: {est} / {se}"
    );
}

#[test]
fn wine_outlier_removal_moves_the_flagged_lowess_curves() {
    let rep = wine_report();
    let before = &rep.stages[0].lowess_ranges;
    let after = &rep.stages[1].lowess_ranges;
    // the three outlier-bearing covariates calm down sharply after the
    // removal stage
    for col in ["fixed.acidity", "residual.sugar", "density"] {
        assert!(
            after[col] < 0.5 * before[col],
            "{col}: range {} -> {} did not halve",
            before[col],
            after[col]
        );
    }
    // free.sulfur.dioxide keeps its extreme point: its range barely moves
    // at the removal stage, and its fix is the stage-3 quadratic
    let fsd_delta = (after["free.sulfur.dioxide"] - before["free.sulfur.dioxide"]).abs();
    assert!(
        fsd_delta < 0.1,
        "free.sulfur.dioxide moved {fsd_delta} at the removal stage"
    );
    let final_ranges = &rep.stages[2].lowess_ranges;
    assert!(
        final_ranges["free.sulfur.dioxide"] < 0.5 * after["free.sulfur.dioxide"],
        "quadratic did not flatten the trend: {} -> {}",
        after["free.sulfur.dioxide"],
        final_ranges["free.sulfur.dioxide"]
    );
    // the remaining covariates move only modestly (the removed rows have
    // global leverage, so small relative shifts are expected)
    for col in ["volatile.acidity", "alcohol", "sulphates", "pH"] {
        let rel = (after[col] - before[col]).abs() / before[col];
        assert!(rel < 0.25, "{col}: range moved {:.0}%", rel * 100.0);
    }
}

#[test]
fn wine_retained_rows_respect_the_sugar_cap() {
    // after cleaning, the largest residual.sugar among retained rows is
    // the documented second-highest value
    let rep = wine_report();
    let raw = std::fs::read_to_string(data_file("winequality-white.csv")).unwrap();
    let removed: Vec<usize> = rep
        .cleaning
        .iter()
        .flat_map(|c| c.removed_rows.iter().copied())
        .collect();
    let mut max_retained: f64 = 0.0;
    for (i, line) in raw.lines().skip(1).enumerate() {
        if removed.contains(&i) {
            continue;
        }
        let sugar: f64 = line.split(';').nth(3).unwrap().parse().unwrap();
        max_retained = max_retained.max(sugar);
    }
    assert!(
        max_retained <= 31.6,
        "max retained residual.sugar {max_retained}"
    );
}

#[test]
fn wine_report_artifacts_exist() {
    let rep = wine_report();
    let out = tmp("wine_shared");
    assert!(out.join("report.json").exists());
    assert!(out.join("index.html").exists());
    for s in &rep.stages {
        assert!(!s.artifacts.is_empty());
        for a in &s.artifacts {
            assert!(out.join(a).exists(), "missing artifact {a}");
        }
        // one heatmap SVG and CSV per predictor plus fnfn + residuals
        let svgs = s.artifacts.iter().filter(|a| a.ends_with(".svg")).count();
        assert_eq!(svgs, 9, "stage {} should emit 9 SVGs", s.name);
    }
}

#[test]
fn bike_pipeline_is_deterministic_and_decreasing() {
    // a reduced-bin config keeps the double run quick; determinism and
    // the stage ordering hold for any config
    let cfg = BikeConfig {
        heatmap_bins: 30,
        ..Default::default()
    };
    let out1 = tmp("bike1");
    let out2 = tmp("bike2");
    let rep1 = bike_pipeline(&data_file("bike2012.csv"), &cfg, &out1).unwrap();
    let rep2 = bike_pipeline(&data_file("bike2012.csv"), &cfg, &out2).unwrap();
    assert_eq!(rep1.stages.len(), rep2.stages.len());
    assert_eq!(rep1.n_ingested, 8734);

    // reports byte-identical
    let j1 = std::fs::read(out1.join("report.json")).unwrap();
    let j2 = std::fs::read(out2.join("report.json")).unwrap();
    assert_eq!(j1, j2, "report.json differs between runs");
    // spot-check an SVG artifact byte-identically
    let svg1 = std::fs::read(out1.join("stage2-spline-poisson/heat_hour.svg")).unwrap();
    let svg2 = std::fs::read(out2.join("stage2-spline-poisson/heat_hour.svg")).unwrap();
    assert_eq!(svg1, svg2, "heatmap SVG differs between runs");

    let sups: Vec<f64> = rep1.stages.iter().map(|s| s.fnfn_sup_dev).collect();
    assert!(
        sups[0] > sups[1] && sups[1] > sups[2],
        "sup_dev not decreasing: {sups:?}"
    );
    assert!(rep1.stages[2].dispersion.unwrap() > 20.0);
    std::fs::remove_dir_all(&out1).ok();
    std::fs::remove_dir_all(&out2).ok();
}

#[test]
fn residual_export_csv_roundtrip() {
    use funres::core::dataset::Dataset;
    use funres::core::terms::TermSet;
    use funres::models::{fit, ModelSpec};
    use funres::residuals::residuals_for;

    let spec = funres::simulation::scenario("poisson-correct").unwrap();
    let data = spec.generate(200, &mut spec.stream(3)).unwrap();
    let model = fit(
        &ModelSpec::poisson(TermSet::parse("x + x^2").unwrap()),
        &data,
    )
    .unwrap();
    let set = residuals_for(&model, &data).unwrap();
    let path = std::env::temp_dir().join(format!("funres_resid_{}.csv", std::process::id()));
    funres::residuals::export_csv(&path, &set.residuals, data.y()).unwrap();

    let body = std::fs::read_to_string(&path).unwrap();
    let mut lines = body.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,y,lo,hi,z_lo,z_hi,point_uniform,point_normal,sign_residual"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), set.residuals.len());
    // first row reproduces the first residual's fields
    let fields: Vec<&str> = rows[0].split(',').collect();
    let r = &set.residuals[0];
    assert_eq!(fields[0], r.index.to_string());
    assert_eq!(fields[1], data.y()[r.index].to_string());
    assert!((fields[2].parse::<f64>().unwrap() - r.lo).abs() < 1e-15);
    assert!((fields[8].parse::<f64>().unwrap() - r.sign_residual()).abs() < 1e-15);
    // reconstructed dataset matches when reloaded
    let _ = Dataset::from_csv(&path, "index").unwrap();
    std::fs::remove_file(&path).ok();
}
