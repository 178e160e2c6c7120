//! End-to-end checks of the `funres` binary: simulate -> fit -> plot.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_funres"))
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("funres_cli_{}_{name}", std::process::id()))
}

#[test]
fn simulate_fit_plot_roundtrip() {
    let csv = tmp("sim.csv");
    let out = bin()
        .args([
            "simulate",
            "--scenario",
            "ordinal-correct",
            "--n",
            "400",
            "--seed",
            "5",
        ])
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "simulate failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(csv.exists());

    let out = bin()
        .args(["fit", "--outcome", "y", "--family", "adjacent-category"])
        .args(["--terms", "x + x^2", "--categories", "4"])
        .arg("--data")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "fit failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["family"], "adjacent-category-logit");
    assert!(summary["converged"].as_bool().unwrap());
    assert_eq!(summary["parameters"].as_array().unwrap().len(), 6);

    let svg = tmp("fnfn.svg");
    let out = bin()
        .args([
            "plot",
            "fnfn",
            "--outcome",
            "y",
            "--family",
            "adjacent-category",
        ])
        .args(["--terms", "x + x^2", "--categories", "4"])
        .arg("--data")
        .arg(&csv)
        .arg("--out")
        .arg(&svg)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "plot failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(svg.exists());
    assert!(svg.with_extension("csv").exists());

    let heat = tmp("heat.svg");
    let out = bin()
        .args([
            "plot",
            "heatmap",
            "--outcome",
            "y",
            "--family",
            "adjacent-category",
        ])
        .args([
            "--terms",
            "x + x^2",
            "--categories",
            "4",
            "--covariate",
            "x",
            "--bins",
            "40",
        ])
        .arg("--data")
        .arg(&csv)
        .arg("--out")
        .arg(&heat)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "heatmap failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let body = std::fs::read_to_string(&heat).unwrap();
    assert!(body.starts_with("<svg"));

    for p in [
        &csv,
        &svg,
        &svg.with_extension("csv"),
        &heat,
        &heat.with_extension("csv"),
    ] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn residuals_subcommand_writes_csv() {
    let csv = tmp("res_in.csv");
    bin()
        .args([
            "simulate",
            "--scenario",
            "poisson-correct",
            "--n",
            "150",
            "--seed",
            "2",
        ])
        .arg("--out")
        .arg(&csv)
        .status()
        .unwrap();
    let res = tmp("res_out.csv");
    let out = bin()
        .args([
            "residuals",
            "--outcome",
            "y",
            "--family",
            "poisson",
            "--terms",
            "x + x^2",
        ])
        .arg("--data")
        .arg(&csv)
        .arg("--out")
        .arg(&res)
        .output()
        .unwrap();
    assert!(out.status.success());
    let body = std::fs::read_to_string(&res).unwrap();
    assert!(body.starts_with("index,y,lo,hi"));
    assert_eq!(body.lines().count(), 151);
    std::fs::remove_file(&csv).ok();
    std::fs::remove_file(&res).ok();
}

#[test]
fn bad_arguments_fail_loudly() {
    // unknown scenario
    let out = bin()
        .args(["simulate", "--scenario", "nope", "--out", "/tmp/never.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));

    // ordinal family without --categories
    let csv = tmp("bad.csv");
    bin()
        .args([
            "simulate",
            "--scenario",
            "ordinal-correct",
            "--n",
            "50",
            "--seed",
            "1",
        ])
        .arg("--out")
        .arg(&csv)
        .status()
        .unwrap();
    let out = bin()
        .args([
            "fit",
            "--outcome",
            "y",
            "--family",
            "adjacent-category",
            "--terms",
            "x",
        ])
        .arg("--data")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(!out.status.success());
    std::fs::remove_file(&csv).ok();
}
