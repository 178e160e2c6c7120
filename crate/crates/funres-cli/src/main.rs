//! `funres`: fit discrete-outcome regressions, compute functional
//! residuals, and emit heatmap / Fn-Fn diagnostics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use funres::casestudy::{bike_pipeline, wine_pipeline, BikeConfig, WineConfig};
use funres::core::dataset::Dataset;
use funres::core::rng::RngStream;
use funres::core::terms::TermSet;
use funres::diagnostics::{fnfn, heatmap, lowess, subgroup_fnfn, svg};
use funres::models::{fit, FittedModel, LinkKind, ModelSpec};
use funres::residuals::{residuals_for, ResidualScale};
use funres::simulation::{scenario, scenarios, verify};

#[derive(Parser)]
#[command(
    name = "funres",
    about = "Discrete-regression diagnostics with functional residuals",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and print its summary as JSON.
    Fit(FitArgs),
    /// Fit a model and export per-row residuals as CSV.
    Residuals(ResidualArgs),
    /// Render diagnostic plots (SVG) with underlying CSV exports.
    Plot(PlotArgs),
    /// Generate a registered simulation scenario as CSV.
    Simulate(SimulateArgs),
    /// Run the Monte Carlo verification battery; exit nonzero on failure.
    Verify(VerifyArgs),
    /// Run a bundled case-study pipeline end to end.
    Casestudy(CasestudyArgs),
    /// List the registered simulation scenarios.
    Scenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    BinaryLogit,
    CumulativeLogit,
    CumulativeProbit,
    CumulativeCloglog,
    AdjacentCategory,
    Poisson,
    QuasiPoisson,
    HurdlePoisson,
}

#[derive(Args)]
struct ModelArgs {
    /// Input CSV (header row; comma or semicolon delimited).
    #[arg(long)]
    data: PathBuf,
    /// Outcome column name.
    #[arg(long)]
    outcome: String,
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Covariate terms, e.g. "x1 + x2^2 + a:b + spline(h,3,7)".
    #[arg(long)]
    terms: String,
    /// Maximum category J for ordinal families (outcomes on 0..=J).
    #[arg(long)]
    categories: Option<u32>,
    /// Zero-part terms for the hurdle family.
    #[arg(long)]
    zero_terms: Option<String>,
}

impl ModelArgs {
    fn load(&self) -> funres::Result<(Dataset, FittedModel)> {
        let data = Dataset::from_csv(&self.data, &self.outcome)?;
        let terms = TermSet::parse(&self.terms)?;
        let spec = match self.family {
            FamilyArg::BinaryLogit => ModelSpec::binary_logit(terms),
            FamilyArg::CumulativeLogit => {
                ModelSpec::cumulative_link(LinkKind::Logit, terms, self.need_j()?)
            }
            FamilyArg::CumulativeProbit => {
                ModelSpec::cumulative_link(LinkKind::Probit, terms, self.need_j()?)
            }
            FamilyArg::CumulativeCloglog => {
                ModelSpec::cumulative_link(LinkKind::Cloglog, terms, self.need_j()?)
            }
            FamilyArg::AdjacentCategory => ModelSpec::adjacent_category(terms, self.need_j()?),
            FamilyArg::Poisson => ModelSpec::poisson(terms),
            FamilyArg::QuasiPoisson => ModelSpec::quasi_poisson(terms),
            FamilyArg::HurdlePoisson => {
                let zt = self.zero_terms.as_deref().ok_or_else(|| {
                    funres::Error::InvalidSpec("hurdle-poisson needs --zero-terms".into())
                })?;
                ModelSpec::hurdle_poisson(TermSet::parse(zt)?, terms)
            }
        };
        let model = fit(&spec, &data)?;
        Ok((data, model))
    }

    fn need_j(&self) -> funres::Result<u32> {
        self.categories.ok_or_else(|| {
            funres::Error::InvalidSpec("ordinal families need --categories J".into())
        })
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ResidualArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[command(subcommand)]
    kind: PlotKind,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Uniform,
    Normal,
}

impl From<ScaleArg> for ResidualScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Uniform => ResidualScale::Uniform,
            ScaleArg::Normal => ResidualScale::Normal,
        }
    }
}

#[derive(Subcommand)]
enum PlotKind {
    /// Residual-vs-covariate heatmap with a LOWESS overlay.
    Heatmap(HeatmapArgs),
    /// Averaged-residual Fn-Fn curve against the diagonal.
    Fnfn(FnfnArgs),
}

#[derive(Args)]
struct HeatmapArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Covariate to cast the residual densities against.
    #[arg(long)]
    covariate: String,
    #[arg(long, value_enum, default_value_t = ScaleArg::Normal)]
    scale: ScaleArg,
    /// Bins per axis.
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// LOWESS span fraction.
    #[arg(long, default_value_t = funres::diagnostics::TREND_SPAN)]
    span: f64,
    /// LOWESS robustness iterations (defaults to 0 for expectation
    /// points, 3 with --random-points).
    #[arg(long)]
    iters: Option<usize>,
    /// Smooth one random draw per residual instead of its expectation.
    #[arg(long)]
    random_points: bool,
    /// Seed for --random-points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Underlying grid CSV (defaults to the SVG path with .csv).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct FnfnArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Optional subgroup filter `column<value` / `column>value`.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario name (see `funres scenarios`).
    #[arg(long)]
    scenario: String,
    /// Override the scenario's committed sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Override the scenario's committed seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (outcome column `y`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2026)]
    seed: u64,
    /// Write the JSON report here as well as stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CasestudyArgs {
    /// Which pipeline: `wine` or `bike`.
    which: String,
    /// Input CSV path.
    #[arg(long)]
    data: PathBuf,
    /// Optional JSON config; defaults to the committed pipeline config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the report and artifacts.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> funres::Result<ExitCode> {
    match cli.command {
        Command::Fit(args) => {
            let (_, model) = args.model.load()?;
            let json = serde_json::to_string_pretty(&model.summary())?;
            match &args.out {
                Some(p) => std::fs::write(p, json)?,
                None => println!("{json}"),
            }
        }
        Command::Residuals(args) => {
            let (data, model) = args.model.load()?;
            let set = residuals_for(&model, &data)?;
            funres::residuals::export_csv(&args.out, &set.residuals, data.y())?;
            if !set.skipped.is_empty() {
                eprintln!(
                    "warning: {} rows had numerically degenerate intervals and were skipped",
                    set.skipped.len()
                );
            }
            println!(
                "wrote {} residuals to {}",
                set.residuals.len(),
                args.out.display()
            );
        }
        Command::Plot(plot) => match plot.kind {
            PlotKind::Heatmap(args) => {
                let (data, model) = args.model.load()?;
                let set = residuals_for(&model, &data)?;
                let scale: ResidualScale = args.scale.into();
                let x = data.column(&args.covariate)?;
                let grid = heatmap(&set.residuals, x, scale, args.bins, args.bins)?;
                let xs: Vec<f64> = set.residuals.iter().map(|r| x[r.index]).collect();
                let vs: Vec<f64> = if args.random_points {
                    let mut rng = RngStream::new(args.seed, 9100);
                    set.residuals
                        .iter()
                        .map(|r| match scale {
                            ResidualScale::Uniform => rng.uniform_in(r.lo, r.hi),
                            ResidualScale::Normal => {
                                let u = rng.uniform_in(r.lo, r.hi).clamp(1e-10, 1.0 - 1e-10);
                                funres::core::normal::std_normal_quantile(u).unwrap()
                            }
                        })
                        .collect()
                } else {
                    set.residuals
                        .iter()
                        .map(|r| r.point_summary(scale))
                        .collect()
                };
                let iters = args.iters.unwrap_or(if args.random_points {
                    funres::diagnostics::DRAW_TREND_ITERS
                } else {
                    funres::diagnostics::TREND_ITERS
                });
                let fit_line = lowess(&xs, &vs, args.span, iters)?;
                svg::render_heatmap(
                    &grid,
                    Some(&fit_line),
                    &format!("functional residuals vs {}", args.covariate),
                    &args.covariate,
                    &args.out,
                )?;
                let csv = args.csv.unwrap_or_else(|| args.out.with_extension("csv"));
                grid.export_csv(&csv)?;
                println!("wrote {} and {}", args.out.display(), csv.display());
            }
            PlotKind::Fnfn(args) => {
                let (data, model) = args.model.load()?;
                let set = residuals_for(&model, &data)?;
                let curve = match &args.filter {
                    None => fnfn(&set.residuals)?,
                    Some(expr) => {
                        let (col, op, value) = parse_filter(expr)?;
                        let xs = data.column(&col)?.to_vec();
                        subgroup_fnfn(
                            &set.residuals,
                            |r| {
                                if op == '<' {
                                    xs[r.index] < value
                                } else {
                                    xs[r.index] > value
                                }
                            },
                            expr,
                        )?
                    }
                };
                svg::render_fnfn(&curve, "averaged functional residual", &args.out)?;
                let csv = args.csv.unwrap_or_else(|| args.out.with_extension("csv"));
                curve.export_csv(&csv)?;
                println!(
                    "n = {}, sup deviation = {:.5}; wrote {} and {}",
                    curve.n,
                    curve.sup_dev,
                    args.out.display(),
                    csv.display()
                );
            }
        },
        Command::Simulate(args) => {
            let mut spec = scenario(&args.scenario)?;
            if let Some(n) = args.n {
                spec.n = n;
            }
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            let data = spec.generate(spec.n, &mut spec.stream(spec.seed))?;
            data.to_csv(&args.out, "y")?;
            println!(
                "wrote {} rows of `{}` (seed {}) to {}",
                data.n(),
                spec.name,
                spec.seed,
                args.out.display()
            );
        }
        Command::Verify(args) => {
            let report = verify::run_verification(args.seed)?;
            let json = serde_json::to_string_pretty(&report)?;
            if let Some(p) = &args.out {
                std::fs::write(p, &json)?;
            }
            println!("{json}");
            if !report.all_pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Casestudy(args) => {
            let report = match args.which.as_str() {
                "wine" => {
                    let config: WineConfig = match &args.config {
                        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                        None => WineConfig::default(),
                    };
                    wine_pipeline(&args.data, &config, &args.out)?
                }
                "bike" => {
                    let config: BikeConfig = match &args.config {
                        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                        None => BikeConfig::default(),
                    };
                    bike_pipeline(&args.data, &config, &args.out)?
                }
                other => {
                    return Err(funres::Error::Pipeline(format!(
                        "unknown case study `{other}` (expected wine or bike)"
                    )))
                }
            };
            for s in &report.stages {
                println!(
                    "{}: aic={} dispersion={} fnfn_sup_dev={:.4}",
                    s.name,
                    s.aic.map_or("-".into(), |a| format!("{a:.1}")),
                    s.dispersion.map_or("-".into(), |d| format!("{d:.3}")),
                    s.fnfn_sup_dev
                );
            }
            println!(
                "report written to {}",
                args.out.join("report.json").display()
            );
        }
        Command::Scenarios => {
            for s in scenarios() {
                println!(
                    "{:<22} n={:<6} seed={:<4} {}",
                    s.name, s.n, s.seed, s.description
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_filter(expr: &str) -> funres::Result<(String, char, f64)> {
    for op in ['<', '>'] {
        if let Some((col, val)) = expr.split_once(op) {
            let value: f64 = val
                .trim()
                .parse()
                .map_err(|_| funres::Error::InvalidData(format!("bad filter value in `{expr}`")))?;
            return Ok((col.trim().to_string(), op, value));
        }
    }
    Err(funres::Error::InvalidData(format!(
        "filter `{expr}` must look like column<value or column>value"
    )))
}
