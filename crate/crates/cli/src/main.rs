//! `ocp`: experiment runner for online conformal prediction benchmarks.
//!
//! Verbs:
//! - `run`: a single experiment from flags or a JSON config file.
//! - `grid`: a list of experiments from a JSON array, with combined tables.
//! - `suite`: synthetic guarantee suites (`pid-coverage`, `integral-bound`, `eci-coverage`).
//! - `validate-params`: check a relevance-function parameterization.
//!
//! Exit code is nonzero iff any hard error occurs or a suite assertion
//! fails.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ocp_core::eval::RunReport;
use ocp_core::relevance::{eval_f, grad_f, RelevanceParams};
use ocp_core::runner::{
    report_table, run_experiment, run_grid, run_synthetic_suite, suite_report_json,
    write_suite_report, RunConfig,
};
use ocp_core::series::DatasetManifest;

#[derive(Parser)]
#[command(
    name = "ocp",
    version,
    about = "Online conformal prediction benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment and emit trace.csv / report.json / table.txt.
    Run(RunArgs),
    /// Run a list of experiments from a JSON config array.
    Grid(GridArgs),
    /// Run a synthetic guarantee suite.
    Suite(SuiteArgs),
    /// Validate a relevance-function parameterization.
    ValidateParams(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Dataset manifest JSON (name -> {path, value_column, date_column}).
    #[arg(long, default_value = "data/manifest.json")]
    manifest: PathBuf,
    /// JSON file with a full RunConfig; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    /// ar | theta
    #[arg(long)]
    regressor: Option<String>,
    /// aci | ogd | pid | pid-full | pid-half | pid-half-bis | eci | eci-mod
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    train_window: Option<usize>,
    #[arg(long)]
    t_w: Option<usize>,
    /// Comma-separated relevance weights, e.g. "0.3,0.7".
    #[arg(long)]
    omega: Option<String>,
    /// Comma-separated relevance slopes, e.g. "1,10".
    #[arg(long)]
    v: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k_i: Option<f64>,
    #[arg(long)]
    c_sat: Option<f64>,
    #[arg(long)]
    output_cap: Option<f64>,
    #[arg(long)]
    mu_floor: Option<f64>,
    #[arg(long)]
    ogd_decay: bool,
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value = "data/manifest.json")]
    manifest: PathBuf,
    /// JSON array of RunConfig objects.
    #[arg(long)]
    configs: PathBuf,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    /// pid-coverage | integral-bound | eci-coverage
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Comma-separated weights.
    #[arg(long)]
    omega: String,
    /// Comma-separated slopes.
    #[arg(long)]
    v: String,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

fn parse_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("cannot parse {s:?} as a number"))
        })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config: RunConfig = match &args.config {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(dataset) = args.dataset {
        config.dataset = dataset;
    }
    if let Some(regressor) = args.regressor {
        config.regressor = regressor;
    }
    if let Some(method) = args.method {
        config.method = method;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(eta) = args.eta {
        config.eta = eta;
    }
    if let Some(q0) = args.q0 {
        config.q0 = q0;
    }
    if let Some(w) = args.train_window {
        config.train_window = w;
    }
    if let Some(t_w) = args.t_w {
        config.t_w = t_w;
    }
    if let Some(omega) = &args.omega {
        config.omega = Some(parse_list(omega)?);
    }
    if let Some(v) = &args.v {
        config.v = Some(parse_list(v)?);
    }
    if let Some(gamma) = args.gamma {
        config.gamma = gamma;
    }
    if let Some(lambda) = args.lambda {
        config.lambda = lambda;
    }
    if args.k_i.is_some() {
        config.k_i = args.k_i;
    }
    if args.c_sat.is_some() {
        config.c_sat = args.c_sat;
    }
    if args.output_cap.is_some() {
        config.output_cap = args.output_cap;
    }
    if args.mu_floor.is_some() {
        config.mu_floor = args.mu_floor;
    }
    if args.ogd_decay {
        config.ogd_decay = true;
    }
    if args.label.is_some() {
        config.label = args.label;
    }
    config.output_dir = Some(args.output_dir.clone());
    if config.dataset.is_empty() {
        bail!("--dataset (or a config file naming one) is required");
    }

    let manifest = DatasetManifest::load(&args.manifest)?;
    let outcome = run_experiment(&config, &manifest)?;
    print_report(&outcome.report);
    println!(
        "artifacts: {}",
        args.output_dir.join(config.run_id()).display()
    );
    Ok(())
}

fn print_report(report: &RunReport) {
    println!(
        "{} / {} / {}: coverage {:.4}, avg width {:.4}, median width {:.4} over {} steps",
        report.dataset,
        report.regressor,
        report.method,
        report.coverage,
        report.avg_width,
        report.median_width,
        report.n_steps
    );
    for check in &report.bound_checks {
        println!(
            "  check {}: {} (margin {:.6})",
            check.name,
            if check.held { "held" } else { "violated" },
            check.margin
        );
    }
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let raw = std::fs::read_to_string(&args.configs)
        .with_context(|| format!("reading {}", args.configs.display()))?;
    let configs: Vec<RunConfig> = serde_json::from_str(&raw)
        .with_context(|| format!("parsing {}", args.configs.display()))?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let items = run_grid(&configs, &manifest, Some(&args.output_dir))?;

    let mut failures = 0usize;
    let mut by_dataset: std::collections::BTreeMap<&str, Vec<&RunReport>> =
        std::collections::BTreeMap::new();
    for item in &items {
        match &item.outcome {
            Ok(outcome) => by_dataset
                .entry(outcome.report.dataset.as_str())
                .or_default()
                .push(&outcome.report),
            Err(err) => {
                failures += 1;
                eprintln!("run {} failed: {err}", item.run_id);
            }
        }
    }
    for (dataset, reports) in &by_dataset {
        println!("dataset: {dataset}");
        print!("{}", report_table(reports));
    }
    println!(
        "{} runs, {} failed; tables under {}",
        items.len(),
        failures,
        args.output_dir.display()
    );
    if failures > 0 {
        bail!("{failures} grid runs failed");
    }
    Ok(())
}

fn cmd_suite(args: SuiteArgs) -> Result<()> {
    let report = run_synthetic_suite(&args.name, args.seed)?;
    for check in &report.checks {
        println!(
            "check {}: {} (margin {:.6})",
            check.name,
            if check.held { "held" } else { "violated" },
            check.margin
        );
    }
    for (name, value) in &report.metrics {
        println!("metric {name}: {value:.6}");
    }
    match &args.output_dir {
        Some(dir) => {
            let path = write_suite_report(dir, &report)?;
            println!("report: {}", path.display());
        }
        None => print!("{}", suite_report_json(&report)?),
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let omega = parse_list(&args.omega)?;
    let v = parse_list(&args.v)?;
    let params = RelevanceParams::new(omega, v, args.alpha)?;
    let f0 = eval_f(&params, 1.0, 0.0);
    println!("valid relevance parameters");
    println!("f(0) = {f0} (target alpha = {})", params.alpha);
    println!("gradient at 0 (mu = 1): {}", grad_f(&params, 1.0, 0.0));
    println!("gradient bound (mu = 1): {}", params.gradient_bound(1.0));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Suite(args) => cmd_suite(args),
        Command::ValidateParams(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
