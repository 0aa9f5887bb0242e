//! Experiment runner: configuration, the online loop, grids, and synthetic
//! guarantee suites.
//!
//! One run follows the protocol: refit the regressor on the sliding
//! training window, forecast, publish the interval built from the current
//! raw threshold, reveal the truth, compute score/gap/miss, evaluate the
//! relevance function when the method uses one, update the threshold, and
//! record the step. Ground truth at the forecast index is never touched
//! before the interval is finalized.
//!
//! Identical configuration plus identical dataset bytes yield byte-identical
//! trace and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::{build_interval, evaluate_step, StepRecord};
use crate::eval::{
    check_dominance_hypothesis, check_induction_bound, summarize, BoundCheckReport, EvalError,
    RunReport,
};
use crate::forecast::{ArParams, ForecastError, Forecaster, ThetaParams};
use crate::relevance::{eval_f, grad_f, RelevanceError, RelevanceParams};
use crate::series::{DatasetManifest, SeriesError, UnivariateSeries};
use crate::update::{
    saturation, saturation_envelope, AciUpdater, EciUpdater, EtaSchedule, OgdUpdater, PidMode,
    PidUpdater, SaturationConfig, ThresholdUpdater,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Relevance(#[from] RelevanceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown method {0:?} (expected aci, ogd, pid, pid-full, pid-half, pid-half-bis, eci, eci-mod)")]
    UnknownMethod(String),
    #[error("unknown regressor {0:?} (expected ar, theta)")]
    UnknownRegressor(String),
    #[error("method {method} requires relevance parameters omega and v")]
    MissingRelevanceParams { method: String },
    #[error("unknown suite {0:?} (expected pid-coverage, integral-bound, eci-coverage)")]
    UnknownSuite(String),
    #[error("suite assertion failed: {check} at step {step}")]
    AssertionFailed { check: String, step: usize },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
}

fn default_alpha() -> f64 {
    0.1
}
fn default_eta() -> f64 {
    0.005
}
fn default_train_window() -> usize {
    365
}
fn default_t_w() -> usize {
    100
}
fn default_ar_order() -> usize {
    3
}
fn default_true() -> bool {
    true
}
fn default_theta() -> f64 {
    2.0
}
fn default_ses_grid_step() -> f64 {
    0.01
}
fn default_gamma() -> f64 {
    0.005
}
fn default_lambda() -> f64 {
    1.0
}
fn default_ogd_epsilon() -> f64 {
    0.1
}

/// Flat run configuration; unset integrator constants and the μ floor are
/// resolved from the first training window and echoed in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Optional run identifier; defaults to `dataset_regressor_method`.
    pub label: Option<String>,
    pub dataset: String,
    /// "ar" or "theta".
    pub regressor: String,
    pub ar_order: usize,
    pub ar_intercept: bool,
    pub theta: f64,
    pub ses_grid_step: f64,
    /// One of aci, ogd, pid, pid-full, pid-half, pid-half-bis, eci, eci-mod.
    pub method: String,
    pub alpha: f64,
    pub eta: f64,
    pub q0: f64,
    pub train_window: usize,
    pub t_w: usize,
    /// Relevance mixture weights (relevance-aware methods only).
    pub omega: Option<Vec<f64>>,
    /// Relevance slopes.
    pub v: Option<Vec<f64>>,
    /// ACI level step size.
    pub gamma: f64,
    /// ECI sigmoid steepness.
    pub lambda: f64,
    /// OGD: use the decaying schedule `t^{−1/2−ε}` instead of constant η.
    pub ogd_decay: bool,
    pub ogd_epsilon: f64,
    pub k_i: Option<f64>,
    pub c_sat: Option<f64>,
    pub output_cap: Option<f64>,
    pub mu_floor: Option<f64>,
    /// Flagged variant: average |gaps| instead of |Σ gaps| in μ.
    pub mu_absolute: bool,
    /// Seed for synthetic suites; unused by dataset runs.
    pub seed: u64,
    /// Where artifacts land; excluded from report echoes so reports stay
    /// byte-identical regardless of output location.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            label: None,
            dataset: String::new(),
            regressor: "ar".to_string(),
            ar_order: default_ar_order(),
            ar_intercept: default_true(),
            theta: default_theta(),
            ses_grid_step: default_ses_grid_step(),
            method: "pid".to_string(),
            alpha: default_alpha(),
            eta: default_eta(),
            q0: 0.0,
            train_window: default_train_window(),
            t_w: default_t_w(),
            omega: None,
            v: None,
            gamma: default_gamma(),
            lambda: default_lambda(),
            ogd_decay: false,
            ogd_epsilon: default_ogd_epsilon(),
            k_i: None,
            c_sat: None,
            output_cap: None,
            mu_floor: None,
            mu_absolute: false,
            seed: 0,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn run_id(&self) -> String {
        let base = self
            .label
            .clone()
            .unwrap_or_else(|| format!("{}_{}_{}", self.dataset, self.regressor, self.method));
        base.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    }

    pub fn forecaster(&self) -> Result<Forecaster, RunError> {
        match self.regressor.as_str() {
            "ar" => Ok(Forecaster::Ar(ArParams {
                p: self.ar_order,
                include_intercept: self.ar_intercept,
            })),
            "theta" => Ok(Forecaster::Theta(ThetaParams {
                theta: self.theta,
                ses_grid_step: self.ses_grid_step,
            })),
            other => Err(RunError::UnknownRegressor(other.to_string())),
        }
    }

    fn relevance_params(&self, mu_floor: f64) -> Result<RelevanceParams, RunError> {
        let (omega, v) = match (&self.omega, &self.v) {
            (Some(omega), Some(v)) => (omega.clone(), v.clone()),
            _ => {
                return Err(RunError::MissingRelevanceParams {
                    method: self.method.clone(),
                })
            }
        };
        let mu_mode = if self.mu_absolute {
            crate::relevance::MuMode::AbsoluteMean
        } else {
            crate::relevance::MuMode::SignedSum
        };
        Ok(RelevanceParams::new(omega, v, self.alpha)?
            .with_t_w(self.t_w)?
            .with_mu_floor(mu_floor)?
            .with_mu_mode(mu_mode)?)
    }
}

/// Data-derived constants echoed in every report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedConstants {
    pub k_i: f64,
    pub c_sat: f64,
    pub output_cap: f64,
    pub mu_floor: f64,
}

fn interquartile_range(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |level: f64| -> f64 {
        let h = level * (sorted.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(sorted.len() - 1);
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    q(0.75) - q(0.25)
}

/// Resolves unset constants from the first training window: the μ floor is
/// `1e−8` of the window's interquartile range, `K_I` the interquartile range
/// of the in-sample one-step scores, and the tangent cap ten times their
/// range. Degenerate windows fall back to unit scale.
fn resolve_constants(
    config: &RunConfig,
    first_window: &[f64],
    forecaster: &Forecaster,
) -> Result<ResolvedConstants, RunError> {
    let needs_scores = config.k_i.is_none() || config.output_cap.is_none();
    let scores = if needs_scores {
        forecaster.in_sample_scores(first_window)?
    } else {
        Vec::new()
    };
    let k_i = config.k_i.unwrap_or_else(|| {
        let iqr = interquartile_range(&scores);
        if iqr > 0.0 {
            iqr
        } else {
            1.0
        }
    });
    let c_sat = config.c_sat.unwrap_or(1.0);
    let output_cap = config.output_cap.unwrap_or_else(|| {
        let (min, max) = scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            });
        let range = max - min;
        if range.is_finite() && range > 0.0 {
            10.0 * range
        } else {
            10.0
        }
    });
    let mu_floor = config.mu_floor.unwrap_or_else(|| {
        let iqr = interquartile_range(first_window);
        if iqr > 0.0 {
            1e-8 * iqr
        } else {
            1e-8
        }
    });
    Ok(ResolvedConstants {
        k_i,
        c_sat,
        output_cap,
        mu_floor,
    })
}

fn build_updater(
    config: &RunConfig,
    constants: &ResolvedConstants,
) -> Result<ThresholdUpdater, RunError> {
    let sat = SaturationConfig::new(constants.k_i, constants.c_sat, constants.output_cap);
    let updater = match config.method.as_str() {
        "aci" => ThresholdUpdater::Aci(AciUpdater::new(
            config.q0,
            config.alpha,
            config.gamma,
            config.train_window,
        )),
        "ogd" => {
            let schedule = if config.ogd_decay {
                EtaSchedule::Decaying {
                    epsilon: config.ogd_epsilon,
                }
            } else {
                EtaSchedule::Constant(config.eta)
            };
            ThresholdUpdater::Ogd(OgdUpdater::new(config.q0, config.alpha, schedule))
        }
        "pid" => ThresholdUpdater::Pid(PidUpdater::baseline(
            config.q0,
            config.eta,
            config.alpha,
            sat,
        )),
        "pid-full" | "pid-half" | "pid-half-bis" => {
            let mode = match config.method.as_str() {
                "pid-full" => PidMode::Full,
                "pid-half" => PidMode::Half,
                _ => PidMode::HalfBis,
            };
            let params = config.relevance_params(constants.mu_floor)?;
            ThresholdUpdater::Pid(PidUpdater::relevance_aware(
                mode,
                config.q0,
                config.eta,
                config.alpha,
                sat,
                params,
            ))
        }
        "eci" => ThresholdUpdater::Eci(EciUpdater::sigmoid(
            config.q0,
            config.eta,
            config.alpha,
            config.lambda,
        )),
        "eci-mod" => {
            let params = config.relevance_params(constants.mu_floor)?;
            ThresholdUpdater::Eci(EciUpdater::relevance_aware(
                config.q0,
                config.eta,
                config.alpha,
                params,
            ))
        }
        other => return Err(RunError::UnknownMethod(other.to_string())),
    };
    Ok(updater)
}

/// One-step-ahead forecasts over every sliding window of the series,
/// paired with the ground truth at each cursor.
pub fn forecast_series(
    series: &UnivariateSeries,
    forecaster: &Forecaster,
    train_window: usize,
) -> Result<Vec<(f64, f64)>, RunError> {
    let views = crate::series::windows(series, train_window)?;
    let mut pairs = Vec::with_capacity(series.len() - train_window);
    for view in views {
        let forecast = forecaster.fit_forecast(view.window())?;
        pairs.push((forecast, view.target()));
    }
    Ok(pairs)
}

/// Outcome of one experiment: the aggregate report plus the full trace.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace: Vec<StepRecord>,
    pub constants: ResolvedConstants,
}

/// Drives an updater over precomputed (forecast, truth) pairs.
fn drive(
    config: &RunConfig,
    constants: &ResolvedConstants,
    pairs: &[(f64, f64)],
) -> Result<(Vec<StepRecord>, ThresholdUpdater), RunError> {
    let mut updater = build_updater(config, constants)?;
    let mut trace = Vec::with_capacity(pairs.len());
    let mut q = config.q0;
    for (i, &(forecast, truth)) in pairs.iter().enumerate() {
        let interval = build_interval(forecast, q);
        let (miss, score, gap) = evaluate_step(&interval, truth, q);
        let update = updater.observe(score, gap, miss);
        trace.push(StepRecord {
            t: i + 1,
            forecast,
            truth,
            score,
            threshold_before: q,
            miss,
            gap,
            relevance: update.relevance,
            threshold_after: update.next_threshold,
        });
        q = update.next_threshold;
    }
    Ok((trace, updater))
}

fn guarantee_checks(
    config: &RunConfig,
    constants: &ResolvedConstants,
    trace: &[StepRecord],
) -> Vec<BoundCheckReport> {
    let mut checks = Vec::new();
    let h = saturation_envelope(constants.c_sat);
    match config.method.as_str() {
        "pid" | "pid-half-bis" => {
            let errors: Vec<f64> = trace
                .iter()
                .map(|r| if r.miss { 1.0 } else { 0.0 })
                .collect();
            let check = check_induction_bound(&errors, 1.0, &h, config.alpha);
            checks.push(BoundCheckReport {
                name: "integrator_indicator_prefix_bound".to_string(),
                held: check.held,
                margin: check.worst_margin,
            });
        }
        "pid-full" | "pid-half" => {
            let errors: Vec<f64> = trace.iter().filter_map(|r| r.relevance).collect();
            let check = check_induction_bound(&errors, 1.0, &h, config.alpha);
            checks.push(BoundCheckReport {
                name: "integrator_relevance_prefix_bound".to_string(),
                held: check.held,
                margin: check.worst_margin,
            });
            if let Ok(holds_from) = check_dominance_hypothesis(trace, config.alpha) {
                checks.push(BoundCheckReport {
                    name: "indicator_sum_dominated_by_relevance_sum".to_string(),
                    held: holds_from.is_some(),
                    margin: holds_from.map_or(-1.0, |t| t as f64),
                });
            }
        }
        "eci" | "eci-mod" => {
            let sup = trace
                .iter()
                .map(|r| {
                    let g = if config.method == "eci" {
                        let s = crate::relevance::sigmoid(config.lambda * r.gap);
                        config.lambda * s * (1.0 - s)
                    } else {
                        0.0
                    };
                    (r.gap * g).abs()
                })
                .fold(0.0f64, f64::max);
            if config.method == "eci" {
                checks.push(BoundCheckReport {
                    name: "gap_gradient_term_bounded".to_string(),
                    held: sup.is_finite(),
                    margin: sup,
                });
            }
        }
        _ => {}
    }
    checks
}

/// Runs one experiment on an already loaded series.
pub fn run_on_series(
    series: &UnivariateSeries,
    config: &RunConfig,
) -> Result<RunOutcome, RunError> {
    let forecaster = config.forecaster()?;
    let pairs = forecast_series(series, &forecaster, config.train_window)?;
    run_on_forecasts(series, config, &pairs)
}

/// Runs one experiment on precomputed forecasts (grid runs share them).
pub fn run_on_forecasts(
    series: &UnivariateSeries,
    config: &RunConfig,
    pairs: &[(f64, f64)],
) -> Result<RunOutcome, RunError> {
    let forecaster = config.forecaster()?;
    let first_window = &series.values[..config.train_window.min(series.len())];
    let constants = resolve_constants(config, first_window, &forecaster)?;
    let (trace, _) = drive(config, &constants, pairs)?;
    let mut report = summarize(&trace)?;
    report.method = config.method.clone();
    report.dataset = series.name.clone();
    report.regressor = config.regressor.clone();
    report.config_echo = Some(serde_json::json!({
        "config": config,
        "resolved": constants,
    }));
    report.bound_checks = guarantee_checks(config, &constants, &trace);
    Ok(RunOutcome {
        report,
        trace,
        constants,
    })
}

/// Loads the dataset named by the config, runs the experiment, and emits
/// `trace.csv`, `report.json`, and `table.txt` under
/// `<output_dir>/<run_id>/` when an output directory is configured.
///
/// Artifacts are written only after the full run succeeds; a failed run
/// leaves no partial trace behind.
pub fn run_experiment(
    config: &RunConfig,
    manifest: &DatasetManifest,
) -> Result<RunOutcome, RunError> {
    let series = manifest.load_dataset(&config.dataset)?;
    let outcome = run_on_series(&series, config)?;
    if let Some(dir) = &config.output_dir {
        write_run_artifacts(&dir.join(config.run_id()), &outcome)?;
    }
    Ok(outcome)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Serializes the trace with shortest round-trip float formatting so files
/// are byte-stable across runs.
pub fn trace_to_csv(trace: &[StepRecord]) -> String {
    let mut out = String::from("t,forecast,truth,score,q_before,miss,gap,relevance,q_after\n");
    for r in trace {
        let relevance = r.relevance.map(|f| f.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.forecast,
            r.truth,
            r.score,
            r.threshold_before,
            u8::from(r.miss),
            r.gap,
            relevance,
            r.threshold_after
        );
    }
    out
}

/// Three-row metric table in the layout used by the combined grids.
pub fn report_table(reports: &[&RunReport]) -> String {
    let mut out = String::new();
    let headers: Vec<String> = reports
        .iter()
        .map(|r| format!("{}/{}", r.regressor, r.method))
        .collect();
    let width = headers
        .iter()
        .map(|h| h.len())
        .chain(std::iter::once(12))
        .max()
        .unwrap_or(12)
        + 2;
    let _ = write!(out, "{:<14}", "");
    for h in &headers {
        let _ = write!(out, "{h:>width$}");
    }
    out.push('\n');
    let rows: [(&str, fn(&RunReport) -> f64); 3] = [
        ("coverage", |r| r.coverage),
        ("avg width", |r| r.avg_width),
        ("median width", |r| r.median_width),
    ];
    for (label, get) in rows {
        let _ = write!(out, "{label:<14}");
        for r in reports {
            let _ = write!(out, "{:>width$.4}", get(r));
        }
        out.push('\n');
    }
    out
}

fn write_run_artifacts(dir: &Path, outcome: &RunOutcome) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let trace_path = dir.join("trace.csv");
    std::fs::write(&trace_path, trace_to_csv(&outcome.trace)).map_err(io_err(&trace_path))?;
    let report_path = dir.join("report.json");
    let mut json = serde_json::to_string_pretty(&outcome.report)?;
    json.push('\n');
    std::fs::write(&report_path, json).map_err(io_err(&report_path))?;
    let table_path = dir.join("table.txt");
    std::fs::write(&table_path, report_table(&[&outcome.report])).map_err(io_err(&table_path))?;
    Ok(())
}

/// Outcome of one grid entry; failures are recorded and the grid continues.
#[derive(Debug)]
pub struct GridItem {
    pub run_id: String,
    pub outcome: Result<RunOutcome, RunError>,
}

/// Executes a list of runs, sharing forecasts across runs that use the same
/// dataset, regressor, and window, and emits one combined table per dataset.
pub fn run_grid(
    configs: &[RunConfig],
    manifest: &DatasetManifest,
    output_dir: Option<&Path>,
) -> Result<Vec<GridItem>, RunError> {
    let mut series_cache: BTreeMap<String, UnivariateSeries> = BTreeMap::new();
    let mut forecast_cache: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut items = Vec::with_capacity(configs.len());
    let mut id_counts: BTreeMap<String, usize> = BTreeMap::new();

    for config in configs {
        let mut config = config.clone();
        if config.output_dir.is_none() {
            config.output_dir = output_dir.map(Path::to_path_buf);
        }
        let base_id = config.run_id();
        let ordinal = id_counts.entry(base_id.clone()).or_insert(0);
        *ordinal += 1;
        if *ordinal > 1 {
            config.label = Some(format!("{base_id}-{ordinal}"));
        }
        let run_id = config.run_id();

        let outcome = (|| -> Result<RunOutcome, RunError> {
            if !series_cache.contains_key(&config.dataset) {
                let series = manifest.load_dataset(&config.dataset)?;
                series_cache.insert(config.dataset.clone(), series);
            }
            let series = &series_cache[&config.dataset];
            let forecaster = config.forecaster()?;
            let key = format!(
                "{}|{:?}|{}",
                config.dataset, forecaster, config.train_window
            );
            if !forecast_cache.contains_key(&key) {
                let pairs = forecast_series(series, &forecaster, config.train_window)?;
                forecast_cache.insert(key.clone(), pairs);
            }
            let outcome = run_on_forecasts(series, &config, &forecast_cache[&key])?;
            if let Some(dir) = &config.output_dir {
                write_run_artifacts(&dir.join(config.run_id()), &outcome)?;
            }
            Ok(outcome)
        })();
        items.push(GridItem { run_id, outcome });
    }

    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut by_dataset: BTreeMap<&str, Vec<&RunReport>> = BTreeMap::new();
        for item in &items {
            if let Ok(outcome) = &item.outcome {
                by_dataset
                    .entry(outcome.report.dataset.as_str())
                    .or_default()
                    .push(&outcome.report);
            }
        }
        for (dataset, reports) in by_dataset {
            let path = dir.join(format!("table_{dataset}.txt"));
            let mut table = format!("dataset: {dataset}\n");
            table.push_str(&report_table(&reports));
            std::fs::write(&path, table).map_err(io_err(&path))?;
        }
    }
    Ok(items)
}

/// Report of one synthetic guarantee suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub steps: usize,
    pub checks: Vec<BoundCheckReport>,
    pub metrics: BTreeMap<String, f64>,
}

/// Bounded synthetic score sequence in `[0, 1]`; the generator family
/// cycles with the seed so suites cover steady, drifting, and
/// regime-switching score processes.
pub fn synthetic_scores(seed: u64, steps: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|t| match seed % 3 {
            0 => rng.random::<f64>(),
            1 => {
                let base = 0.5 + 0.4 * (t as f64 / 500.0).sin();
                (base * rng.random::<f64>()).clamp(0.0, 1.0)
            }
            _ => {
                let regime = if (t / 1000) % 2 == 0 { 0.25 } else { 0.85 };
                (regime * rng.random::<f64>() + 0.1 * rng.random::<f64>()).clamp(0.0, 1.0)
            }
        })
        .collect()
}

const SUITE_STEPS: usize = 10_000;

/// Runs one synthetic guarantee suite; an `Err` names the violated check.
pub fn run_synthetic_suite(name: &str, seed: u64) -> Result<SuiteReport, RunError> {
    match name {
        "pid-coverage" => suite_pid_coverage(seed),
        "integral-bound" => suite_integral_bound(seed),
        "eci-coverage" => suite_eci_coverage(seed),
        other => Err(RunError::UnknownSuite(other.to_string())),
    }
}

fn assert_check(
    checks: &mut Vec<BoundCheckReport>,
    name: &str,
    held: bool,
    margin: f64,
    step: usize,
) -> Result<(), RunError> {
    checks.push(BoundCheckReport {
        name: name.to_string(),
        held,
        margin,
    });
    if held {
        Ok(())
    } else {
        Err(RunError::AssertionFailed {
            check: name.to_string(),
            step,
        })
    }
}

/// Long-run coverage of the relevance-in-the-proportional-term update on
/// bounded scores: the indicator prefix bound and the coverage-gap rate.
fn suite_pid_coverage(seed: u64) -> Result<SuiteReport, RunError> {
    let alpha = 0.1;
    let c_sat = 0.5;
    let sat = SaturationConfig::new(1.0, c_sat, 10.0);
    let params = RelevanceParams::new(vec![1.0], vec![4.0], alpha)?;
    let scores = synthetic_scores(seed, SUITE_STEPS);
    let mut updater = ThresholdUpdater::Pid(PidUpdater::relevance_aware(
        PidMode::HalfBis,
        0.0,
        0.005,
        alpha,
        sat,
        params,
    ));
    let mut misses = Vec::with_capacity(scores.len());
    for &s in &scores {
        let q = updater.threshold();
        let miss = s > q;
        misses.push(if miss { 1.0 } else { 0.0 });
        updater.observe(s, s - q, miss);
    }
    let h = saturation_envelope(c_sat);
    let bound = check_induction_bound(&misses, 1.0, &h, alpha);
    let coverage_gap = (misses.iter().sum::<f64>() / misses.len() as f64 - alpha).abs();
    let rate = (h(SUITE_STEPS) + 2.0) / SUITE_STEPS as f64;

    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();
    metrics.insert("coverage_gap".to_string(), coverage_gap);
    metrics.insert("coverage_gap_rate_bound".to_string(), rate);
    assert_check(
        &mut checks,
        "indicator_prefix_induction_bound",
        bound.held,
        bound.worst_margin,
        bound.first_violation.unwrap_or(0),
    )?;
    assert_check(
        &mut checks,
        "longrun_coverage_gap_rate",
        coverage_gap <= rate,
        rate - coverage_gap,
        SUITE_STEPS,
    )?;
    Ok(SuiteReport {
        suite: "pid-coverage".to_string(),
        seed,
        steps: SUITE_STEPS,
        checks,
        metrics,
    })
}

/// Pure integral updates driven by the relevance error (the form the
/// induction argument actually covers for the full/half rewirings), plus an
/// honest report of whether the indicator-vs-relevance sum hypothesis held
/// on the corresponding full update.
fn suite_integral_bound(seed: u64) -> Result<SuiteReport, RunError> {
    let alpha = 0.1;
    let c_sat = 0.5;
    let sat = SaturationConfig::new(1.0, c_sat, 10.0);
    let h = saturation_envelope(c_sat);
    let scores = synthetic_scores(seed, SUITE_STEPS);
    let params = RelevanceParams::new(vec![1.0], vec![4.0], alpha)?;

    // Pure integral update q_{t+1} = r_t(Σ (f_i − α)).
    let mut q = 0.0f64;
    let mut scale = crate::relevance::ScaleEstimator::new(params.t_w);
    let mut f_errors = Vec::with_capacity(scores.len());
    let mut integral = 0.0;
    for (i, &s) in scores.iter().enumerate() {
        let gap = s - q;
        let f = eval_f(&params, scale.mu(), gap);
        scale.push(gap);
        f_errors.push(f);
        integral += f - alpha;
        q = saturation(i + 1, integral, &sat);
    }
    let bound = check_induction_bound(&f_errors, 1.0, &h, alpha);

    // Full pid-half update on the same scores, to scan the hypothesis.
    let params_full = RelevanceParams::new(vec![1.0], vec![4.0], alpha)?;
    let mut updater = ThresholdUpdater::Pid(PidUpdater::relevance_aware(
        PidMode::Half,
        0.0,
        0.005,
        alpha,
        sat,
        params_full,
    ));
    let mut trace = Vec::with_capacity(scores.len());
    for (i, &s) in scores.iter().enumerate() {
        let q = updater.threshold();
        let miss = s > q;
        let update = updater.observe(s, s - q, miss);
        trace.push(StepRecord {
            t: i + 1,
            forecast: 0.0,
            truth: s,
            score: s,
            threshold_before: q,
            miss,
            gap: s - q,
            relevance: update.relevance,
            threshold_after: update.next_threshold,
        });
    }
    let holds_from = check_dominance_hypothesis(&trace, alpha)?;

    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();
    metrics.insert(
        "hypothesis_holds_from".to_string(),
        holds_from.map_or(-1.0, |t| t as f64),
    );
    assert_check(
        &mut checks,
        "relevance_prefix_induction_bound",
        bound.held,
        bound.worst_margin,
        bound.first_violation.unwrap_or(0),
    )?;
    // The hypothesis is reported, not asserted: the relevance sum hovering
    // near zero legitimately prevents it from holding.
    checks.push(BoundCheckReport {
        name: "indicator_sum_dominated_by_relevance_sum".to_string(),
        held: holds_from.is_some(),
        margin: holds_from.map_or(-1.0, |t| t as f64),
    });
    Ok(SuiteReport {
        suite: "integral-bound".to_string(),
        seed,
        steps: SUITE_STEPS,
        checks,
        metrics,
    })
}

/// High learning-rate regime for the modified ECI update: η > N·B with
/// N = ⌈1/α⌉ and B the score bound, with the gradient bound kept under the
/// contraction threshold via the μ floor.
fn suite_eci_coverage(seed: u64) -> Result<SuiteReport, RunError> {
    let alpha: f64 = 0.1;
    let score_bound: f64 = 1.0; // B
    let n_cap: f64 = (1.0 / alpha).ceil(); // N
    let eta: f64 = 10.5; // > N·B = 10

    // U = sup |x·∇f(x)| is scale-free; estimate it on a unit-scale grid.
    let probe = RelevanceParams::new(vec![1.0], vec![1.0], alpha)?;
    let u_bound = (0..200_000)
        .map(|i| {
            let x = -20.0 + 2e-4 * i as f64;
            (x * grad_f(&probe, 1.0, x)).abs()
        })
        .fold(0.0f64, f64::max);
    // Contraction threshold for M = sup ∇f; keep Σωv/(4·floor) at half of it.
    let m_threshold = eta.min(n_cap * n_cap)
        / (2.0 * n_cap * n_cap * (score_bound + eta * (1.0 - alpha + u_bound)));
    let mu_floor = 1.0 / (2.0 * m_threshold);
    let params = RelevanceParams::new(vec![1.0], vec![1.0], alpha)?.with_mu_floor(mu_floor)?;
    let m_max = params.gradient_bound(0.0);

    let scores = synthetic_scores(seed, SUITE_STEPS);
    let mut updater = ThresholdUpdater::Eci(EciUpdater::relevance_aware(0.0, eta, alpha, params));
    let mut miss_count = 0usize;
    for &s in &scores {
        let q = updater.threshold();
        let miss = s > q;
        miss_count += usize::from(miss);
        updater.observe(s, s - q, miss);
    }
    let coverage = 1.0 - miss_count as f64 / scores.len() as f64;

    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();
    metrics.insert("coverage".to_string(), coverage);
    metrics.insert("eta".to_string(), eta);
    metrics.insert("gradient_bound".to_string(), m_max);
    metrics.insert("gradient_threshold".to_string(), m_threshold);
    metrics.insert("x_grad_sup".to_string(), u_bound);
    assert_check(
        &mut checks,
        "slope_bound_below_threshold",
        m_max < m_threshold,
        m_threshold - m_max,
        0,
    )?;
    assert_check(
        &mut checks,
        "longrun_coverage_within_tolerance",
        (coverage - (1.0 - alpha)).abs() <= 0.02,
        0.02 - (coverage - (1.0 - alpha)).abs(),
        SUITE_STEPS,
    )?;
    Ok(SuiteReport {
        suite: "eci-coverage".to_string(),
        seed,
        steps: SUITE_STEPS,
        checks,
        metrics,
    })
}

/// Serializes a suite report deterministically.
pub fn suite_report_json(report: &SuiteReport) -> Result<String, RunError> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    Ok(json)
}

/// Writes `suite_<name>_<seed>.json` under the directory.
pub fn write_suite_report(dir: &Path, report: &SuiteReport) -> Result<PathBuf, RunError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(format!("suite_{}_{}.json", report.suite, report.seed));
    let mut file = std::fs::File::create(&path).map_err(io_err(&path))?;
    file.write_all(suite_report_json(report)?.as_bytes())
        .map_err(io_err(&path))?;
    Ok(path)
}
