//! Online conformal prediction (OCP) for univariate time series.
//!
//! The crate provides the pieces of an online prediction-interval pipeline
//! and a benchmark harness that ties them together:
//!
//! - [`series`]: CSV ingestion and sliding training windows.
//! - [`forecast`]: point forecasters (autoregressive least squares, theta
//!   decomposition) refit on each window.
//! - [`conformal`]: absolute-residual scores and symmetric intervals built
//!   from a threshold `q_t`.
//! - [`relevance`]: the sigmoid-mixture relevance family `f` that replaces
//!   the binary miss indicator in threshold updates, together with its
//!   scale estimator and analytic gradient.
//! - [`update`]: online threshold/level updaters: ACI, OGD, conformal PID
//!   with its integrator saturation, ECI, and the relevance-aware variants
//!   of PID and ECI.
//! - [`eval`]: run metrics (coverage, widths), long-run coverage bound
//!   checkers, and brute-force oracles used for cross-checks.
//! - [`runner`]: experiment configuration, the online loop, grid execution,
//!   synthetic guarantee suites, and artifact emission (trace CSV, report
//!   JSON, result tables).
//!
//! Every updater follows the same online protocol: at step `t` an interval
//! `[forecast ± max(q_t, 0)]` is published, the ground truth is revealed,
//! the score `s_t = |truth − forecast|` and signed gap `s_t − q_t` are
//! computed, and the updater emits `q_{t+1}`. Updaters always see the raw
//! (possibly negative) threshold; clipping at zero happens only when an
//! interval is materialized for output.

pub mod conformal;
pub mod eval;
pub mod forecast;
pub mod relevance;
pub mod runner;
pub mod series;
pub mod update;

pub use conformal::{build_interval, evaluate_step, score, PredictionInterval, StepRecord};
pub use eval::{summarize, RunReport};
pub use relevance::{RelevanceParams, ScaleEstimator};
pub use runner::{run_experiment, run_grid, run_synthetic_suite, RunConfig};
pub use series::UnivariateSeries;
pub use update::ThresholdUpdater;
