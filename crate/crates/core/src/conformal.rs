//! Non-conformity scores, symmetric intervals, and per-step bookkeeping.
//!
//! The score is the absolute residual `s_t = |Y_t − Ŷ_t|`, so the interval
//! `{Y : s ≤ q_t}` is exactly `[Ŷ_t ± q_t]` and the signed gap `s_t − q_t`
//! is the distance between the ground truth and the nearer interval bound.
//!
//! Updaters always work with the raw, possibly negative `q_t`; only the
//! materialized interval clips the radius at zero. Clipping inside the
//! update loop would change the update algebra that the long-run coverage
//! guarantees constrain.

use serde::Serialize;

/// A symmetric prediction interval around a point forecast.
///
/// A negative threshold yields the empty interval: radius 0 with the
/// `empty` flag set. An empty interval covers nothing, including its own
/// center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionInterval {
    pub center: f64,
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub empty: bool,
}

impl PredictionInterval {
    /// Containment under the tie-covered convention `s ≤ q`.
    pub fn covers(&self, truth: f64) -> bool {
        !self.empty && (truth - self.center).abs() <= self.radius
    }

    pub fn width(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Absolute-residual non-conformity score.
pub fn score(truth: f64, forecast: f64) -> f64 {
    (truth - forecast).abs()
}

/// Builds the symmetric interval for a raw threshold `q`.
pub fn build_interval(forecast: f64, q: f64) -> PredictionInterval {
    if q >= 0.0 {
        PredictionInterval {
            center: forecast,
            radius: q,
            lower: forecast - q,
            upper: forecast + q,
            empty: false,
        }
    } else {
        PredictionInterval {
            center: forecast,
            radius: 0.0,
            lower: forecast,
            upper: forecast,
            empty: true,
        }
    }
}

/// Scores one revealed ground truth against the raw threshold.
///
/// `miss` uses the raw `q` (ties covered), and the gap is the exact signed
/// distance `score − q` that relevance-aware updaters consume.
pub fn evaluate_step(interval: &PredictionInterval, truth: f64, q_raw: f64) -> (bool, f64, f64) {
    let s = score(truth, interval.center);
    (s > q_raw, s, s - q_raw)
}

/// One online step of an experiment trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: usize,
    pub forecast: f64,
    pub truth: f64,
    pub score: f64,
    /// Raw threshold the interval was built from (may be negative).
    pub threshold_before: f64,
    pub miss: bool,
    /// `score − threshold_before`, exactly.
    pub gap: f64,
    /// Relevance value fed to the update, absent for baseline methods.
    pub relevance: Option<f64>,
    pub threshold_after: f64,
}

impl StepRecord {
    /// Reported width: `2·max(q, 0)`, counted on every step.
    pub fn width(&self) -> f64 {
        2.0 * self.threshold_before.max(0.0)
    }
}
