//! Run metrics, guarantee checkers, and brute-force oracles.
//!
//! The checkers verify, on concrete traces, the quantities the long-run
//! coverage arguments constrain: the prefix sums of the integrator error
//! terms against the saturation envelope, and the hypothesis comparing
//! indicator and relevance error sums. On real datasets these are reported
//! per run rather than asserted, because real scores need not satisfy the
//! boundedness hypotheses.

use serde::Serialize;
use thiserror::Error;

use crate::conformal::StepRecord;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace has no relevance values (baseline method?)")]
    MissingRelevance,
}

/// Aggregate result of one experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub method: String,
    pub dataset: String,
    pub regressor: String,
    pub coverage: f64,
    pub avg_width: f64,
    pub median_width: f64,
    pub n_steps: usize,
    pub miss_count: usize,
    /// Full configuration echo for provenance, filled by the runner.
    pub config_echo: Option<serde_json::Value>,
    pub bound_checks: Vec<BoundCheckReport>,
}

/// One per-run guarantee check: named, with its tightest margin.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheckReport {
    pub name: String,
    pub held: bool,
    pub margin: f64,
}

/// Folds a trace into coverage and width metrics.
///
/// Widths are `2·max(q_t, 0)` counted on every step, misses included; the
/// median of an even count is the midpoint of the two central order
/// statistics.
pub fn summarize(trace: &[StepRecord]) -> Result<RunReport, EvalError> {
    if trace.is_empty() {
        return Err(EvalError::EmptyTrace);
    }
    let n = trace.len();
    let miss_count = trace.iter().filter(|r| r.miss).count();
    let mut widths: Vec<f64> = trace.iter().map(StepRecord::width).collect();
    let avg_width = widths.iter().sum::<f64>() / n as f64;
    widths.sort_by(f64::total_cmp);
    let median_width = if n % 2 == 1 {
        widths[n / 2]
    } else {
        0.5 * (widths[n / 2 - 1] + widths[n / 2])
    };
    Ok(RunReport {
        method: String::new(),
        dataset: String::new(),
        regressor: String::new(),
        coverage: 1.0 - miss_count as f64 / n as f64,
        avg_width,
        median_width,
        n_steps: n,
        miss_count,
        config_echo: None,
        bound_checks: Vec::new(),
    })
}

/// `|mean(1{miss}) − α|` over the trace.
pub fn longrun_coverage_gap(trace: &[StepRecord], alpha: f64) -> Result<f64, EvalError> {
    if trace.is_empty() {
        return Err(EvalError::EmptyTrace);
    }
    let miss_rate = trace.iter().filter(|r| r.miss).count() as f64 / trace.len() as f64;
    Ok((miss_rate - alpha).abs())
}

/// Outcome of the prefix induction bound `|Σ_{i≤T}(e_i − α)| ≤ c·h(T) + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub held: bool,
    /// Tightest value of `c·h(T) + 1 − |E_T|` across prefixes; negative
    /// when violated.
    pub worst_margin: f64,
    /// 1-based prefix length of the first violation, if any.
    pub first_violation: Option<usize>,
}

/// Verifies the induction invariant at every prefix of the error terms the
/// method fed its integrator (miss indicators or relevance values).
pub fn check_induction_bound(
    errors: &[f64],
    c: f64,
    h: impl Fn(usize) -> f64,
    alpha: f64,
) -> BoundCheck {
    let mut sum = 0.0;
    let mut worst = f64::INFINITY;
    let mut first_violation = None;
    for (i, e) in errors.iter().enumerate() {
        sum += e - alpha;
        let t = i + 1;
        let margin = c * h(t) + 1.0 - sum.abs();
        if margin < worst {
            worst = margin;
        }
        if margin < 0.0 && first_violation.is_none() {
            first_violation = Some(t);
        }
    }
    BoundCheck {
        held: first_violation.is_none(),
        worst_margin: worst,
        first_violation,
    }
}

/// Scans for the smallest `T'` such that for every observed `T ≥ T'`,
/// `|Σ(1{miss} − α)| ≤ |Σ(f − α)|` (within float fuzz); `None` when the
/// final prefix itself violates the inequality.
pub fn check_dominance_hypothesis(
    trace: &[StepRecord],
    alpha: f64,
) -> Result<Option<usize>, EvalError> {
    if trace.is_empty() {
        return Err(EvalError::EmptyTrace);
    }
    if trace.iter().any(|r| r.relevance.is_none()) {
        return Err(EvalError::MissingRelevance);
    }
    let mut indicator_sum = 0.0;
    let mut relevance_sum = 0.0;
    let mut last_violation = None;
    for (i, record) in trace.iter().enumerate() {
        indicator_sum += if record.miss { 1.0 } else { 0.0 } - alpha;
        relevance_sum += record.relevance.expect("checked above") - alpha;
        if indicator_sum.abs() > relevance_sum.abs() + 1e-9 {
            last_violation = Some(i + 1);
        }
    }
    Ok(match last_violation {
        None => Some(1),
        Some(t) if t == trace.len() => None,
        Some(t) => Some(t + 1),
    })
}

/// Sorted linear-interpolation quantile over a multiset of scores; the
/// independent oracle for the rolling-window quantile inside ACI.
pub fn brute_quantile(scores: &[f64], level: f64) -> Option<f64> {
    if scores.is_empty() || !(0.0..=1.0).contains(&level) {
        return None;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    if m == 1 {
        return Some(sorted[0]);
    }
    let h = level * (m - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::update::{saturation, saturation_envelope, SaturationConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(t: usize, q: f64, miss: bool) -> StepRecord {
        StepRecord {
            t,
            forecast: 0.0,
            truth: 0.0,
            score: 0.0,
            threshold_before: q,
            miss,
            gap: 0.0,
            relevance: None,
            threshold_after: q,
        }
    }

    #[test]
    fn summarize_basic_arithmetic() {
        let trace: Vec<StepRecord> = (0..10).map(|i| record(i + 1, 2.0, i == 0)).collect();
        let report = summarize(&trace).unwrap();
        assert!((report.coverage - 0.9).abs() < 1e-12);
        assert_eq!(report.avg_width, 4.0);
        assert_eq!(report.median_width, 4.0);
        assert_eq!(report.n_steps, 10);
    }

    #[test]
    fn summarize_all_misses_and_empty() {
        let trace: Vec<StepRecord> = (0..5).map(|i| record(i + 1, 1.0, true)).collect();
        assert_eq!(summarize(&trace).unwrap().coverage, 0.0);
        assert_eq!(summarize(&[]).unwrap_err(), EvalError::EmptyTrace);
    }

    #[test]
    fn summarize_median_even_count_is_midpoint() {
        let mut trace = vec![record(1, 1.0, false), record(2, 2.0, false)];
        trace.push(record(3, 4.0, false));
        trace.push(record(4, 10.0, false));
        // widths 2, 4, 8, 20 -> median 6
        assert_eq!(summarize(&trace).unwrap().median_width, 6.0);
    }

    #[test]
    fn summarize_negative_thresholds_count_zero_width() {
        let trace = vec![record(1, -3.0, true), record(2, 1.0, false)];
        let report = summarize(&trace).unwrap();
        assert_eq!(report.avg_width, 1.0);
        assert_eq!(report.median_width, 1.0);
    }

    #[test]
    fn summarize_is_a_pure_fold() {
        let trace: Vec<StepRecord> = (0..9)
            .map(|i| record(i + 1, (i as f64).sin().abs(), i % 4 == 0))
            .collect();
        let a = summarize(&trace).unwrap();
        let b = summarize(&trace).unwrap();
        assert_eq!(a.coverage.to_bits(), b.coverage.to_bits());
        assert_eq!(a.avg_width.to_bits(), b.avg_width.to_bits());
        assert_eq!(a.median_width.to_bits(), b.median_width.to_bits());
    }

    #[test]
    fn longrun_gap_examples() {
        let trace: Vec<StepRecord> = (0..100).map(|i| record(i + 1, 1.0, i % 10 == 0)).collect();
        assert!(longrun_coverage_gap(&trace, 0.1).unwrap() < 1e-12);
        let trace: Vec<StepRecord> = (0..100).map(|i| record(i + 1, 1.0, false)).collect();
        assert!((longrun_coverage_gap(&trace, 0.1).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(
            longrun_coverage_gap(&[], 0.1).unwrap_err(),
            EvalError::EmptyTrace
        );
    }

    #[test]
    fn induction_bound_zero_error_terms() {
        let errors = vec![0.1; 50];
        let h = saturation_envelope(1.0);
        let check = check_induction_bound(&errors, 1.0, &h, 0.1);
        assert!(check.held);
        // Zero prefix sums leave the full envelope as margin at T = 1.
        assert!((check.worst_margin - (h(1) + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn induction_bound_alternating_adversary_under_pure_integral_update() {
        // Scores chosen adversarially each step to maximize the indicator
        // against the pure integral update q_{t+1} = r_t(E_t).
        let cfg = SaturationConfig::new(1.0, 0.5, 10.0);
        let h = saturation_envelope(cfg.c_sat);
        let alpha = 0.1;
        let mut q = 0.0f64;
        let mut errors = Vec::new();
        let mut sum = 0.0;
        for t in 1..=5000usize {
            // Adversary: score 1 when it causes a miss hurts most when the
            // integral is high; alternate pressure otherwise.
            let score: f64 = if q < 1.0 { 1.0 } else { 0.0 };
            let miss = score > q;
            let e = if miss { 1.0 } else { 0.0 };
            errors.push(e);
            sum += e - alpha;
            q = saturation(t, sum, &cfg);
        }
        let check = check_induction_bound(&errors, 1.0, &h, alpha);
        assert!(check.held, "violated at {:?}", check.first_violation);
    }

    #[test]
    fn induction_bound_detects_corrupted_trace() {
        // Constant error 1 with no saturation response: the linear sum must
        // cross the sub-linear envelope.
        let errors = vec![1.0; 20_000];
        let h = saturation_envelope(0.5);
        let check = check_induction_bound(&errors, 1.0, &h, 0.1);
        assert!(!check.held);
        let t = check.first_violation.unwrap();
        // Analytic crossing: 0.9·t > c·h(t) + 1.
        assert!(0.9 * t as f64 > h(t) + 1.0 - 1e-9);
        assert!(t >= 2 && 0.9 * (t as f64 - 1.0) <= h(t - 1) + 1.0 + 1e-9);
    }

    #[test]
    fn dominance_hypothesis_equality_case_holds_from_start() {
        // Relevance equal to the indicator (the huge-v limit).
        let trace: Vec<StepRecord> = (0..200)
            .map(|i| {
                let miss = i % 10 == 0;
                let mut r = record(i + 1, 1.0, miss);
                r.relevance = Some(if miss { 1.0 } else { 0.0 });
                r
            })
            .collect();
        assert_eq!(check_dominance_hypothesis(&trace, 0.1).unwrap(), Some(1));
    }

    #[test]
    fn dominance_hypothesis_reports_absence() {
        // Relevance pinned at alpha makes the f-sum ~0 while the indicator
        // sum drifts: the hypothesis must be reported as never holding.
        let trace: Vec<StepRecord> = (0..100)
            .map(|i| {
                let mut r = record(i + 1, 1.0, true);
                r.relevance = Some(0.1);
                r
            })
            .collect();
        assert_eq!(check_dominance_hypothesis(&trace, 0.1).unwrap(), None);
    }

    #[test]
    fn dominance_hypothesis_error_cases() {
        assert_eq!(
            check_dominance_hypothesis(&[], 0.1).unwrap_err(),
            EvalError::EmptyTrace
        );
        let trace = vec![record(1, 1.0, false)];
        assert_eq!(
            check_dominance_hypothesis(&trace, 0.1).unwrap_err(),
            EvalError::MissingRelevance
        );
    }

    #[test]
    fn brute_quantile_examples() {
        let scores: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(brute_quantile(&scores, 0.5), Some(5.5));
        assert_eq!(brute_quantile(&[7.0], 0.123), Some(7.0));
        assert_eq!(brute_quantile(&[], 0.5), None);
    }

    #[test]
    fn brute_quantile_order_statistics_on_seeded_uniforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let q = brute_quantile(&draws, 0.9).unwrap();
        assert!((q - 0.9).abs() < 0.02, "q = {q}");
    }
}
