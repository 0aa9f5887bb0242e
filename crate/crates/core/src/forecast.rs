//! One-step-ahead point forecasters refit on each sliding training window.
//!
//! Both forecasters are pure functions of the window they are fitted on:
//! the same window always yields a bit-identical forecast, which keeps
//! experiment traces reproducible byte for byte.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("window of {len} points is too short (need more than {min})")]
    WindowTooShort { len: usize, min: usize },
    #[error("design matrix is rank deficient and no intercept was kept")]
    RankDeficient,
    #[error("expected {expected} recent values, got {got}")]
    WrongLagCount { expected: usize, got: usize },
}

/// Autoregressive model settings: lag order and intercept handling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArParams {
    pub p: usize,
    pub include_intercept: bool,
}

impl Default for ArParams {
    fn default() -> Self {
        Self {
            p: 3,
            include_intercept: true,
        }
    }
}

/// A fitted autoregression: `y_t ≈ intercept + Σ coef_i · y_{t−i}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArModel {
    /// Lag coefficients, index 0 = lag 1.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Ordinary least squares on the lag design of the window.
///
/// Collinear lag columns (a constant window is the common case) are dropped
/// with their coefficient pinned to zero; the intercept, when requested, is
/// always kept so a flat segment still forecasts its constant. Fitting a
/// constant window without an intercept has nothing left to estimate and is
/// an error.
pub fn fit_ar(window: &[f64], params: &ArParams) -> Result<ArModel, ForecastError> {
    let p = params.p.max(1);
    if window.len() <= p + 1 {
        return Err(ForecastError::WindowTooShort {
            len: window.len(),
            min: p + 1,
        });
    }
    let rows = window.len() - p;
    let k = p + usize::from(params.include_intercept);

    // Gram matrix and moment vector of the lag design. Column 0 is the
    // intercept when present, then lags 1..=p.
    let mut gram = vec![vec![0.0f64; k]; k];
    let mut moment = vec![0.0f64; k];
    let col_value = |col: usize, row: usize| -> f64 {
        if params.include_intercept {
            if col == 0 {
                1.0
            } else {
                window[p + row - col]
            }
        } else {
            window[p + row - (col + 1)]
        }
    };
    for row in 0..rows {
        let y = window[p + row];
        for i in 0..k {
            let xi = col_value(i, row);
            moment[i] += xi * y;
            for j in i..k {
                gram[i][j] += xi * col_value(j, row);
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }

    let coefs = solve_dropping_collinear(gram, moment)?;
    let (intercept, lag_coefs) = if params.include_intercept {
        (coefs[0], coefs[1..].to_vec())
    } else {
        (0.0, coefs)
    };
    Ok(ArModel {
        coefficients: lag_coefs,
        intercept,
    })
}

/// Gauss-Jordan elimination with partial pivoting; columns whose pivot
/// vanishes are dropped (coefficient forced to zero) instead of failing
/// the fit.
fn solve_dropping_collinear(
    mut a: Vec<Vec<f64>>,
    mut b: Vec<f64>,
) -> Result<Vec<f64>, ForecastError> {
    let k = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(ForecastError::RankDeficient);
    }
    let tol = 1e-10 * scale;
    let mut pivot_row_of: Vec<Option<usize>> = vec![None; k];
    let mut used = vec![false; k];

    for col in 0..k {
        let pivot = (0..k)
            .filter(|&r| !used[r])
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()));
        let pivot = match pivot {
            Some(r) if a[r][col].abs() > tol => r,
            _ => continue, // collinear with earlier columns: drop it
        };
        used[pivot] = true;
        pivot_row_of[col] = Some(pivot);
        let pv = a[pivot][col];
        for c in 0..k {
            a[pivot][c] /= pv;
        }
        b[pivot] /= pv;
        for r in 0..k {
            if r == pivot {
                continue;
            }
            let factor = a[r][col];
            if factor != 0.0 {
                for c in 0..k {
                    a[r][c] -= factor * a[pivot][c];
                }
                b[r] -= factor * b[pivot];
            }
        }
    }

    if pivot_row_of.iter().all(Option::is_none) {
        return Err(ForecastError::RankDeficient);
    }
    // Retained columns are fully eliminated everywhere else, so each pivot
    // row reads its coefficient directly; dropped columns stay at zero.
    let mut coefs = vec![0.0f64; k];
    for (col, pivot) in pivot_row_of.iter().enumerate() {
        if let Some(row) = pivot {
            coefs[col] = b[*row];
        }
    }
    Ok(coefs)
}

/// Applies a fitted model to the last `p` observed values.
///
/// `recent` is in chronological order: `recent[p−1]` is the most recent
/// observation and is multiplied by the lag-1 coefficient.
pub fn forecast_ar(model: &ArModel, recent: &[f64]) -> Result<f64, ForecastError> {
    let p = model.coefficients.len();
    if recent.len() != p {
        return Err(ForecastError::WrongLagCount {
            expected: p,
            got: recent.len(),
        });
    }
    let mut acc = model.intercept;
    for (i, coef) in model.coefficients.iter().enumerate() {
        acc += coef * recent[p - 1 - i];
    }
    Ok(acc)
}

/// Theta decomposition settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThetaParams {
    pub theta: f64,
    pub ses_grid_step: f64,
}

impl Default for ThetaParams {
    fn default() -> Self {
        Self {
            theta: 2.0,
            ses_grid_step: 0.01,
        }
    }
}

/// Fitted theta state: the window's linear trend plus the exponentially
/// smoothed theta-line `z_t = θ·y_t + (1−θ)·trend_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaModel {
    pub theta: f64,
    pub trend_intercept: f64,
    pub trend_slope: f64,
    pub smoothing: f64,
    pub ses_level: f64,
    pub n: usize,
}

fn linear_trend(window: &[f64]) -> (f64, f64) {
    let n = window.len() as f64;
    let (mut sx, mut sy, mut sxy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for (i, &y) in window.iter().enumerate() {
        let x = i as f64;
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
    }
    let den = n * sxx - sx * sx;
    if den.abs() < 1e-12 * (n * sxx).abs().max(1.0) {
        return (sy / n, 0.0);
    }
    let slope = (n * sxy - sx * sy) / den;
    ((sy - slope * sx) / n, slope)
}

/// Plain simple exponential smoothing pass: returns the final level and the
/// in-sample one-step squared error, with `S_1 = z_1`.
fn ses_pass(z: &[f64], lambda: f64) -> (f64, f64) {
    let mut level = z[0];
    let mut sse = 0.0;
    for &value in &z[1..] {
        let err = value - level;
        sse += err * err;
        level = lambda * value + (1.0 - lambda) * level;
    }
    (level, sse)
}

/// The steady-state lag of SES on a linear ramp, used so that the theta-line
/// forecast extrapolates an exactly linear window without the classic
/// half-slope shortfall.
fn ses_trend_correction(lambda: f64, n: usize) -> f64 {
    1.0 + (1.0 - lambda) / lambda * (1.0 - (1.0 - lambda).powi(n as i32 - 1))
}

/// Fits the trend line, builds the theta-line, and grid-searches the SES
/// smoothing parameter over `(0, 1)` minimizing in-sample one-step squared
/// error (ties resolve to the smallest value).
pub fn fit_theta(window: &[f64], params: &ThetaParams) -> Result<ThetaModel, ForecastError> {
    if window.len() < 4 {
        return Err(ForecastError::WindowTooShort {
            len: window.len(),
            min: 3,
        });
    }
    let (a, b) = linear_trend(window);
    let theta = params.theta;
    let z: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(i, &y)| theta * y + (1.0 - theta) * (a + b * i as f64))
        .collect();

    let step = params.ses_grid_step;
    let mut best: Option<(f64, f64, f64)> = None; // (sse, lambda, level)
    let mut i = 1usize;
    loop {
        let lambda = step * i as f64;
        if lambda >= 1.0 - 1e-12 {
            break;
        }
        let (level, sse) = ses_pass(&z, lambda);
        if best.is_none_or(|(best_sse, _, _)| sse < best_sse) {
            best = Some((sse, lambda, level));
        }
        i += 1;
    }
    let (_, smoothing, ses_level) = best.ok_or(ForecastError::WindowTooShort {
        len: window.len(),
        min: 3,
    })?;
    Ok(ThetaModel {
        theta,
        trend_intercept: a,
        trend_slope: b,
        smoothing,
        ses_level,
        n: window.len(),
    })
}

/// Recombines the extrapolated trend and the drift-corrected SES forecast of
/// the theta-line with weights `(1−1/θ, 1/θ)`: equal weights at the default
/// θ = 2, and plain SES of the original series at θ = 1.
pub fn forecast_theta(model: &ThetaModel) -> f64 {
    let trend_next = model.trend_intercept + model.trend_slope * model.n as f64;
    let corr = ses_trend_correction(model.smoothing, model.n);
    let z_next = model.ses_level + (model.theta - 1.0) * model.trend_slope * corr;
    (1.0 - 1.0 / model.theta) * trend_next + (1.0 / model.theta) * z_next
}

/// Regressor selection for the experiment runner.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum Forecaster {
    Ar(ArParams),
    Theta(ThetaParams),
}

impl Forecaster {
    pub fn name(&self) -> &'static str {
        match self {
            Forecaster::Ar(_) => "ar",
            Forecaster::Theta(_) => "theta",
        }
    }

    /// Fit on the window and produce the one-step-ahead forecast.
    pub fn fit_forecast(&self, window: &[f64]) -> Result<f64, ForecastError> {
        match self {
            Forecaster::Ar(params) => {
                let model = fit_ar(window, params)?;
                let p = model.coefficients.len();
                forecast_ar(&model, &window[window.len() - p..])
            }
            Forecaster::Theta(params) => Ok(forecast_theta(&fit_theta(window, params)?)),
        }
    }

    /// In-sample one-step absolute residuals on a window, used to derive
    /// data-scaled defaults for the integrator constants.
    pub fn in_sample_scores(&self, window: &[f64]) -> Result<Vec<f64>, ForecastError> {
        match self {
            Forecaster::Ar(params) => {
                let model = fit_ar(window, params)?;
                let p = params.p.max(1);
                Ok((p..window.len())
                    .map(|t| {
                        let pred = forecast_ar(&model, &window[t - p..t])
                            .expect("lag slice has model order length");
                        (window[t] - pred).abs()
                    })
                    .collect())
            }
            Forecaster::Theta(params) => {
                let model = fit_theta(window, params)?;
                let theta = model.theta;
                let (a, b) = (model.trend_intercept, model.trend_slope);
                let lambda = model.smoothing;
                let mut level = theta * window[0] + (1.0 - theta) * a;
                let mut scores = Vec::with_capacity(window.len() - 1);
                for (t, &y) in window.iter().enumerate().skip(1) {
                    let trend_t = a + b * t as f64;
                    let corr = ses_trend_correction(lambda, t);
                    let z_hat = level + (theta - 1.0) * b * corr;
                    let pred = (1.0 - 1.0 / theta) * trend_t + (1.0 / theta) * z_hat;
                    scores.push((y - pred).abs());
                    let z_t = theta * y + (1.0 - theta) * trend_t;
                    level = lambda * z_t + (1.0 - lambda) * level;
                }
                Ok(scores)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64).collect()
    }

    #[test]
    fn ar_on_linear_ramp_recovers_next_value() {
        let window = ramp(20);
        let model = fit_ar(
            &window,
            &ArParams {
                p: 1,
                include_intercept: true,
            },
        )
        .unwrap();
        let forecast = forecast_ar(&model, &[20.0]).unwrap();
        assert!((forecast - 21.0).abs() < 1e-9, "forecast {forecast}");
    }

    #[test]
    fn ar_constant_window_keeps_intercept_only() {
        let window = vec![5.5; 10];
        let model = fit_ar(
            &window,
            &ArParams {
                p: 1,
                include_intercept: true,
            },
        )
        .unwrap();
        assert_eq!(model.coefficients, vec![0.0]);
        assert!((model.intercept - 5.5).abs() < 1e-9);
        assert!((forecast_ar(&model, &[5.5]).unwrap() - 5.5).abs() < 1e-9);
    }

    #[test]
    fn ar_constant_window_without_intercept_is_rank_deficient() {
        let window = vec![0.0; 10];
        let err = fit_ar(
            &window,
            &ArParams {
                p: 1,
                include_intercept: false,
            },
        )
        .unwrap_err();
        assert!(matches!(err, ForecastError::RankDeficient));
    }

    #[test]
    fn ar_window_too_short() {
        assert!(matches!(
            fit_ar(&[1.0, 2.0, 3.0, 4.0], &ArParams::default()),
            Err(ForecastError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn forecast_ar_direct_substitution() {
        let model = ArModel {
            coefficients: vec![0.5],
            intercept: 0.0,
        };
        assert_eq!(forecast_ar(&model, &[4.0]).unwrap(), 2.0);

        let constant = ArModel {
            coefficients: vec![0.0, 0.0],
            intercept: 7.0,
        };
        assert_eq!(forecast_ar(&constant, &[123.0, -4.0]).unwrap(), 7.0);

        assert!(matches!(
            forecast_ar(&model, &[1.0, 2.0]),
            Err(ForecastError::WrongLagCount {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn forecast_ar_uses_most_recent_value_for_lag_one() {
        let model = ArModel {
            coefficients: vec![1.0, 0.0, 0.0],
            intercept: 0.0,
        };
        // recent is chronological; lag 1 is the last element.
        assert_eq!(forecast_ar(&model, &[1.0, 2.0, 3.0]).unwrap(), 3.0);
    }

    #[test]
    fn ar_recovers_synthetic_ar1_coefficient() {
        // y_t = 0.8 y_{t-1} + noise(sigma = 0.01), seeded Box-Muller.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut normal = || {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let mut y = vec![1.0f64];
        for _ in 1..365 {
            let prev = *y.last().unwrap();
            y.push(0.8 * prev + 0.01 * normal());
        }
        let model = fit_ar(
            &y,
            &ArParams {
                p: 1,
                include_intercept: true,
            },
        )
        .unwrap();
        assert!(
            (model.coefficients[0] - 0.8).abs() < 0.05,
            "lag-1 coefficient {}",
            model.coefficients[0]
        );
        // Independent route: no-intercept simple regression of y_t on y_{t-1}.
        let (mut num, mut den) = (0.0, 0.0);
        for t in 1..y.len() {
            num += y[t] * y[t - 1];
            den += y[t - 1] * y[t - 1];
        }
        let simple = num / den;
        assert!(
            (model.coefficients[0] - simple).abs() < 0.02,
            "ols {} vs simple {}",
            model.coefficients[0],
            simple
        );
    }

    #[test]
    fn ar_forecast_is_shift_equivariant() {
        let window: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() + 3.0).collect();
        let params = ArParams {
            p: 3,
            include_intercept: true,
        };
        let base = Forecaster::Ar(params).fit_forecast(&window).unwrap();
        for delta in [-17.5, 0.25, 1000.0] {
            let shifted: Vec<f64> = window.iter().map(|v| v + delta).collect();
            let moved = Forecaster::Ar(params).fit_forecast(&shifted).unwrap();
            assert!(
                (moved - (base + delta)).abs() < 1e-6,
                "delta {delta}: {moved} vs {}",
                base + delta
            );
        }
    }

    #[test]
    fn theta_extrapolates_exact_linear_window() {
        let model = fit_theta(&ramp(50), &ThetaParams::default()).unwrap();
        let forecast = forecast_theta(&model);
        assert!((forecast - 51.0).abs() < 1e-6, "forecast {forecast}");
    }

    #[test]
    fn theta_constant_window_forecasts_the_constant() {
        let window = vec![7.0; 30];
        let model = fit_theta(&window, &ThetaParams::default()).unwrap();
        assert!((forecast_theta(&model) - 7.0).abs() < 1e-9);
    }

    #[test]
    fn theta_window_too_short() {
        assert!(matches!(
            fit_theta(&[1.0, 2.0, 3.0], &ThetaParams::default()),
            Err(ForecastError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn theta_one_degenerates_to_plain_ses() {
        let window: Vec<f64> = (0..80)
            .map(|i| (i as f64 * 0.21).sin() * 4.0 + 10.0)
            .collect();
        let params = ThetaParams {
            theta: 1.0,
            ses_grid_step: 0.01,
        };
        let model = fit_theta(&window, &params).unwrap();
        let forecast = forecast_theta(&model);

        // Plain SES with the same grid search, written independently.
        let mut best: Option<(f64, f64)> = None;
        for i in 1..100 {
            let lambda = 0.01 * i as f64;
            if lambda >= 1.0 - 1e-12 {
                break;
            }
            let mut level = window[0];
            let mut sse = 0.0;
            for &v in &window[1..] {
                let e = v - level;
                sse += e * e;
                level = lambda * v + (1.0 - lambda) * level;
            }
            if best.is_none_or(|(s, _)| sse < s) {
                best = Some((sse, level));
            }
        }
        let ses = best.unwrap().1;
        assert!(
            (forecast - ses).abs() < 1e-12,
            "theta(1) {forecast} vs ses {ses}"
        );
    }

    #[test]
    fn theta_matches_independent_reimplementation_on_sine_plus_trend() {
        let window: Vec<f64> = (0..365)
            .map(|i| 0.05 * i as f64 + (2.0 * std::f64::consts::PI * i as f64 / 30.0).sin())
            .collect();
        let model = fit_theta(&window, &ThetaParams::default()).unwrap();
        let forecast = forecast_theta(&model);
        let oracle = independent_theta_oracle(&window, 2.0, 0.01);
        assert!(
            (forecast - oracle).abs() < 1e-9,
            "{forecast} vs oracle {oracle}"
        );
        // Frozen value from an external implementation of the same equations.
        assert!((forecast - 18.991233787754688).abs() < 1e-9);
    }

    /// Step-by-step reimplementation of the theta equations kept deliberately
    /// naive and separate from the production code path.
    fn independent_theta_oracle(window: &[f64], theta: f64, step: f64) -> f64 {
        let n = window.len();
        let nf = n as f64;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let sx: f64 = xs.iter().sum();
        let sy: f64 = window.iter().sum();
        let sxy: f64 = xs.iter().zip(window).map(|(x, y)| x * y).sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
        let intercept = (sy - slope * sx) / nf;
        let z: Vec<f64> = (0..n)
            .map(|i| theta * window[i] + (1.0 - theta) * (intercept + slope * i as f64))
            .collect();
        let mut chosen = (f64::INFINITY, 0.0, 0.0);
        let mut i = 1;
        loop {
            let lambda = step * i as f64;
            if lambda >= 1.0 - 1e-12 {
                break;
            }
            let mut level = z[0];
            let mut sse = 0.0;
            for &value in &z[1..] {
                sse += (value - level) * (value - level);
                level = lambda * value + (1.0 - lambda) * level;
            }
            if sse < chosen.0 {
                chosen = (sse, lambda, level);
            }
            i += 1;
        }
        let (_, lambda, level) = chosen;
        let corr = 1.0 + (1.0 - lambda) / lambda * (1.0 - (1.0 - lambda).powi(n as i32 - 1));
        let z_next = level + (theta - 1.0) * slope * corr;
        (1.0 - 1.0 / theta) * (intercept + slope * nf) + (1.0 / theta) * z_next
    }

    #[test]
    fn forecasters_are_pure() {
        let window: Vec<f64> = (0..60).map(|i| (i as f64).sqrt() * 3.0 + 1.0).collect();
        for forecaster in [
            Forecaster::Ar(ArParams::default()),
            Forecaster::Theta(ThetaParams::default()),
        ] {
            let a = forecaster.fit_forecast(&window).unwrap();
            let b = forecaster.fit_forecast(&window).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn in_sample_scores_have_expected_length() {
        let window: Vec<f64> = (0..30).map(|i| (i as f64 * 0.5).cos() + 2.0).collect();
        let ar = Forecaster::Ar(ArParams::default())
            .in_sample_scores(&window)
            .unwrap();
        assert_eq!(ar.len(), 27);
        let theta = Forecaster::Theta(ThetaParams::default())
            .in_sample_scores(&window)
            .unwrap();
        assert_eq!(theta.len(), 29);
        assert!(ar.iter().chain(&theta).all(|s| s.is_finite() && *s >= 0.0));
    }
}
