//! The sigmoid-mixture relevance family and its windowed scale estimator.
//!
//! A relevance function maps the signed gap `x = s_t − q_t` to `(0, 1)`:
//!
//! ```text
//! f(x) = Σ_i ω_i · σ( (v_i / μ_t) · x − ln((1−α)/α) )
//! ```
//!
//! with `ω` on the positive simplex and `v_i > 0`. The shared offset makes
//! `f(0) = α` for every parameter choice, so a ground truth landing exactly
//! on an interval bound leaves the threshold unchanged. Dividing the slopes
//! by the windowed scale `μ_t` makes the function scale-free: rescaling the
//! data rescales the gaps and `μ_t` together and `f` is unchanged.
//!
//! `μ_t` is the absolute mean of the last `T_w` gaps, with the sum divided
//! by `T_w` even while the window is still filling; a strictly positive
//! floor keeps the slope finite before any gap has been observed.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RelevanceError {
    #[error("omega must be strictly positive and sum to 1 (got sum {sum})")]
    WeightsNotSimplex { sum: f64 },
    #[error("every v_i must be strictly positive")]
    NonPositiveSlope,
    #[error("alpha must lie in (0, 1), got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("omega has {omega} entries but v has {v}")]
    LengthMismatch { omega: usize, v: usize },
    #[error("window size T_w must be at least 1")]
    EmptyWindow,
    #[error("mu_floor must be strictly positive, got {floor}")]
    NonPositiveFloor { floor: f64 },
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// How the windowed scale aggregates gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMode {
    /// `|Σ gaps| / T_w`, the default; oscillating gaps cancel.
    #[default]
    SignedSum,
    /// `Σ |gaps| / T_w`, a flagged alternative that resists cancellation.
    AbsoluteMean,
}

/// One member of the relevance family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceParams {
    pub omega: Vec<f64>,
    pub v: Vec<f64>,
    pub alpha: f64,
    pub t_w: usize,
    pub mu_floor: f64,
    #[serde(default)]
    pub mu_mode: MuMode,
}

impl RelevanceParams {
    pub const DEFAULT_T_W: usize = 100;

    /// Builds and validates a parameter set with the default window size
    /// and a unit-scale floor; callers with data in hand should rescale the
    /// floor via [`RelevanceParams::with_mu_floor`].
    pub fn new(omega: Vec<f64>, v: Vec<f64>, alpha: f64) -> Result<Self, RelevanceError> {
        Self {
            omega,
            v,
            alpha,
            t_w: Self::DEFAULT_T_W,
            mu_floor: 1e-8,
            mu_mode: MuMode::SignedSum,
        }
        .validated()
    }

    pub fn with_t_w(mut self, t_w: usize) -> Result<Self, RelevanceError> {
        self.t_w = t_w;
        self.validated()
    }

    pub fn with_mu_floor(mut self, mu_floor: f64) -> Result<Self, RelevanceError> {
        self.mu_floor = mu_floor;
        self.validated()
    }

    pub fn with_mu_mode(mut self, mu_mode: MuMode) -> Result<Self, RelevanceError> {
        self.mu_mode = mu_mode;
        self.validated()
    }

    /// Checks the family constraints and returns the validated parameters.
    pub fn validated(self) -> Result<Self, RelevanceError> {
        if self.omega.len() != self.v.len() {
            return Err(RelevanceError::LengthMismatch {
                omega: self.omega.len(),
                v: self.v.len(),
            });
        }
        if self.omega.is_empty() {
            return Err(RelevanceError::WeightsNotSimplex { sum: 0.0 });
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let sum: f64 = self.omega.iter().sum();
        if !self.omega.iter().all(|&w| positive(w)) || (sum - 1.0).abs() > 1e-12 {
            return Err(RelevanceError::WeightsNotSimplex { sum });
        }
        if !self.v.iter().all(|&v| positive(v)) {
            return Err(RelevanceError::NonPositiveSlope);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(RelevanceError::AlphaOutOfRange { alpha: self.alpha });
        }
        if self.t_w == 0 {
            return Err(RelevanceError::EmptyWindow);
        }
        if !positive(self.mu_floor) {
            return Err(RelevanceError::NonPositiveFloor {
                floor: self.mu_floor,
            });
        }
        Ok(self)
    }

    /// The shared sigmoid offset `−ln((1−α)/α)`.
    pub fn offset(&self) -> f64 {
        -((1.0 - self.alpha) / self.alpha).ln()
    }

    /// Upper bound on the gradient: `Σ ω_i v_i / (4 μ)`.
    pub fn gradient_bound(&self, mu: f64) -> f64 {
        let mu = mu.max(self.mu_floor);
        self.omega
            .iter()
            .zip(&self.v)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            / (4.0 * mu)
    }
}

/// Evaluates the relevance function at gap `x` with scale `μ` (floored).
///
/// Strictly increasing in `x` with range `(0, 1)` and `f(0) = α`.
pub fn eval_f(params: &RelevanceParams, mu: f64, x: f64) -> f64 {
    let mu = mu.max(params.mu_floor);
    let b = params.offset();
    params
        .omega
        .iter()
        .zip(&params.v)
        .map(|(w, v)| w * sigmoid(v / mu * x + b))
        .sum()
}

/// Analytic gradient `Σ ω_i (v_i/μ) σ'(z_i)` with `σ' = σ(1−σ)`; strictly
/// positive and bounded by [`RelevanceParams::gradient_bound`].
pub fn grad_f(params: &RelevanceParams, mu: f64, x: f64) -> f64 {
    let mu = mu.max(params.mu_floor);
    let b = params.offset();
    params
        .omega
        .iter()
        .zip(&params.v)
        .map(|(w, v)| {
            let a = v / mu;
            let s = sigmoid(a * x + b);
            w * a * s * (1.0 - s)
        })
        .sum()
}

/// Windowed scale estimator `μ_t = |Σ of last T_w gaps| / T_w` (or the
/// flagged absolute-mean variant).
///
/// The running sum is recomputed exactly from the stored window every `T_w`
/// pushes so incremental rounding cannot drift.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleEstimator {
    window: VecDeque<f64>,
    sum: f64,
    t_w: usize,
    mode: MuMode,
    pushes_since_rebuild: usize,
}

impl ScaleEstimator {
    pub fn new(t_w: usize) -> Self {
        Self::with_mode(t_w, MuMode::SignedSum)
    }

    pub fn with_mode(t_w: usize, mode: MuMode) -> Self {
        Self {
            window: VecDeque::with_capacity(t_w.max(1) + 1),
            sum: 0.0,
            t_w: t_w.max(1),
            mode,
            pushes_since_rebuild: 0,
        }
    }

    fn contribution(&self, gap: f64) -> f64 {
        match self.mode {
            MuMode::SignedSum => gap,
            MuMode::AbsoluteMean => gap.abs(),
        }
    }

    /// Appends one gap, evicting beyond `T_w`.
    pub fn push(&mut self, gap: f64) {
        self.window.push_back(gap);
        self.sum += self.contribution(gap);
        if self.window.len() > self.t_w {
            let evicted = self.window.pop_front().expect("window non-empty");
            self.sum -= self.contribution(evicted);
        }
        self.pushes_since_rebuild += 1;
        if self.pushes_since_rebuild >= self.t_w {
            self.sum = self.window.iter().map(|&g| self.contribution(g)).sum();
            self.pushes_since_rebuild = 0;
        }
    }

    /// Current raw scale; zero while no gap has been seen. Callers clamp
    /// with the parameter floor via [`eval_f`] / [`grad_f`].
    pub fn mu(&self) -> f64 {
        self.sum.abs() / self.t_w as f64
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }
}
