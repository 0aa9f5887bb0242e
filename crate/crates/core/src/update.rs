//! Online threshold and level updaters.
//!
//! Every updater follows one contract: observe `(score, gap, miss)` for
//! step `t` and emit the raw threshold `q_{t+1}`. Four baselines (ACI, OGD,
//! conformal PID, ECI) and four relevance-aware variants (three PID
//! rewirings plus modified ECI) share it, so the experiment loop drives
//! them interchangeably.
//!
//! The PID scorecaster is fixed to the identity `ŝ_t = q_t`, turning the
//! update into proportional-integral control on the miss rate. The
//! integrator nonlinearity is `r_t(x) = K_I · tan(x·ln t / (t·C_sat))`
//! with the tangent's divergence replaced by a large finite cap; `r_1 ≡ 0`
//! since `ln 1 = 0`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::relevance::{eval_f, grad_f, sigmoid, RelevanceParams, ScaleEstimator};

/// Integrator saturation constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaturationConfig {
    /// Integral gain.
    pub k_i: f64,
    /// Time-scale constant inside the tangent argument.
    pub c_sat: f64,
    /// Finite stand-in for the tangent's ±∞ branch.
    pub output_cap: f64,
}

impl SaturationConfig {
    pub fn new(k_i: f64, c_sat: f64, output_cap: f64) -> Self {
        Self {
            k_i,
            c_sat,
            output_cap,
        }
    }
}

/// Saturation function `r_t(x)`; the tangent argument falling outside
/// `(−π/2, π/2)` returns `±output_cap`.
pub fn saturation(t: usize, x: f64, cfg: &SaturationConfig) -> f64 {
    let t = t.max(1) as f64;
    let arg = x * t.ln() / (t * cfg.c_sat);
    if arg >= std::f64::consts::FRAC_PI_2 {
        cfg.output_cap
    } else if arg <= -std::f64::consts::FRAC_PI_2 {
        -cfg.output_cap
    } else {
        cfg.k_i * arg.tan()
    }
}

/// The sub-linear, non-decreasing envelope `h` for which
/// `x ≥ c·h(t) ⇒ r_t(x) ≥ b` holds with `c = 1` and any `b ≤ output_cap`.
///
/// `t/ln t` dips between `t = 2` and `t = 4`, so the early values are
/// clamped to the `t = 2` level to keep `h` non-decreasing.
pub fn saturation_envelope(c_sat: f64) -> impl Fn(usize) -> f64 {
    move |t: usize| {
        let t = t.max(1) as f64;
        let ratio = (t / t.max(2.0).ln()).max(2.0 / std::f64::consts::LN_2);
        std::f64::consts::FRAC_PI_2 * c_sat * ratio
    }
}

/// Result of one updater observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepUpdate {
    pub next_threshold: f64,
    /// Relevance value used in the update; `None` for baselines.
    pub relevance: Option<f64>,
}

fn indicator(miss: bool) -> f64 {
    if miss {
        1.0
    } else {
        0.0
    }
}

/// Adaptive conformal inference: updates the miscoverage level and rebuilds
/// the threshold as an empirical quantile of a rolling score window.
#[derive(Debug, Clone)]
pub struct AciUpdater {
    q: f64,
    alpha_target: f64,
    alpha_t: f64,
    gamma: f64,
    scores: VecDeque<f64>,
    window_len: usize,
    t: usize,
}

impl AciUpdater {
    pub fn new(q0: f64, alpha: f64, gamma: f64, window_len: usize) -> Self {
        Self {
            q: q0,
            alpha_target: alpha,
            alpha_t: alpha,
            gamma,
            scores: VecDeque::new(),
            window_len: window_len.max(1),
            t: 0,
        }
    }

    pub fn alpha_t(&self) -> f64 {
        self.alpha_t
    }

    /// Level update `α_{t+1} = α_t + γ(α − 1{miss})`, then the threshold is
    /// the linearly interpolated `(1 − α_{t+1})` quantile of the window.
    /// The level is clipped to `[0.001, 0.999]` when the quantile is taken
    /// so it stays defined even if the level escapes `(0, 1)`.
    pub fn step(&mut self, score: f64, miss: bool) -> f64 {
        self.t += 1;
        self.alpha_t += self.gamma * (self.alpha_target - indicator(miss));
        self.scores.push_back(score);
        if self.scores.len() > self.window_len {
            self.scores.pop_front();
        }
        let mut sorted: Vec<f64> = self.scores.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let level = 1.0 - self.alpha_t.clamp(0.001, 0.999);
        self.q = interpolated_quantile(&sorted, level);
        self.q
    }
}

/// Linear-interpolation quantile of an already sorted, non-empty slice.
fn interpolated_quantile(sorted: &[f64], level: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let h = level.clamp(0.0, 1.0) * (m - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Learning-rate schedule for OGD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EtaSchedule {
    Constant(f64),
    /// `η_t = t^{−1/2−ε}`.
    Decaying {
        epsilon: f64,
    },
}

impl EtaSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            EtaSchedule::Constant(eta) => *eta,
            EtaSchedule::Decaying { epsilon } => (t.max(1) as f64).powf(-0.5 - epsilon),
        }
    }
}

/// Online subgradient descent on the pinball loss:
/// `q_{t+1} = q_t + η_t (1{miss} − α)`.
#[derive(Debug, Clone)]
pub struct OgdUpdater {
    q: f64,
    alpha: f64,
    schedule: EtaSchedule,
    t: usize,
}

impl OgdUpdater {
    pub fn new(q0: f64, alpha: f64, schedule: EtaSchedule) -> Self {
        Self {
            q: q0,
            alpha,
            schedule,
            t: 0,
        }
    }

    pub fn step(&mut self, miss: bool) -> f64 {
        self.t += 1;
        self.q += self.schedule.at(self.t) * (indicator(miss) - self.alpha);
        self.q
    }
}

/// Which error signals feed the PID proportional term and the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PidMode {
    /// Miss indicator in both terms.
    Baseline,
    /// Relevance value in both terms.
    Full,
    /// Indicator in the proportional term, relevance in the integrator.
    Half,
    /// Relevance in the proportional term, indicator in the integrator.
    HalfBis,
}

impl PidMode {
    pub fn needs_relevance(&self) -> bool {
        !matches!(self, PidMode::Baseline)
    }
}

/// Mutable relevance machinery: parameters plus the gap window feeding μ.
#[derive(Debug, Clone)]
struct RelevanceState {
    params: RelevanceParams,
    scale: ScaleEstimator,
}

impl RelevanceState {
    fn new(params: RelevanceParams) -> Self {
        let scale = ScaleEstimator::with_mode(params.t_w, params.mu_mode);
        Self { params, scale }
    }

    /// μ before the current gap is absorbed.
    fn mu(&self) -> f64 {
        self.scale.mu()
    }

    fn absorb(&mut self, gap: f64) {
        self.scale.push(gap);
    }
}

/// Conformal PID control with identity scorecaster, in all four wirings.
#[derive(Debug, Clone)]
pub struct PidUpdater {
    mode: PidMode,
    q: f64,
    eta: f64,
    alpha: f64,
    integral_sum: f64,
    t: usize,
    saturation: SaturationConfig,
    relevance: Option<RelevanceState>,
}

impl PidUpdater {
    pub fn baseline(q0: f64, eta: f64, alpha: f64, saturation: SaturationConfig) -> Self {
        Self {
            mode: PidMode::Baseline,
            q: q0,
            eta,
            alpha,
            integral_sum: 0.0,
            t: 0,
            saturation,
            relevance: None,
        }
    }

    /// A relevance-aware wiring; `mode` must not be [`PidMode::Baseline`].
    pub fn relevance_aware(
        mode: PidMode,
        q0: f64,
        eta: f64,
        alpha: f64,
        saturation: SaturationConfig,
        params: RelevanceParams,
    ) -> Self {
        assert!(mode.needs_relevance(), "use PidUpdater::baseline");
        Self {
            mode,
            q: q0,
            eta,
            alpha,
            integral_sum: 0.0,
            t: 0,
            saturation,
            relevance: Some(RelevanceState::new(params)),
        }
    }

    pub fn integral_sum(&self) -> f64 {
        self.integral_sum
    }

    pub fn mode(&self) -> PidMode {
        self.mode
    }

    /// Hook for time-varying (ω, v) schedules; no schedule ships with the
    /// crate, callers may swap parameters between steps.
    pub fn set_relevance_params(&mut self, params: RelevanceParams) {
        if let Some(state) = self.relevance.as_mut() {
            state.params = params;
        }
    }

    fn advance(&mut self, e_prop: f64, e_int: f64) -> f64 {
        self.t += 1;
        self.integral_sum += e_int - self.alpha;
        self.q += self.eta * (e_prop - self.alpha)
            + saturation(self.t, self.integral_sum, &self.saturation);
        self.q
    }

    /// Baseline update: indicator in both terms.
    pub fn pid_step(&mut self, miss: bool) -> f64 {
        let e = indicator(miss);
        self.advance(e, e)
    }

    /// Relevance value replaces the indicator everywhere.
    pub fn pid_full_step(&mut self, f_value: f64) -> f64 {
        self.advance(f_value, f_value)
    }

    /// Relevance value only inside the integrator.
    pub fn pid_half_step(&mut self, miss: bool, f_value: f64) -> f64 {
        self.advance(indicator(miss), f_value)
    }

    /// Relevance value only in the proportional term.
    pub fn pid_half_bis_step(&mut self, miss: bool, f_value: f64) -> f64 {
        self.advance(f_value, indicator(miss))
    }
}

/// Smoothing used by the ECI gap-gradient term.
#[derive(Debug, Clone)]
pub enum EciMode {
    /// `g(x) = σ(λx)`; the gradient term is `x·λσ(λx)(1−σ(λx))`.
    Sigmoid { lambda: f64 },
    /// The relevance family's gradient replaces `∇g`.
    Relevance(Box<RelevanceParams>),
}

/// Error-quantified conformal inference:
/// `q_{t+1} = q_t + η [1{miss} − α + (s−q)·∇g(s−q)]`.
#[derive(Debug, Clone)]
pub struct EciUpdater {
    mode: EciMode,
    q: f64,
    eta: f64,
    alpha: f64,
    t: usize,
    relevance: Option<RelevanceState>,
}

impl EciUpdater {
    pub fn sigmoid(q0: f64, eta: f64, alpha: f64, lambda: f64) -> Self {
        Self {
            mode: EciMode::Sigmoid { lambda },
            q: q0,
            eta,
            alpha,
            t: 0,
            relevance: None,
        }
    }

    pub fn relevance_aware(q0: f64, eta: f64, alpha: f64, params: RelevanceParams) -> Self {
        Self {
            mode: EciMode::Relevance(Box::new(params.clone())),
            q: q0,
            eta,
            alpha,
            t: 0,
            relevance: Some(RelevanceState::new(params)),
        }
    }

    pub fn set_relevance_params(&mut self, params: RelevanceParams) {
        if let Some(state) = self.relevance.as_mut() {
            self.mode = EciMode::Relevance(Box::new(params.clone()));
            state.params = params;
        }
    }

    /// Baseline step with the sigmoid smoother.
    pub fn eci_step(&mut self, miss: bool, gap: f64) -> f64 {
        let lambda = match &self.mode {
            EciMode::Sigmoid { lambda } => *lambda,
            EciMode::Relevance(_) => panic!("use eci_modified_step"),
        };
        self.t += 1;
        let s = sigmoid(lambda * gap);
        let grad = lambda * s * (1.0 - s);
        self.q += self.eta * (indicator(miss) - self.alpha + gap * grad);
        self.q
    }

    /// Modified step with the relevance gradient at scale `mu`.
    pub fn eci_modified_step(
        &mut self,
        miss: bool,
        gap: f64,
        params: &RelevanceParams,
        mu: f64,
    ) -> f64 {
        self.t += 1;
        let grad = grad_f(params, mu, gap);
        self.q += self.eta * (indicator(miss) - self.alpha + gap * grad);
        self.q
    }
}

/// Any of the eight shipped updaters behind the single online contract.
#[derive(Debug, Clone)]
pub enum ThresholdUpdater {
    Aci(AciUpdater),
    Ogd(OgdUpdater),
    Pid(PidUpdater),
    Eci(EciUpdater),
}

impl ThresholdUpdater {
    /// Raw threshold the next interval will be built from.
    pub fn threshold(&self) -> f64 {
        match self {
            ThresholdUpdater::Aci(u) => u.q,
            ThresholdUpdater::Ogd(u) => u.q,
            ThresholdUpdater::Pid(u) => u.q,
            ThresholdUpdater::Eci(u) => u.q,
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self {
            ThresholdUpdater::Aci(_) => "aci",
            ThresholdUpdater::Ogd(_) => "ogd",
            ThresholdUpdater::Pid(u) => match u.mode {
                PidMode::Baseline => "pid",
                PidMode::Full => "pid-full",
                PidMode::Half => "pid-half",
                PidMode::HalfBis => "pid-half-bis",
            },
            ThresholdUpdater::Eci(u) => match u.mode {
                EciMode::Sigmoid { .. } => "eci",
                EciMode::Relevance(_) => "eci-mod",
            },
        }
    }

    /// Feeds one revealed step to the updater and returns the next raw
    /// threshold plus the relevance value consumed, when applicable.
    ///
    /// For relevance-aware methods the scale μ is taken from gaps strictly
    /// before the current step; the current gap enters the window after the
    /// update so step `t` never sees its own gap in μ.
    pub fn observe(&mut self, score: f64, gap: f64, miss: bool) -> StepUpdate {
        match self {
            ThresholdUpdater::Aci(u) => StepUpdate {
                next_threshold: u.step(score, miss),
                relevance: None,
            },
            ThresholdUpdater::Ogd(u) => StepUpdate {
                next_threshold: u.step(miss),
                relevance: None,
            },
            ThresholdUpdater::Pid(u) => match u.mode {
                PidMode::Baseline => StepUpdate {
                    next_threshold: u.pid_step(miss),
                    relevance: None,
                },
                mode => {
                    let state = u.relevance.as_mut().expect("relevance mode has state");
                    let mu = state.mu();
                    let f_value = eval_f(&state.params, mu, gap);
                    state.absorb(gap);
                    let next = match mode {
                        PidMode::Full => u.pid_full_step(f_value),
                        PidMode::Half => u.pid_half_step(miss, f_value),
                        PidMode::HalfBis => u.pid_half_bis_step(miss, f_value),
                        PidMode::Baseline => unreachable!(),
                    };
                    StepUpdate {
                        next_threshold: next,
                        relevance: Some(f_value),
                    }
                }
            },
            ThresholdUpdater::Eci(u) => match &u.mode {
                EciMode::Sigmoid { .. } => StepUpdate {
                    next_threshold: u.eci_step(miss, gap),
                    relevance: None,
                },
                EciMode::Relevance(params) => {
                    let params = params.as_ref().clone();
                    let state = u.relevance.as_mut().expect("relevance mode has state");
                    let mu = state.mu();
                    let f_value = eval_f(&params, mu, gap);
                    state.absorb(gap);
                    let next = u.eci_modified_step(miss, gap, &params, mu);
                    StepUpdate {
                        next_threshold: next,
                        relevance: Some(f_value),
                    }
                }
            },
        }
    }
}
