//! Random walks `X_{n+1} = g_τ r_{θ_n} X_n` and geodesic fans `g_t r_θ q`
//! on translation surfaces, with the empirical tail statistics built on them.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::deviations::{deviation_rate, extract_sojourns, DeviationError, RateResult, TailModel};
use crate::flat::{self, shortest_with_budget, v0_from_length, FlatError, TranslationSurface};
use crate::hyperbolic::Isometry2;
use crate::markov::ChainModel;
use crate::seed;
use crate::stats::{linear_fit, wilson, LinearFit, CONFIDENCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Flat(#[from] FlatError),
    #[error("l is too small: {0}")]
    LevelTooSmall(String),
    #[error(transparent)]
    Deviation(#[from] DeviationError),
}

pub type Result<T> = std::result::Result<T, WalkError>;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WalkConfig {
    pub tau: f64,
    pub delta: f64,
    pub l: f64,
    pub l0: f64,
    pub n_steps: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub dt: f64,
    pub budget: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            tau: 2.0,
            delta: 0.5,
            l: 4.0,
            l0: 2.0,
            n_steps: 100,
            n_trials: 256,
            seed: 1,
            dt: 0.05,
            budget: flat::DEFAULT_BUDGET,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WalkError::Config(m));
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return bad(format!("tau = {} must be non-negative", self.tau));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} must lie in (0, 1)", self.delta));
        }
        if !(self.l > self.l0 && self.l0 > 0.0) {
            return bad(format!("need l > l0 > 0 (got l = {}, l0 = {})", self.l, self.l0));
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        Ok(())
    }

    /// `V₀(s)`, or `None` once `s` is past the depth floor or the enumeration budget.
    fn sample(&self, s: &TranslationSurface) -> Result<Option<f64>> {
        match shortest_with_budget(s, self.budget) {
            Ok(ell) if ell < DEPTH_FLOOR => Ok(None),
            Ok(ell) => Ok(Some(v0_from_length(ell, self.delta))),
            Err(FlatError::BudgetExceeded { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

/// Shortest saddle connection below which a trajectory is stopped as lost in the cusp.
pub const DEPTH_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub v_values: Vec<f64>,
    /// Fan direction; `None` for random walks.
    pub theta: Option<f64>,
    /// Angles `θ_n` drawn by a random walk.
    pub angles: Vec<f64>,
    /// Stopped early, either below `DEPTH_FLOOR` or out of enumeration budget.
    /// The trajectory is then far outside every level set in use.
    pub truncated: bool,
}

impl TrajectoryRecord {
    fn new(theta: Option<f64>, capacity: usize) -> Self {
        TrajectoryRecord {
            times: Vec::with_capacity(capacity),
            v_values: Vec::with_capacity(capacity),
            theta,
            angles: Vec::new(),
            truncated: false,
        }
    }

    /// Records `V(s)` at `time`; false when the trajectory was truncated instead.
    fn push(&mut self, cfg: &WalkConfig, time: f64, s: &TranslationSurface) -> Result<bool> {
        match cfg.sample(s)? {
            Some(v) => {
                self.times.push(time);
                self.v_values.push(v);
                Ok(true)
            }
            None => {
                self.truncated = true;
                Ok(false)
            }
        }
    }
}

/// `g_τ r_θ · s`, re-triangulated by Delaunay flips.
pub fn walk_step(s: &TranslationSurface, tau: f64, theta: f64) -> Result<TranslationSurface> {
    let m = Isometry2::geodesic(tau).compose(&Isometry2::rotation(theta));
    Ok(s.apply_linear_delaunay(&m)?)
}

fn walk_trial(s0: &TranslationSurface, cfg: &WalkConfig, index: u64) -> Result<TrajectoryRecord> {
    let mut rng = seed::stream(cfg.seed, index);
    let mut s = s0.clone();
    let mut rec = TrajectoryRecord::new(None, cfg.n_steps + 1);
    if !rec.push(cfg, 0.0, &s)? {
        return Ok(rec);
    }
    for n in 1..=cfg.n_steps {
        let theta = rng.gen_range(0.0..TAU);
        s = walk_step(&s, cfg.tau, theta)?;
        if !rec.push(cfg, n as f64, &s)? {
            break;
        }
        rec.angles.push(theta);
    }
    Ok(rec)
}

/// One random walk, using stream 0 of the configured seed.
pub fn run_walk(s0: &TranslationSurface, cfg: &WalkConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    walk_trial(s0, cfg, 0)
}

/// `cfg.n_trials` independent walks; trial `i` uses stream `i`.
pub fn run_walks(s0: &TranslationSurface, cfg: &WalkConfig) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    (0..cfg.n_trials as u64).into_par_iter().map(|i| walk_trial(s0, cfg, i)).collect()
}

fn fan_trajectory(s0: &TranslationSurface, theta: f64, t_max: f64, cfg: &WalkConfig) -> Result<TrajectoryRecord> {
    let steps = (t_max / cfg.dt + 1e-9).floor() as usize;
    let mut s = s0.apply_linear_delaunay(&Isometry2::rotation(theta))?;
    let step = Isometry2::geodesic(cfg.dt);
    let mut rec = TrajectoryRecord::new(Some(theta), steps + 1);
    for k in 0..=steps {
        if k > 0 {
            s = s.apply_linear_delaunay(&step)?;
        }
        if !rec.push(cfg, k as f64 * cfg.dt, &s)? {
            break;
        }
    }
    Ok(rec)
}

/// `θ_k = 2π(k + 1/2)/n`. The half-step offset keeps the grid off the
/// periodic directions `0, π/2, …` of square-tiled surfaces.
pub fn fan_angle(k: usize, n_angles: usize) -> f64 {
    TAU * (k as f64 + 0.5) / n_angles as f64
}

/// The single trajectory `g_t r_θ s0`, `t = 0, dt, …, T`.
pub fn flow_trajectory(s0: &TranslationSurface, theta: f64, t_max: f64, cfg: &WalkConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(WalkError::Config(format!("T = {t_max} must be non-negative")));
    }
    fan_trajectory(s0, theta, t_max, cfg)
}

/// Trajectories `g_t r_θ s0`, `t = 0, dt, …, T`, for `θ = fan_angle(k, n_angles)`.
pub fn run_flow_fan(s0: &TranslationSurface, n_angles: usize, t_max: f64, cfg: &WalkConfig) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    if n_angles < 2 {
        return Err(WalkError::Config(format!("n_angles = {n_angles} must be at least 2")));
    }
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(WalkError::Config(format!("T = {t_max} must be non-negative")));
    }
    (0..n_angles)
        .into_par_iter()
        .map(|k| fan_trajectory(s0, fan_angle(k, n_angles), t_max, cfg))
        .collect()
}

/// An empirical curve `T ↦ fraction` with 99% Wilson limits and a log-linear fit.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TailCurve {
    pub times: Vec<f64>,
    pub fraction: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub trials: usize,
    /// Least squares of `ln fraction` against `T`, up to the last `T` with at
    /// least `FIT_MIN_COUNT` trials still counted.
    pub fit: Option<LinearFit>,
}

pub const FIT_MIN_COUNT: u64 = 10;

impl TailCurve {
    fn from_counts(times: Vec<f64>, counts: Vec<u64>, trials: usize) -> Self {
        let n = trials as u64;
        let fraction: Vec<f64> = counts.iter().map(|&k| k as f64 / trials as f64).collect();
        let (ci_lo, ci_hi) = counts.iter().map(|&k| wilson(k, n, CONFIDENCE)).unzip();
        let end = times
            .iter()
            .zip(&counts)
            .filter(|(_, k)| **k >= FIT_MIN_COUNT)
            .map(|(t, _)| *t)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut curve = TailCurve {
            times,
            fraction,
            ci_lo,
            ci_hi,
            trials,
            fit: None,
        };
        curve.fit = curve.log_fit(f64::NEG_INFINITY, end);
        curve
    }

    /// Log-linear fit restricted to `t ∈ [lo, hi]` and nonzero fractions.
    pub fn log_fit(&self, lo: f64, hi: f64) -> Option<LinearFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.fraction)
            .filter(|(t, f)| **f > 0.0 && **t >= lo && **t <= hi)
            .map(|(t, f)| (*t, f.ln()))
            .unzip();
        linear_fit(&xs, &ys)
    }

    /// Decay rate `-slope` of the full log-linear fit.
    pub fn rate(&self) -> Option<f64> {
        self.fit.map(|f| -f.slope)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.fraction.windows(2).all(|w| w[1] <= w[0])
    }
}

fn common_times(fan: &[TrajectoryRecord]) -> Vec<f64> {
    fan.iter().max_by_key(|r| r.times.len()).map(|r| r.times.clone()).unwrap_or_default()
}

/// Fraction of fan directions with no sample in `C_l = {V ≤ l}` up to time `T`.
pub fn first_hit_tail(fan: &[TrajectoryRecord], l: f64) -> Result<TailCurve> {
    if fan.is_empty() {
        return Err(WalkError::Config("empty fan".into()));
    }
    let times = common_times(fan);
    let mut counts = vec![0u64; times.len()];
    for rec in fan {
        // number of leading samples outside C_l; truncated records count as outside afterwards
        let mut first_in = rec.v_values.iter().position(|v| *v <= l).unwrap_or(usize::MAX);
        if first_in == usize::MAX && !rec.truncated {
            first_in = rec.v_values.len();
        }
        for c in counts.iter_mut().take(first_in.min(times.len())) {
            *c += 1;
        }
    }
    Ok(TailCurve::from_counts(times, counts, fan.len()))
}

/// Fraction of directions with `V > l` at every sample in `[S, S + T]`.
pub fn window_miss_from_fan(fan: &[TrajectoryRecord], l: f64, s: f64, t: f64) -> f64 {
    let eps = 1e-9;
    let miss = fan
        .iter()
        .filter(|rec| {
            rec.times
                .iter()
                .zip(&rec.v_values)
                .filter(|(time, _)| **time >= s - eps && **time <= s + t + eps)
                .all(|(_, v)| *v > l)
        })
        .count();
    miss as f64 / fan.len() as f64
}

/// The window-miss fraction for each `T` in `ts`, at fixed `S`.
pub fn window_miss_curve(fan: &[TrajectoryRecord], l: f64, s: f64, ts: &[f64]) -> TailCurve {
    let counts = ts
        .iter()
        .map(|&t| (window_miss_from_fan(fan, l, s, t) * fan.len() as f64).round() as u64)
        .collect();
    TailCurve::from_counts(ts.to_vec(), counts, fan.len())
}

/// Builds a fan of `cfg.n_trials` directions up to `S + T` and measures the window-miss fraction.
pub fn window_miss_fraction(s0: &TranslationSurface, s: f64, t: f64, cfg: &WalkConfig) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(WalkError::Config(format!("need S, T ≥ 0 (got {s}, {t})")));
    }
    let fan = run_flow_fan(s0, cfg.n_trials.max(2), s + t, cfg)?;
    Ok(window_miss_from_fan(&fan, cfg.l, s, t))
}

/// Time-`T` fraction spent outside `C_l` by one record, from left Riemann sums on its samples.
pub fn outside_fraction(rec: &TrajectoryRecord, l: f64, t: f64) -> f64 {
    let Some(&first) = rec.v_values.first() else {
        return if rec.truncated { 1.0 } else { 0.0 };
    };
    if t <= 0.0 {
        return if first > l { 1.0 } else { 0.0 };
    }
    let mut outside = 0.0;
    for w in 0..rec.times.len().saturating_sub(1) {
        let (a, b) = (rec.times[w], rec.times[w + 1].min(t));
        if a >= t {
            break;
        }
        if rec.v_values[w] > l {
            outside += b - a;
        }
    }
    let last = rec.times[rec.times.len() - 1];
    if rec.truncated && last < t {
        outside += t - last;
    }
    outside / t
}

/// Fraction of directions whose time-`T` outside fraction exceeds `λ`.
pub fn occupation_tail(fan: &[TrajectoryRecord], l: f64, lambda: f64) -> Result<TailCurve> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(WalkError::Config(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    if fan.is_empty() {
        return Err(WalkError::Config("empty fan".into()));
    }
    let grid = common_times(fan);
    let zero = vec![0u64; grid.len()];
    let counts = fan
        .par_iter()
        .fold(
            || zero.clone(),
            |mut acc, rec| {
                // cumulative outside time at each sample, extended past a truncation as outside
                let mut cum = 0.0;
                for j in 1..grid.len() {
                    let t = grid[j];
                    let outside = if j < rec.times.len() {
                        if rec.v_values[j - 1] > l {
                            cum += rec.times[j] - rec.times[j - 1];
                        }
                        cum
                    } else if let Some(&last) = rec.times.last() {
                        cum + if rec.truncated { t - last } else { 0.0 }
                    } else if rec.truncated {
                        t
                    } else {
                        0.0
                    };
                    if outside / t > lambda {
                        acc[j] += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| zero.clone(), |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    Ok(TailCurve::from_counts(grid[1..].to_vec(), counts[1..].to_vec(), fan.len()))
}

/// `V` values of a fan from `s0` at sampled times `t ≥ burn_in`, as a proxy
/// for the stationary distribution of `V` on the orbit closure.
pub fn stationary_sample(s0: &TranslationSurface, n_angles: usize, burn_in: f64, horizon: f64, cfg: &WalkConfig) -> Result<Vec<f64>> {
    if !(horizon > burn_in && burn_in >= 0.0) {
        return Err(WalkError::Config(format!("need 0 ≤ burn-in < horizon (got {burn_in}, {horizon})")));
    }
    let fan = run_flow_fan(s0, n_angles, horizon, cfg)?;
    Ok(fan
        .iter()
        .flat_map(|r| r.times.iter().zip(&r.v_values).filter(|(t, _)| **t >= burn_in).map(|(_, v)| *v))
        .collect())
}

/// Outside sojourns `η` and merged cycle lengths `ξ` from every record of a
/// fan, skipping each record's first cycle (it depends on the start) and its
/// last, censored one.
pub fn sojourn_samples(fan: &[TrajectoryRecord], l: f64, l0: f64, c_prime: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut eta, mut xi) = (Vec::new(), Vec::new());
    for rec in fan {
        if rec.times.len() < 2 {
            continue;
        }
        let trace: Vec<(f64, f64)> = rec.times.iter().copied().zip(rec.v_values.iter().copied()).collect();
        let seq = extract_sojourns(&trace, l, l0, c_prime)?;
        let cycles = seq.merged.len() / 2;
        // a trailing inside sojourn means the last full cycle is complete
        let complete = if seq.merged.len() % 2 == 1 { cycles } else { cycles.saturating_sub(1) };
        for i in 1..complete {
            eta.push(seq.merged[2 * i + 1]);
            xi.push(seq.merged[2 * i] + seq.merged[2 * i + 1]);
        }
    }
    Ok((eta, xi))
}

/// Large-deviation rate for the outside occupation of a fan, from the
/// empirical laws of its sojourns.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SojournRate {
    pub rate: RateResult,
    pub cycles: usize,
    pub eta_mean: f64,
    pub xi_mean: f64,
    pub theta0: f64,
}

pub fn sojourn_rate(fan: &[TrajectoryRecord], l: f64, l0: f64, c_prime: f64, lambda: f64) -> Result<SojournRate> {
    let (eta, xi) = sojourn_samples(fan, l, l0, c_prime)?;
    let cycles = eta.len();
    let eta = TailModel::empirical(eta)?;
    let xi = TailModel::empirical(xi)?;
    let theta0 = eta.theta_max().min(xi.theta_max());
    let rate = deviation_rate(&eta, &xi, lambda, theta0)?;
    Ok(SojournRate {
        rate,
        cycles,
        eta_mean: eta.mean(),
        xi_mean: xi.mean(),
        theta0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CompositionReport {
    /// `max ci_hi(T)/γ^T` over sampled `T < T_min`.
    pub c_fit: f64,
    /// Sampled times at or beyond `T_min`.
    pub checked: usize,
    /// `fraction(T) ≤ C·γ^T` at every checked time.
    pub holds: bool,
}

/// Fits `C` on the times before `T_min` and checks the curve against `C·γ^T` from `T_min` on.
pub fn composition_check(curve: &TailCurve, gamma: f64, t_min: f64) -> CompositionReport {
    let c_fit = curve
        .times
        .iter()
        .zip(&curve.ci_hi)
        .filter(|(t, _)| **t < t_min)
        .map(|(t, hi)| hi / gamma.powf(*t))
        .fold(f64::MIN_POSITIVE, f64::max);
    let later: Vec<(f64, f64)> = curve
        .times
        .iter()
        .copied()
        .zip(curve.fraction.iter().copied())
        .filter(|(t, _)| *t >= t_min)
        .collect();
    let holds = later.iter().all(|(t, f)| *f <= c_fit * gamma.powf(*t));
    CompositionReport {
        c_fit,
        checked: later.len(),
        holds,
    }
}

/// `δ′` before and after clamping to `δ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EffectiveRate {
    pub raw: f64,
    pub delta_prime: f64,
    /// `τ` attaining the supremum on the grid.
    pub tau_star: f64,
}

const RATE_GRID: usize = 64;

/// `δ′ = δ + sup_{τ₀ ≤ τ ≤ 2τ₀} (1/τ) ln(c + (b/l′) e^{(1-δ)τ})` with `l′ = l`.
pub fn effective_rate(delta: f64, c: f64, b: f64, l: f64, tau0: f64) -> Result<EffectiveRate> {
    if !(delta > 0.0 && delta < 1.0) || !(c > 0.0) || !(b > 0.0) || !(l > 0.0) || !(tau0 > 0.0) {
        return Err(WalkError::Config(format!(
            "invalid parameters δ = {delta}, c = {c}, b = {b}, l = {l}, τ₀ = {tau0}"
        )));
    }
    if !(c * (-(1.0 - delta) * tau0).exp() < 1.0) {
        return Err(WalkError::Config(format!(
            "c·e^(-(1-δ)τ₀) = {} must be below 1",
            c * (-(1.0 - delta) * tau0).exp()
        )));
    }
    let mut best = EffectiveRate {
        raw: f64::NEG_INFINITY,
        delta_prime: delta,
        tau_star: tau0,
    };
    for k in 0..RATE_GRID {
        let tau = tau0 * (1.0 + k as f64 / (RATE_GRID - 1) as f64);
        // per-step factor of the hitting bound at step τ; δ′ < 1 iff it is below 1
        let factor = c * (-(1.0 - delta) * tau).exp() + b / l;
        if factor >= 1.0 {
            return Err(WalkError::LevelTooSmall(format!("c·e^(-(1-δ)τ) + b/l = {factor:.4} at τ = {tau:.4}")));
        }
        let value = delta + (c + b / l * ((1.0 - delta) * tau).exp()).ln() / tau;
        if value > best.raw {
            best.raw = value;
            best.tau_star = tau;
        }
    }
    best.delta_prime = best.raw.max(delta);
    Ok(best)
}

/// The random walk as a Markov chain on surfaces, with `V = V₀`.
pub struct SurfaceWalkChain {
    pub tau: f64,
    pub delta: f64,
    pub budget: usize,
}

impl ChainModel for SurfaceWalkChain {
    type State = TranslationSurface;

    fn step(&self, x: &TranslationSurface, rng: &mut ChaCha8Rng) -> TranslationSurface {
        let theta = rng.gen_range(0.0..TAU);
        walk_step(x, self.tau, theta).unwrap_or_else(|_| x.clone())
    }

    fn lyapunov(&self, x: &TranslationSurface) -> f64 {
        shortest_with_budget(x, self.budget)
            .map(|l| v0_from_length(l, self.delta))
            .unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat::builtin;

    fn cfg() -> WalkConfig {
        WalkConfig {
            n_steps: 20,
            n_trials: 4,
            ..WalkConfig::default()
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let s = builtin("L3").unwrap();
        let t = walk_step(&s, 0.0, 0.0).unwrap();
        assert_eq!(flat::shortest_saddle_connection(&t).unwrap(), 1.0);
        assert!((t.area() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_flat_steps_compose() {
        let s = builtin("torus").unwrap();
        let two = walk_step(&walk_step(&s, 0.4, 0.0).unwrap(), 0.4, 0.0).unwrap();
        let once = walk_step(&s, 0.8, 0.0).unwrap();
        let (a, b) = (
            flat::shortest_saddle_connection(&two).unwrap(),
            flat::shortest_saddle_connection(&once).unwrap(),
        );
        assert!((a - b).abs() < 1e-12 && (a - (-0.8f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn walk_is_deterministic_and_growth_capped() {
        let s = builtin("L3").unwrap();
        let c = cfg();
        let a = run_walk(&s, &c).unwrap();
        let b = run_walk(&s, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.v_values.len(), 21);
        for w in a.v_values.windows(2) {
            assert!((w[1].ln() - w[0].ln()).abs() <= (1.0 + c.delta) * c.tau + 1e-9);
        }
        let zero = run_walk(&s, &WalkConfig { n_steps: 0, ..cfg() }).unwrap();
        assert_eq!(zero.v_values, vec![1.0]);
    }

    #[test]
    fn fan_at_time_zero_is_k_invariant() {
        let s = builtin("L3").unwrap().apply_linear_delaunay(&Isometry2::geodesic(1.0)).unwrap();
        let fan = run_flow_fan(&s, 16, 0.0, &cfg()).unwrap();
        let v0 = fan[0].v_values[0];
        assert!(fan.iter().all(|r| r.v_values.len() == 1 && (r.v_values[0] - v0).abs() < 1e-9 * v0));
    }

    #[test]
    fn torus_fan_closed_form() {
        let s = builtin("torus").unwrap();
        let c = WalkConfig { dt: 0.05, ..cfg() };
        let rec = flow_trajectory(&s, 0.0, 3.0, &c).unwrap();
        assert_eq!(rec.times.len(), 61);
        for (t, v) in rec.times.iter().zip(&rec.v_values) {
            let expected = ((1.0 + c.delta) * t).exp();
            assert!(((v - expected) / expected).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn first_hit_curve_is_monotone() {
        let s = builtin("L3").unwrap().apply_linear_delaunay(&Isometry2::geodesic(2.0)).unwrap();
        let fan = run_flow_fan(&s, 32, 4.0, &WalkConfig { dt: 0.1, ..cfg() }).unwrap();
        let curve = first_hit_tail(&fan, 5.0).unwrap();
        assert!(curve.is_non_increasing());
        assert_eq!(curve.fraction[0], 1.0);
        let max_v = fan.iter().map(|r| r.v_values[1]).fold(0.0, f64::max);
        let all_in = first_hit_tail(&fan, max_v).unwrap();
        assert!(all_in.fraction[1..].iter().all(|f| *f == 0.0));
    }

    #[test]
    fn window_miss_and_occupation_are_monotone() {
        let s = builtin("L3").unwrap().apply_linear_delaunay(&Isometry2::geodesic(2.0)).unwrap();
        let fan = run_flow_fan(&s, 32, 4.0, &WalkConfig { dt: 0.1, ..cfg() }).unwrap();
        let ts = [0.0, 0.5, 1.0, 2.0];
        let w = window_miss_curve(&fan, 5.0, 1.0, &ts);
        assert!(w.is_non_increasing());
        let occ = occupation_tail(&fan, 1e9, 0.99).unwrap();
        assert!(occ.fraction.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn occupation_prefix_sums_match_direct_fraction() {
        let s = builtin("L3").unwrap();
        let fan = run_flow_fan(&s, 24, 6.0, &WalkConfig { dt: 0.1, ..cfg() }).unwrap();
        let l = 1.5;
        let curve = occupation_tail(&fan, l, 0.3).unwrap();
        for (t, f) in curve.times.iter().zip(&curve.fraction) {
            let direct = fan.iter().filter(|r| outside_fraction(r, l, *t) > 0.3).count() as f64 / fan.len() as f64;
            assert_eq!(*f, direct, "T = {t}");
        }
    }

    #[test]
    fn truncated_records_count_as_outside() {
        let rec = TrajectoryRecord {
            times: vec![0.0, 1.0],
            v_values: vec![1.0, 50.0],
            theta: Some(0.0),
            angles: vec![],
            truncated: true,
        };
        assert!((outside_fraction(&rec, 10.0, 4.0) - 0.75).abs() < 1e-12);
        assert_eq!(window_miss_from_fan(&[rec], 10.0, 2.0, 1.0), 1.0);
    }

    #[test]
    fn sojourn_samples_drop_censored_cycles() {
        let rec = |v: Vec<f64>| TrajectoryRecord {
            times: (0..v.len()).map(|i| i as f64).collect(),
            v_values: v,
            theta: None,
            angles: vec![],
            truncated: false,
        };
        // inside [0,2), outside [2,3), inside [3,6), outside [6,8), inside [8,9]
        let r = rec(vec![1.0, 1.0, 9.0, 1.0, 1.0, 1.0, 9.0, 9.0, 1.0, 1.0]);
        let (eta, xi) = sojourn_samples(&[r], 5.0, 2.0, 0.0).unwrap();
        assert_eq!(eta, vec![2.0]);
        assert_eq!(xi, vec![5.0]);
    }

    #[test]
    fn composition_fits_before_t_min() {
        let curve = TailCurve::from_counts(vec![1.0, 2.0, 3.0, 4.0], vec![50, 30, 0, 0], 100);
        let r = composition_check(&curve, 0.5, 3.0);
        assert_eq!(r.checked, 2);
        assert!(r.holds && r.c_fit > 0.0);
        let late = TailCurve::from_counts(vec![1.0, 2.0, 3.0], vec![1, 1, 100], 100);
        assert!(!composition_check(&late, 0.5, 3.0).holds);
    }

    #[test]
    fn effective_rate_examples() {
        let r100 = effective_rate(0.5, 0.5, 1.0, 100.0, 2.0).unwrap();
        let r1000 = effective_rate(0.5, 0.5, 1.0, 1000.0, 2.0).unwrap();
        assert!(r1000.raw < r100.raw);
        assert!(r100.delta_prime >= 0.5 && r100.delta_prime < 1.0);
        // b/l → 0: the correction tends to max ln(c)/τ < 0 and is clamped
        let lim = effective_rate(0.5, 0.5, 1e-12, 1.0, 2.0).unwrap();
        assert!((lim.raw - (0.5 + 0.5f64.ln() / 4.0)).abs() < 1e-9);
        assert_eq!(lim.delta_prime, 0.5);
        assert!(matches!(effective_rate(0.5, 0.5, 1.0, 1.2, 2.0), Err(WalkError::LevelTooSmall(_))));
    }

    #[test]
    fn surface_chain_drift_is_reproducible() {
        let chain = SurfaceWalkChain {
            tau: 2.0,
            delta: 0.5,
            budget: flat::DEFAULT_BUDGET,
        };
        let base = builtin("L3").unwrap();
        let starts: Vec<TranslationSurface> = [0.0, 1.0, 2.0]
            .iter()
            .map(|t| base.apply_linear_delaunay(&Isometry2::geodesic(*t)).unwrap())
            .collect();
        let a = crate::markov::estimate_drift(&chain, &starts, 200, 1).unwrap();
        let b = crate::markov::estimate_drift(&chain, &starts, 200, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.c < 1.0);
    }
}
