//! Chernoff bounds for the occupation time of alternating sojourn processes.
//!
//! Sojourns are stored from `τ₁`: odd positions (`τ₁, τ₃, …`) are spent
//! inside the compact set and even positions outside, where the indicator
//! `X(t)` equals one. A trajectory that starts outside has `τ₁ = 0`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use thiserror::Error;

use crate::seed;
use crate::stats::{wilson, CONFIDENCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviationError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("infeasible rate: {0}")]
    Infeasible(String),
    #[error("no rate: the Chernoff function stays at or above 1 on [0, {theta0}]")]
    NoRate { theta0: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, DeviationError>;

const GRID: usize = 2048;
const GOLDEN_ITERS: usize = 200;
const JACKKNIFE_SPREAD: f64 = 0.05;

/// Law of a non-negative random variable, through its moment generating function.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailModel {
    /// Uniform distribution on the given samples.
    EmpiricalSamples {
        samples: Vec<f64>,
    },
    /// `η = 0` with probability `1 - a1·e^{-a2·cutoff}`, otherwise `cutoff + Exp(a2)`,
    /// so that `P(η > t) = a1·e^{-a2 t}` for `t > cutoff`.
    ExponentialTail {
        a1: f64,
        a2: f64,
        cutoff: f64,
    },
    Deterministic {
        value: f64,
    },
}

impl TailModel {
    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(DeviationError::Domain("empirical samples must be non-empty, finite and non-negative".into()));
        }
        Ok(TailModel::EmpiricalSamples { samples })
    }

    pub fn exponential_tail(a1: f64, a2: f64, cutoff: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0 && cutoff >= 0.0) || a1 * (-a2 * cutoff).exp() > 1.0 {
            return Err(DeviationError::Domain(format!(
                "need a1, a2 > 0, cutoff ≥ 0 and a1·e^(-a2·cutoff) ≤ 1 (got {a1}, {a2}, {cutoff})"
            )));
        }
        Ok(TailModel::ExponentialTail { a1, a2, cutoff })
    }

    /// Exponential law with the given mean.
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(DeviationError::Domain(format!("mean {mean} must be positive")));
        }
        Self::exponential_tail(1.0, 1.0 / mean, 0.0)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(DeviationError::Domain(format!("deterministic value {value} must be non-negative")));
        }
        Ok(TailModel::Deterministic { value })
    }

    pub fn mean(&self) -> f64 {
        match self {
            TailModel::EmpiricalSamples { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
            TailModel::ExponentialTail { a1, a2, cutoff } => a1 * (-a2 * cutoff).exp() * (cutoff + 1.0 / a2),
            TailModel::Deterministic { value } => *value,
        }
    }

    /// `E e^{θX}`, or infinity where it diverges.
    pub fn mgf(&self, theta: f64) -> f64 {
        match self {
            TailModel::EmpiricalSamples { samples } => samples.iter().map(|x| (theta * x).exp()).sum::<f64>() / samples.len() as f64,
            TailModel::ExponentialTail { a1, a2, cutoff } => {
                if theta >= *a2 {
                    return f64::INFINITY;
                }
                let p = a1 * (-a2 * cutoff).exp();
                (1.0 - p) + p * (theta * cutoff).exp() * a2 / (a2 - theta)
            }
            TailModel::Deterministic { value } => (theta * value).exp(),
        }
    }

    /// Largest `θ` at which the MGF is usable: the abscissa of convergence for
    /// the exponential tail, and for samples the largest `θ` whose mean
    /// `e^{θx}` has relative jackknife spread below 5%.
    pub fn theta_max(&self) -> f64 {
        match self {
            TailModel::ExponentialTail { a2, .. } => *a2,
            TailModel::Deterministic { .. } => f64::INFINITY,
            TailModel::EmpiricalSamples { samples } => {
                let n = samples.len() as f64;
                let top = samples.iter().cloned().fold(0.0, f64::max);
                if top == 0.0 || samples.len() < 2 {
                    return f64::INFINITY;
                }
                let spread = |theta: f64| {
                    // the jackknife standard error of a sample mean is s/√n
                    let shift = theta * top;
                    let ys: Vec<f64> = samples.iter().map(|x| (theta * x - shift).exp()).collect();
                    let m = ys.iter().sum::<f64>() / n;
                    let var = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
                    var.sqrt() / (n.sqrt() * m)
                };
                let (mut lo, mut hi) = (0.0, 1.0 / top);
                while spread(hi) < JACKKNIFE_SPREAD && hi < 1e6 / top {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if spread(mid) < JACKKNIFE_SPREAD {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            TailModel::EmpiricalSamples { samples } => samples[rng.gen_range(0..samples.len())],
            TailModel::ExponentialTail { a1, a2, cutoff } => {
                let p = a1 * (-a2 * cutoff).exp();
                if rng.gen::<f64>() < p {
                    cutoff + Exp::new(*a2).expect("positive rate").sample(rng)
                } else {
                    0.0
                }
            }
            TailModel::Deterministic { value } => *value,
        }
    }
}

/// Minimizer and value of a Chernoff function.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RateComponent {
    pub theta: f64,
    pub gamma: f64,
}

/// Grid search over `[0, hi]` followed by golden-section refinement.
fn minimize<F: Fn(f64) -> f64>(f: F, hi: f64, n: usize) -> RateComponent {
    let mut best = RateComponent { theta: 0.0, gamma: f(0.0) };
    let mut best_k = 0;
    for k in 1..=n {
        let th = hi * k as f64 / n as f64;
        let v = f(th);
        if v < best.gamma {
            best = RateComponent { theta: th, gamma: v };
            best_k = k;
        }
    }
    let step = hi / n as f64;
    let (mut a, mut b) = ((best_k as f64 - 1.0).max(0.0) * step, ((best_k + 1) as f64 * step).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if (b - a) <= 1e-14 * (1.0 + hi) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    for (th, v) in [(x1, f1), (x2, f2)] {
        if v < best.gamma {
            best = RateComponent { theta: th, gamma: v };
        }
    }
    best
}

fn effective_theta0(model: &TailModel, theta0: f64) -> Result<f64> {
    if !(theta0 > 0.0) {
        return Err(DeviationError::Domain(format!("theta0 = {theta0} must be positive")));
    }
    Ok(theta0.min(model.theta_max()))
}

/// Minimizes `F(θ) = E e^{θ(η-λ′)}` over `[0, θ₀)`.
pub fn chernoff_outside_rate(eta: &TailModel, lambda_prime: f64, theta0: f64) -> Result<RateComponent> {
    let mean = eta.mean();
    if !(lambda_prime > mean) {
        return Err(DeviationError::Infeasible(format!("λ′ = {lambda_prime} must exceed Eη = {mean}")));
    }
    let th0 = effective_theta0(eta, theta0)?;
    if !th0.is_finite() {
        return Err(DeviationError::Domain("theta0 must be finite".into()));
    }
    // half-open interval: stay a hair below θ₀
    let hi = th0 * (1.0 - 1e-9);
    let f = |th: f64| eta.mgf(th) * (-th * lambda_prime).exp();
    let best = minimize(f, hi, GRID);
    if !(best.gamma < 1.0) {
        return Err(DeviationError::NoRate { theta0: th0 });
    }
    Ok(best)
}

/// Minimizes `G(θ) = E e^{-θ(ξ-1/c)}` over `[0, θ₀]`.
pub fn chernoff_cycle_rate(xi: &TailModel, c: f64, theta0: f64) -> Result<RateComponent> {
    let mean = xi.mean();
    if !(c * mean > 1.0) {
        return Err(DeviationError::Infeasible(format!("c = {c} must exceed 1/Eξ = {}", 1.0 / mean)));
    }
    if !(theta0 > 0.0) || !theta0.is_finite() {
        return Err(DeviationError::Domain(format!("theta0 = {theta0} must be positive and finite")));
    }
    let g = |th: f64| xi.mgf(-th) * (th / c).exp();
    let best = minimize(g, theta0, GRID);
    if !(best.gamma < 1.0) {
        return Err(DeviationError::NoRate { theta0 });
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RateResult {
    pub theta1: f64,
    pub gamma1: f64,
    pub theta2: f64,
    pub gamma2: f64,
    pub c: f64,
    pub lambda_prime: f64,
    /// Single-rate form: `bound(T) ≤ γ^T` for `T ≥ t_min`.
    pub gamma: f64,
    pub t_min: f64,
}

/// Slack `ε₀` absorbed into the single-rate exponent.
pub const EPS0: f64 = 0.01;
const C_SCAN: usize = 16;

impl RateResult {
    /// `γ′^{⌊cT/2⌋} + γ″^{cT}`.
    pub fn bound(&self, t: f64) -> f64 {
        self.gamma1.powf((self.c * t / 2.0).floor()) + self.gamma2.powf(self.c * t)
    }
}

fn rate_for_c(eta: &TailModel, xi: &TailModel, lambda: f64, theta0: f64, c: f64) -> Result<RateResult> {
    let lambda_prime = 2.0 * lambda / c;
    let r1 = chernoff_outside_rate(eta, lambda_prime, theta0)?;
    let r2 = chernoff_cycle_rate(xi, c, theta0)?;
    let m = r1.gamma.powf(c / 2.0).max(r2.gamma.powf(c));
    let gamma = m.powf(1.0 - EPS0);
    // γ′^{⌊cT/2⌋} ≤ γ′^{-1}·m^T, so bound(T) ≤ (1 + 1/γ′)·m^T ≤ γ^T once T reaches t_min
    let t_min = (1.0 + 1.0 / r1.gamma).ln() / (EPS0 * m.ln().abs());
    Ok(RateResult {
        theta1: r1.theta,
        gamma1: r1.gamma,
        theta2: r2.theta,
        gamma2: r2.gamma,
        c,
        lambda_prime,
        gamma,
        t_min,
    })
}

/// `P((1/T)∫X > λ) ≤ γ^T` for `T ≥ t_min`, choosing `c ∈ (1/Eξ, λ/Eη)` to minimize `γ`.
pub fn deviation_rate(eta: &TailModel, xi: &TailModel, lambda: f64, theta0: f64) -> Result<RateResult> {
    let (me, mx) = (eta.mean(), xi.mean());
    if !(mx > 0.0) {
        return Err(DeviationError::Infeasible("Eξ must be positive".into()));
    }
    if !(lambda > me / mx) || !(lambda < 1.0) {
        return Err(DeviationError::Infeasible(format!("λ = {lambda} must lie in (Eη/Eξ, 1) = ({}, 1)", me / mx)));
    }
    let lo = 1.0 / mx;
    let hi = if me > 0.0 { lambda / me } else { 4.0 * lo };
    let mut candidates = vec![0.5 * (lo + hi)];
    candidates.extend((0..C_SCAN).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / C_SCAN as f64));
    let mut best: Option<RateResult> = None;
    let mut last_err = None;
    for c in candidates {
        match rate_for_c(eta, xi, lambda, theta0, c) {
            Ok(r) if best.map_or(true, |b| r.gamma < b.gamma) => best = Some(r),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(DeviationError::NoRate { theta0 }))
}

/// Alternating sojourn durations plus the sequence with short outside
/// sojourns folded into the preceding inside sojourn.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SojournSequence {
    pub taus: Vec<f64>,
    pub merged: Vec<f64>,
    pub c_prime: f64,
}

impl SojournSequence {
    pub fn new(taus: Vec<f64>, c_prime: f64) -> Result<Self> {
        if taus.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(DeviationError::Domain("sojourn durations must be finite and non-negative".into()));
        }
        if !(c_prime >= 0.0) {
            return Err(DeviationError::Domain(format!("C′ = {c_prime} must be non-negative")));
        }
        let mut merged = taus.clone();
        for i in (1..merged.len()).step_by(2) {
            if merged[i] <= c_prime {
                merged[i - 1] += merged[i];
                merged[i] = 0.0;
            }
        }
        Ok(SojournSequence { taus, merged, c_prime })
    }

    pub fn total(&self) -> f64 {
        self.taus.iter().sum()
    }

    /// Outside sojourns of the merged sequence.
    pub fn outside(&self) -> impl Iterator<Item = f64> + '_ {
        self.merged.iter().skip(1).step_by(2).copied()
    }

    /// Merged cycle lengths `τ′_{2i-1} + τ′_{2i}`, complete cycles only.
    pub fn cycles(&self) -> impl Iterator<Item = f64> + '_ {
        self.merged.chunks_exact(2).map(|c| c[0] + c[1])
    }
}

/// `(1/T)∫₀ᵀ X(t) dt` for the merged sequence; the final sojourn extends past its end.
pub fn occupation_process(seq: &SojournSequence, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(DeviationError::Domain(format!("T = {t} must be positive")));
    }
    let mut clock = 0.0;
    let mut outside = 0.0;
    for (i, tau) in seq.merged.iter().enumerate() {
        if clock >= t {
            break;
        }
        let take = tau.min(t - clock);
        if i % 2 == 1 {
            outside += take;
        }
        clock += take;
    }
    if clock < t && seq.merged.len() % 2 == 0 && !seq.merged.is_empty() {
        outside += t - clock;
    }
    Ok((outside / t).clamp(0.0, 1.0))
}

/// Splits a uniformly sampled `V` trace into sojourns with hysteresis: an
/// inside sojourn ends at the first sample with `V > l`, an outside sojourn at
/// the first sample with `V ≤ l0`.
pub fn extract_sojourns(trace: &[(f64, f64)], l: f64, l0: f64, c_prime: f64) -> Result<SojournSequence> {
    if !(l > l0 && l0 > 0.0) {
        return Err(DeviationError::Domain(format!("need l > l0 > 0 (got l = {l}, l0 = {l0})")));
    }
    if trace.len() < 2 {
        return Err(DeviationError::InsufficientData(format!("{} samples", trace.len())));
    }
    let mut taus = Vec::new();
    let t0 = trace[0].0;
    let mut inside = trace[0].1 <= l;
    if !inside {
        taus.push(0.0);
    }
    let mut since = t0;
    for &(t, v) in &trace[1..] {
        let switch = if inside { v > l } else { v <= l0 };
        if switch {
            taus.push(t - since);
            since = t;
            inside = !inside;
        }
    }
    let end = trace[trace.len() - 1].0;
    if end > since {
        taus.push(end - since);
    }
    SojournSequence::new(taus, c_prime)
}

/// Draws a sojourn process with inside durations from `inside` and outside
/// durations from `eta`, covering at least `horizon`.
pub fn simulate_sojourns<R: Rng + ?Sized>(inside: &TailModel, eta: &TailModel, horizon: f64, rng: &mut R) -> SojournSequence {
    let mut taus = Vec::new();
    let mut total = 0.0;
    while total < horizon {
        let a = inside.sample(rng);
        let b = eta.sample(rng);
        taus.push(a);
        taus.push(b);
        total += a + b;
        if a + b <= 0.0 {
            break;
        }
    }
    SojournSequence::new(taus, 0.0).expect("sampled durations are non-negative")
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TailRow {
    pub t: f64,
    pub fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
}

/// Monte-Carlo `P((1/T)∫X > λ)` for the synthetic process with `inside ≡ ξ` and outside `η`.
pub fn simulate_occupation_tail(rate: &RateResult, eta: &TailModel, xi: &TailModel, lambda: f64, times: &[f64], trials: u64, seed: u64) -> Vec<TailRow> {
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let exceed: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, i);
            let seq = simulate_sojourns(xi, eta, horizon, &mut rng);
            times
                .iter()
                .map(|&t| occupation_process(&seq, t).map(|o| o > lambda).unwrap_or(false))
                .collect()
        })
        .collect();
    times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let k = exceed.iter().filter(|e| e[j]).count() as u64;
            let (ci_lo, ci_hi) = wilson(k, trials, CONFIDENCE);
            TailRow {
                t,
                fraction: k as f64 / trials as f64,
                ci_lo,
                ci_hi,
                bound: rate.bound(t),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LimsupReport {
    pub rows: Vec<TailRow>,
    /// Exceedance fraction at the largest `T`.
    pub final_fraction: f64,
    /// Non-increasing along the grid up to two confidence-interval widths.
    pub non_increasing: bool,
    /// MGF conditions were checked only marginally, never conditionally.
    pub marginal_only: bool,
}

/// Fraction of trajectories whose occupation exceeds `λ`, on the doubling grid `T₁·2^k`.
pub fn limsup_check(gamma: f64, trajectories: &[SojournSequence], lambda: f64, t1: f64, levels: usize) -> Result<LimsupReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(DeviationError::Domain(format!("γ = {gamma} must lie in (0, 1)")));
    }
    if !(t1 > 0.0) || levels == 0 {
        return Err(DeviationError::Domain("need T₁ > 0 and at least one level".into()));
    }
    let n = trajectories.len() as u64;
    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let t = t1 * 2f64.powi(k as i32);
        let mut hits = 0u64;
        for seq in trajectories {
            if occupation_process(seq, t)? > lambda {
                hits += 1;
            }
        }
        let (ci_lo, ci_hi) = wilson(hits, n, CONFIDENCE);
        let fraction = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        rows.push(TailRow {
            t,
            fraction,
            ci_lo,
            ci_hi,
            bound: gamma.powf(t),
        });
    }
    let non_increasing = rows
        .windows(2)
        .all(|w| w[1].fraction <= w[0].fraction + 2.0 * (w[0].ci_hi - w[0].ci_lo).max(w[1].ci_hi - w[1].ci_lo));
    let final_fraction = rows.last().map_or(0.0, |r| r.fraction);
    Ok(LimsupReport {
        rows,
        final_fraction,
        non_increasing,
        marginal_only: true,
    })
}

/// Checks `E e^{θX} ≤ model MGF` on a grid of `θ ∈ [0, θ₀)` for the given samples.
pub fn marginal_domination(samples: &[f64], model: &TailModel, theta0: f64) -> bool {
    if samples.is_empty() {
        return true;
    }
    let emp = TailModel::EmpiricalSamples { samples: samples.to_vec() };
    (0..32).all(|k| {
        let th = theta0 * k as f64 / 32.0;
        emp.mgf(th) <= model.mgf(th) * (1.0 + 1e-12)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn occupation_examples() {
        let s = SojournSequence::new(vec![3.0, 1.0, 3.0, 1.0], 0.0).unwrap();
        assert_eq!(occupation_process(&s, 8.0).unwrap(), 0.25);
        let s = SojournSequence::new([1.0, 1.0].repeat(5), 0.0).unwrap();
        assert_eq!(occupation_process(&s, 6.0).unwrap(), 0.5);
        let s = SojournSequence::new(vec![2.0, 0.0, 5.0, 0.0], 0.0).unwrap();
        assert_eq!(occupation_process(&s, 7.0).unwrap(), 0.0);
        assert!(occupation_process(&s, 0.0).is_err());
    }

    #[test]
    fn exponential_outside_rate() {
        let eta = TailModel::exponential(1.0).unwrap();
        let r = chernoff_outside_rate(&eta, 4.0, 1.0).unwrap();
        assert!((r.theta - 0.75).abs() < 1e-6, "{}", r.theta);
        assert!(rel(r.gamma, 4.0 * (-3f64).exp()) < 1e-9);
    }

    #[test]
    fn deterministic_outside_rate_at_grid_end() {
        let eta = TailModel::deterministic(0.0).unwrap();
        let r = chernoff_outside_rate(&eta, 1.0, 2.0).unwrap();
        assert!(r.theta > 2.0 * (1.0 - 1e-6) && r.theta < 2.0);
        assert!(rel(r.gamma, (-r.theta).exp()) < 1e-12);
    }

    #[test]
    fn outside_rate_boundary_is_infeasible() {
        let eta = TailModel::exponential(1.0).unwrap();
        assert!(matches!(chernoff_outside_rate(&eta, 1.0, 1.0), Err(DeviationError::Infeasible(_))));
    }

    #[test]
    fn cycle_rate_examples() {
        let xi = TailModel::deterministic(2.0).unwrap();
        let r = chernoff_cycle_rate(&xi, 1.0, 5.0).unwrap();
        assert_eq!(r.theta, 5.0);
        assert!(rel(r.gamma, (-5f64).exp()) < 1e-12);
        assert!(matches!(chernoff_cycle_rate(&xi, 0.5, 5.0), Err(DeviationError::Infeasible(_))));
    }

    #[test]
    fn cycle_rate_uniform_samples_match_closed_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<f64> = (0..200_000).map(|_| rng.gen_range(1.0..3.0)).collect();
        let xi = TailModel::empirical(samples).unwrap();
        let r = chernoff_cycle_rate(&xi, 1.0, 5.0).unwrap();
        // E e^{-θξ} for ξ ~ U(1, 3) is (e^{-θ} - e^{-3θ})/(2θ)
        let exact = |th: f64| (((-th).exp() - (-3.0 * th).exp()) / (2.0 * th)) * th.exp();
        let best = (1..=5000).map(|k| exact(5.0 * k as f64 / 5000.0)).fold(f64::INFINITY, f64::min);
        assert!(r.gamma < 1.0);
        assert!(rel(r.gamma, best) < 0.02);
    }

    #[test]
    fn mgf_of_exponential_tail() {
        let m = TailModel::exponential_tail(0.5, 2.0, 1.0).unwrap();
        let p = 0.5 * (-2f64).exp();
        assert!(rel(m.mean(), p * 1.5) < 1e-12);
        assert_eq!(m.mgf(0.0), 1.0);
        assert_eq!(m.mgf(2.0), f64::INFINITY);
        assert!(TailModel::exponential_tail(5.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn deviation_rate_synthetic() {
        let eta = TailModel::exponential(1.0).unwrap();
        let xi = TailModel::deterministic(2.0).unwrap();
        let r = deviation_rate(&eta, &xi, 0.9, 1.0).unwrap();
        assert!(r.gamma < 1.0);
        assert!(r.c > 0.5 && r.c < 0.9);
        assert!(deviation_rate(&eta, &xi, 0.5, 1.0).is_err());
        for t in [r.t_min, 2.0 * r.t_min, 10.0 * r.t_min] {
            assert!(r.bound(t) <= r.gamma.powf(t));
        }
    }

    #[test]
    fn larger_lambda_gives_smaller_gamma() {
        let eta = TailModel::exponential(1.0).unwrap();
        let xi = TailModel::deterministic(2.0).unwrap();
        let g: Vec<f64> = [0.6, 0.75, 0.9].iter().map(|&l| deviation_rate(&eta, &xi, l, 1.0).unwrap().gamma).collect();
        assert!(g[0] >= g[1] && g[1] >= g[2], "{g:?}");
    }

    #[test]
    fn sojourns_from_square_wave() {
        let (l0, l) = (1.0, 4.0);
        let trace: Vec<(f64, f64)> = (0..=40).map(|k| (k as f64, if (k / 5) % 2 == 0 { l0 / 2.0 } else { 2.0 * l })).collect();
        let s = extract_sojourns(&trace, l, l0, 1.0).unwrap();
        assert_eq!(s.taus, vec![5.0; 8]);
        assert_eq!(s.merged, s.taus);
    }

    #[test]
    fn short_excursion_is_merged() {
        let trace: Vec<(f64, f64)> = (0..=40)
            .map(|k| {
                let t = k as f64 * 0.5;
                (t, if (7.0..7.5).contains(&t) || (12.0..16.0).contains(&t) { 8.0 } else { 0.5 })
            })
            .collect();
        let s = extract_sojourns(&trace, 4.0, 1.0, 1.0).unwrap();
        assert_eq!(s.taus, vec![7.0, 0.5, 4.5, 4.0, 4.0]);
        assert_eq!(s.merged, vec![7.5, 0.0, 4.5, 4.0, 4.0]);
        assert_eq!(s.merged.iter().sum::<f64>(), s.taus.iter().sum::<f64>());
    }

    #[test]
    fn constant_trace_is_one_inside_sojourn() {
        let trace: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.1)).collect();
        let s = extract_sojourns(&trace, 4.0, 1.0, 1.0).unwrap();
        assert_eq!(s.taus, vec![9.0]);
        assert!(extract_sojourns(&trace[..1], 4.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn limsup_of_zero_occupation() {
        let seqs = vec![SojournSequence::new(vec![100.0], 0.0).unwrap(); 10];
        let r = limsup_check(0.9, &seqs, 0.5, 10.0, 4).unwrap();
        assert_eq!(r.final_fraction, 0.0);
        assert!(r.non_increasing);
    }
}
