//! Foster–Lyapunov bounds for Markov chains with `(PV)(x) ≤ cV(x) + b`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::seed;
use crate::stats::{linear_fit, wilson, CONFIDENCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no drift detected: fitted c = {c:.4} is not below 1")]
    NoDrift { c: f64 },
}

pub type Result<T> = std::result::Result<T, MarkovError>;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DriftCondition {
    pub c: f64,
    pub b: f64,
}

impl DriftCondition {
    pub fn new(c: f64, b: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) || !(b > 0.0) || !b.is_finite() {
            return Err(MarkovError::Domain(format!("need 0 < c < 1 and b > 0, got c = {c}, b = {b}")));
        }
        Ok(DriftCondition { c, b })
    }

    /// `b′ = b/(1-c)`, the limit of the iterated one-step bound.
    pub fn b_prime(&self) -> f64 {
        self.b / (1.0 - self.c)
    }

    /// Per-step factor `c + b/l` of the hitting-time bound.
    pub fn contraction(&self, l: f64) -> f64 {
        self.c + self.b / l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HittingBound {
    pub value: f64,
    /// `c + b/l ≥ 1`: the bound does not decay in `n`.
    pub non_contractive: bool,
}

/// `P_x(τ_{C_l} > n) ≤ (V(x)/l)(c + b/l)^n`.
pub fn hitting_tail_bound(v_x: f64, dc: &DriftCondition, l: f64, n: u32) -> Result<HittingBound> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(MarkovError::Domain(format!("level l = {l} must be positive")));
    }
    if !(v_x > l) {
        return Err(MarkovError::Precondition(format!("V(x) = {v_x} must exceed l = {l}")));
    }
    let q = dc.contraction(l);
    Ok(HittingBound {
        value: v_x / l * q.powi(n as i32),
        non_contractive: q >= 1.0,
    })
}

/// `(P^m V)(x) ≤ c^m V(x) + b′`.
pub fn iterated_drift_bound(v_x: f64, dc: &DriftCondition, m: u32) -> f64 {
    dc.c.powi(m as i32) * v_x + dc.b_prime()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(MarkovError::Domain(format!("epsilon = {eps} must lie in (0, 1]")));
    }
    Ok(())
}

/// `l = (sup_C V + b′)/ε`, so that `P^m(x, C_l) > 1 - ε` for `x ∈ C` and all `m`.
pub fn tightness_level(sup_v_on_c: f64, dc: &DriftCondition, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok((sup_v_on_c + dc.b_prime()) / eps)
}

/// `l = 2b′/ε`, valid for `m > M(x)`; see [`burn_in`].
pub fn uniform_level(dc: &DriftCondition, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(2.0 * dc.b_prime() / eps)
}

/// Smallest `m` with `c^m V(x) ≤ b′`.
pub fn burn_in(v_x: f64, dc: &DriftCondition) -> u32 {
    let bp = dc.b_prime();
    if v_x <= bp {
        return 0;
    }
    let mut m = ((bp / v_x).ln() / dc.c.ln()).ceil().max(0.0) as u32;
    // guard against rounding on either side of the exact power
    while m > 0 && dc.c.powi(m as i32 - 1) * v_x <= bp {
        m -= 1;
    }
    while dc.c.powi(m as i32) * v_x > bp {
        m += 1;
    }
    m
}

/// `P(S_n > λ) ≥ (E S_n - λ)/(1 - λ)`, clamped at zero.
pub fn occupation_lower_bound(e_sn: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) || !(0.0..=1.0).contains(&e_sn) {
        return Err(MarkovError::Domain(format!("need λ ∈ (0, 1) and E S_n ∈ [0, 1], got {lambda}, {e_sn}")));
    }
    Ok(((e_sn - lambda) / (1.0 - lambda)).max(0.0))
}

/// A chain given by a one-step sampler and a Lyapunov function.
pub trait ChainModel: Sync {
    type State: Clone + Send + Sync;

    fn step(&self, x: &Self::State, rng: &mut ChaCha8Rng) -> Self::State;

    fn lyapunov(&self, x: &Self::State) -> f64;
}

const C_FLOOR: f64 = 1e-9;

/// Fits `E(V(X_1) | X_0 = x) ≤ cV(x) + b` from Monte-Carlo estimates at `starts`.
pub fn estimate_drift<C: ChainModel>(chain: &C, starts: &[C::State], n_samples: usize, seed: u64) -> Result<DriftCondition> {
    if n_samples < 100 || starts.is_empty() {
        return Err(MarkovError::Domain(format!(
            "need at least 100 samples per start and one start (got {n_samples})"
        )));
    }
    let points: Vec<(f64, f64)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut rng = seed::stream(seed, i as u64);
            let mean = (0..n_samples).map(|_| chain.lyapunov(&chain.step(x, &mut rng))).sum::<f64>() / n_samples as f64;
            (chain.lyapunov(x), mean)
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let c = match linear_fit(&xs, &ys) {
        Some(fit) if fit.slope >= 1.0 => return Err(MarkovError::NoDrift { c: fit.slope }),
        Some(fit) => fit.slope.max(C_FLOOR),
        None => C_FLOOR,
    };
    let b = points.iter().map(|(v, e)| e - c * v).fold(f64::NEG_INFINITY, f64::max).max(f64::MIN_POSITIVE);
    DriftCondition::new(c, b)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SurvivalRow {
    pub n: u32,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HittingReport {
    pub rows: Vec<SurvivalRow>,
    pub trials: u64,
    pub pass: bool,
    /// Every upper confidence limit is below the bound (stricter than `pass`).
    pub upper_within: bool,
}

/// Per-trial hitting times of `C_l`, truncated at `n_max + 1`.
pub fn hitting_times<C: ChainModel>(chain: &C, l: f64, start: &C::State, n_max: u32, trials: u64, seed: u64) -> Vec<u32> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, i);
            let mut x = start.clone();
            for n in 1..=n_max {
                x = chain.step(&x, &mut rng);
                if chain.lyapunov(&x) <= l {
                    return n;
                }
            }
            n_max + 1
        })
        .collect()
}

/// Empirical survival `P(τ_{C_l} > n)` against the analytic bound. A row fails
/// only when its lower confidence limit exceeds the bound.
pub fn verify_hitting_bound<C: ChainModel>(
    chain: &C,
    dc: &DriftCondition,
    l: f64,
    start: &C::State,
    n_max: u32,
    trials: u64,
    seed: u64,
) -> Result<HittingReport> {
    let v = chain.lyapunov(start);
    if !(v > l) {
        return Err(MarkovError::Precondition(format!("V(start) = {v} must exceed l = {l}")));
    }
    let times = hitting_times(chain, l, start, n_max, trials, seed);
    let mut survivors = vec![0u64; n_max as usize + 2];
    for &t in &times {
        // τ > n exactly for n < t
        for count in survivors.iter_mut().take(t.min(n_max + 1) as usize) {
            *count += 1;
        }
    }
    let mut rows = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let k = survivors[n as usize];
        let (ci_lo, ci_hi) = wilson(k, trials, CONFIDENCE);
        let bound = hitting_tail_bound(v, dc, l, n)?.value;
        rows.push(SurvivalRow {
            n,
            p_hat: k as f64 / trials as f64,
            ci_lo,
            ci_hi,
            bound,
            pass: ci_lo <= bound,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    let upper_within = rows.iter().all(|r| r.ci_hi <= r.bound);
    Ok(HittingReport {
        rows,
        trials,
        pass,
        upper_within,
    })
}

/// Eight-state test chain with `V(i) = 2^i` and `(PV)(i) ≤ 0.5·V(i) + 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixtureChain;

pub const FIXTURE_STATES: usize = 8;

#[rustfmt::skip]
pub const FIXTURE_MATRIX: [[f64; FIXTURE_STATES]; FIXTURE_STATES] = [
    [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.9, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.3, 0.6, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0],
    [0.3, 0.0, 0.6, 0.0, 0.1, 0.0, 0.0, 0.0],
    [0.3, 0.0, 0.0, 0.6, 0.0, 0.1, 0.0, 0.0],
    [0.3, 0.0, 0.0, 0.0, 0.6, 0.0, 0.1, 0.0],
    [0.3, 0.0, 0.0, 0.0, 0.0, 0.6, 0.0, 0.1],
    [0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.7, 0.0],
];

pub const FIXTURE_DRIFT: DriftCondition = DriftCondition { c: 0.5, b: 1.0 };

type Row = [f64; FIXTURE_STATES];

impl FixtureChain {
    pub fn v(i: usize) -> f64 {
        (1u32 << i) as f64
    }

    fn mat_vec(v: &Row) -> Row {
        let mut out = [0.0; FIXTURE_STATES];
        for (i, row) in FIXTURE_MATRIX.iter().enumerate() {
            out[i] = row.iter().zip(v).map(|(p, x)| p * x).sum();
        }
        out
    }

    fn vec_mat(mu: &Row) -> Row {
        let mut out = [0.0; FIXTURE_STATES];
        for (i, row) in FIXTURE_MATRIX.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                out[j] += mu[i] * p;
            }
        }
        out
    }

    /// `(P^m V)(i)` for every state.
    pub fn exact_pmv(m: u32) -> Row {
        let mut v: Row = std::array::from_fn(Self::v);
        for _ in 0..m {
            v = Self::mat_vec(&v);
        }
        v
    }

    /// Distribution of `X_m` given `X_0 = start`.
    pub fn exact_distribution(start: usize, m: u32) -> Row {
        let mut mu = [0.0; FIXTURE_STATES];
        mu[start] = 1.0;
        for _ in 0..m {
            mu = Self::vec_mat(&mu);
        }
        mu
    }

    /// `P_start(τ_{C_l} > n)` for `n = 0..=n_max` from powers of the
    /// transition matrix restricted to the complement of `C_l`.
    pub fn exact_survival(start: usize, l: f64, n_max: u32) -> Vec<f64> {
        let outside: [bool; FIXTURE_STATES] = std::array::from_fn(|i| Self::v(i) > l);
        let mut mu = [0.0; FIXTURE_STATES];
        mu[start] = 1.0;
        let mut out = Vec::with_capacity(n_max as usize + 1);
        out.push(if outside[start] { 1.0 } else { 0.0 });
        for _ in 0..n_max {
            mu = Self::vec_mat(&mu);
            for (i, m) in mu.iter_mut().enumerate() {
                if !outside[i] {
                    *m = 0.0;
                }
            }
            out.push(mu.iter().sum());
        }
        out
    }

    /// Exact law of `K = #{1 ≤ k ≤ n : X_k ∈ C_l}`; `S_n = K/n`.
    pub fn exact_occupation_counts(start: usize, l: f64, n: u32) -> Vec<f64> {
        let n = n as usize;
        // joint[state][count]
        let mut joint = vec![vec![0.0; n + 1]; FIXTURE_STATES];
        joint[start][0] = 1.0;
        for _ in 0..n {
            let mut next = vec![vec![0.0; n + 1]; FIXTURE_STATES];
            for (i, row) in FIXTURE_MATRIX.iter().enumerate() {
                for k in 0..=n {
                    let mass = joint[i][k];
                    if mass == 0.0 {
                        continue;
                    }
                    for (j, p) in row.iter().enumerate() {
                        if *p > 0.0 {
                            let kk = if Self::v(j) <= l { k + 1 } else { k };
                            next[j][kk.min(n)] += mass * p;
                        }
                    }
                }
            }
            joint = next;
        }
        (0..=n).map(|k| joint.iter().map(|r| r[k]).sum()).collect()
    }
}

impl ChainModel for FixtureChain {
    type State = usize;

    fn step(&self, x: &usize, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (j, p) in FIXTURE_MATRIX[*x].iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // rounding in the row sum
        FIXTURE_MATRIX[*x].iter().rposition(|p| *p > 0.0).unwrap_or(*x)
    }

    fn lyapunov(&self, x: &usize) -> f64 {
        Self::v(*x)
    }
}

/// Samples `X_m` from `start` in each of `trials` independent runs.
pub fn sample_positions<C: ChainModel>(chain: &C, start: &C::State, m_max: u32, trials: u64, seed: u64) -> Vec<Vec<f64>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, i);
            let mut x = start.clone();
            let mut out = Vec::with_capacity(m_max as usize + 1);
            out.push(chain.lyapunov(&x));
            for _ in 0..m_max {
                x = chain.step(&x, &mut rng);
                out.push(chain.lyapunov(&x));
            }
            out
        })
        .collect()
}
