use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{shortest_saddle_connection, FlatError, Result, TranslationSurface};
use crate::hyperbolic::Isometry2;

/// `max(1, ℓ^{-(1+δ)})`.
pub fn v0_from_length(ell: f64, delta: f64) -> f64 {
    ell.powf(-(1.0 + delta)).max(1.0)
}

pub fn v0(s: &TranslationSurface, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(FlatError::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(v0_from_length(shortest_saddle_connection(s)?, delta))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DriftWeights {
    pub c_tilde_prime: f64,
    pub w: f64,
    pub lambdas: Vec<f64>,
    /// Whether `Σ_{i<j} λ_i ≤ (c̃/2w)·λ_j` holds for every `j ≥ 1`, with `c̃ = 2c̃′`.
    pub partial_sums_ok: bool,
}

impl DriftWeights {
    pub fn new(n_components: usize, c_tilde_prime: f64, w: f64) -> Result<Self> {
        if !(c_tilde_prime > 0.0 && w > 0.0) || n_components == 0 {
            return Err(FlatError::Domain(format!(
                "need c̃′ > 0, w > 0 and at least one component (got {c_tilde_prime}, {w}, {n_components})"
            )));
        }
        let mut lambdas = Vec::with_capacity(n_components);
        lambdas.push(w / c_tilde_prime);
        for i in 1..n_components {
            lambdas.push((c_tilde_prime / w + 1.0).powi(i as i32 - 1));
        }
        let c_tilde = 2.0 * c_tilde_prime;
        let mut partial = 0.0;
        let mut ok = true;
        for (j, &lj) in lambdas.iter().enumerate() {
            if j > 0 && partial > c_tilde / (2.0 * w) * lj * (1.0 + 1e-12) {
                ok = false;
            }
            partial += lj;
        }
        Ok(DriftWeights {
            c_tilde_prime,
            w,
            lambdas,
            partial_sums_ok: ok,
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DriftCombination {
    pub v_delta: f64,
    pub weights: DriftWeights,
    pub b_tilde: f64,
}

/// `V_δ = Σ λ_i V_i` and `b̃ = b̃′ Σ λ_i`. A failing partial-sum check is
/// reported through `weights.partial_sums_ok`, not as an error.
pub fn combine_drift(values: &[f64], c_tilde_prime: f64, w: f64, b_tilde_prime: f64) -> Result<DriftCombination> {
    if let Some(v) = values.iter().find(|v| !(**v >= 1.0)) {
        return Err(FlatError::Domain(format!("component value {v} must be at least 1")));
    }
    if !(b_tilde_prime > 0.0) {
        return Err(FlatError::Domain(format!("b̃′ = {b_tilde_prime} must be positive")));
    }
    let weights = DriftWeights::new(values.len(), c_tilde_prime, w)?;
    let v_delta = weights.lambdas.iter().zip(values).map(|(l, v)| l * v).sum();
    let b_tilde = b_tilde_prime * weights.lambdas.iter().sum::<f64>();
    Ok(DriftCombination { v_delta, weights, b_tilde })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LogsmoothReport {
    /// Largest displacement radius found at which all samples satisfy the sandwich.
    pub kappa_found: f64,
    /// Whether the sandwich holds for all samples at `κ = 0.01`.
    pub holds: bool,
}

const KAPPA_MAX: f64 = 4.0;
const KAPPA_CHECK: f64 = 0.01;

struct Sample {
    base: f64,
    moved: TranslationSurface,
    alpha: f64,
    beta: f64,
    frac: f64,
}

/// Samples `h = g_t r_θ` with `t ∈ [0, 2]` and perturbations `p = r_α g_u r_β`
/// with `d(i, i.p) = 2u < κ`, and checks `σ⁻¹V(h) ≤ V(ph) ≤ σV(h)` for `V = v0`.
pub fn logsmooth_check(s: &TranslationSurface, delta: f64, sigma: f64) -> Result<LogsmoothReport> {
    logsmooth_check_with(s, delta, sigma, 64, 0x5eed)
}

pub fn logsmooth_check_with(s: &TranslationSurface, delta: f64, sigma: f64, samples: usize, seed: u64) -> Result<LogsmoothReport> {
    if !(sigma > 1.0) {
        return Err(FlatError::Domain(format!("sigma = {sigma} must exceed 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::with_capacity(samples);
    for _ in 0..samples {
        let h = Isometry2::geodesic(rng.gen_range(0.0..2.0)).compose(&Isometry2::rotation(rng.gen_range(0.0..std::f64::consts::PI)));
        let moved = s.apply_linear_delaunay(&h)?;
        let base = v0(&moved, delta)?;
        pool.push(Sample {
            base,
            moved,
            alpha: rng.gen_range(0.0..std::f64::consts::PI),
            beta: rng.gen_range(0.0..std::f64::consts::PI),
            frac: rng.gen_range(0.0..1.0),
        });
    }
    let holds_at = |kappa: f64| -> Result<bool> {
        for p in &pool {
            let u = p.frac * kappa / 2.0;
            let m = Isometry2::rotation(p.alpha)
                .compose(&Isometry2::geodesic(u))
                .compose(&Isometry2::rotation(p.beta));
            let v = v0(&p.moved.apply_linear_delaunay(&m)?, delta)?;
            if v > sigma * p.base * (1.0 + 1e-12) || v * sigma < p.base * (1.0 - 1e-12) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let holds = holds_at(KAPPA_CHECK)?;
    let (mut lo, mut hi) = (0.0, KAPPA_MAX);
    if holds_at(hi)? {
        lo = hi;
    } else {
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if holds_at(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(LogsmoothReport { kappa_found: lo, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat::builtin;

    #[test]
    fn v0_examples() {
        assert_eq!(v0_from_length(2.0, 0.5), 1.0);
        assert!((v0_from_length(0.25, 0.5) - 8.0).abs() < 1e-12);
        assert_eq!(v0_from_length(1.0, 0.3), 1.0);
        assert!(v0(&builtin("torus").unwrap(), 1.5).is_err());
    }

    #[test]
    fn combine_examples() {
        let c = combine_drift(&[1.0; 4], 1.0, 1.0, 3.0).unwrap();
        assert_eq!(c.weights.lambdas, vec![1.0, 1.0, 2.0, 4.0]);
        assert_eq!(c.v_delta, 8.0);
        assert_eq!(c.b_tilde, 24.0);
        assert!(c.weights.partial_sums_ok);
        let single = combine_drift(&[5.0], 2.0, 1.0, 1.0).unwrap();
        assert_eq!(single.v_delta, 2.5);
    }

    #[test]
    fn partial_sum_check_with_equality() {
        // λ0 + λ1 = 2 and (c̃/2w)·λ2 = 2
        let w = DriftWeights::new(3, 1.0, 1.0).unwrap();
        assert_eq!(w.lambdas[0] + w.lambdas[1], 2.0);
        assert_eq!(2.0 / 2.0 * w.lambdas[2], 2.0);
        assert!(w.partial_sums_ok);
    }

    #[test]
    fn partial_sum_check_flags_large_w() {
        // λ0 = w/c̃′ = 3 exceeds (c̃/2w)·λ1 = 1/3
        let w = DriftWeights::new(2, 1.0, 3.0).unwrap();
        assert!(!w.partial_sums_ok);
    }

    #[test]
    fn combine_rejects_small_values() {
        assert!(combine_drift(&[0.5], 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn logsmooth_torus() {
        let s = builtin("torus").unwrap();
        let r = logsmooth_check_with(&s, 0.5, 2.0, 16, 1).unwrap();
        assert!(r.holds);
        assert!(r.kappa_found >= 0.01);
        let tight = logsmooth_check_with(&s, 0.5, 1.0001, 16, 1).unwrap();
        assert!(tight.kappa_found < r.kappa_found);
        assert!(tight.kappa_found < 1e-3);
    }
}
