use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde_json::json;

use teich_recur::deviations::{deviation_rate, simulate_occupation_tail, TailModel};
use teich_recur::flat::{self, enumerate_with_budget, read_surface, TranslationSurface};
use teich_recur::hyperbolic::{derivative_bound_report_on, grid, polar_coordinates, wrap_angle, Isometry2, PolarChange};
use teich_recur::markov::{estimate_drift, verify_hitting_bound, ChainModel, DriftCondition, FixtureChain, HittingReport, FIXTURE_DRIFT, FIXTURE_STATES};
use teich_recur::seed;
use teich_recur::stats::percentile;
use teich_recur::walk::{
    composition_check, effective_rate, first_hit_tail, occupation_tail, run_flow_fan, run_walks, sojourn_rate, stationary_sample, window_miss_curve,
    SurfaceWalkChain, TailCurve, WalkConfig,
};

use super::output::{num, Plot, Report};
use super::{Kind, Params};

type Run = Result<Report, String>;

const BUDGET_ENV: &str = "TEICH_RECUR_BUDGET";
const STATIONARY_ANGLES: usize = 256;
const STATIONARY_BURN_IN: f64 = 2.0;
const STATIONARY_HORIZON: f64 = 10.0;
const THETA0_CAP: f64 = 10.0;
const ROUND_TRIP_TOL: f64 = 1e-8;

pub fn run(kind: Kind, p: &Params) -> Run {
    match kind {
        Kind::Enumerate => enumerate(p),
        Kind::Walk => walk(p),
        Kind::Fan => fan(p),
        Kind::FirstHit => first_hit(p),
        Kind::WindowMiss => window_miss(p),
        Kind::Occupation => occupation(p),
        Kind::DriftVerify => drift_verify(p),
        Kind::Chernoff => chernoff(p),
        Kind::HypCheck => hyp_check(p),
    }
}

fn budget() -> Result<usize, String> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{BUDGET_ENV} = '{v}' is not a non-negative integer")),
        Err(_) => Ok(flat::DEFAULT_BUDGET),
    }
}

fn base_surface(p: &Params) -> Result<TranslationSurface, String> {
    read_surface(p.raw("surface").unwrap_or("L3")).map_err(|e| e.to_string())
}

fn pushed(s: &TranslationSurface, s0: f64) -> Result<TranslationSurface, String> {
    if s0 == 0.0 {
        return Ok(s.clone());
    }
    s.apply_linear_delaunay(&Isometry2::geodesic(s0)).map_err(|e| e.to_string())
}

/// Config with the level fields set to placeholders that pass validation.
fn walk_config(p: &Params) -> Result<WalkConfig, String> {
    let d = WalkConfig::default();
    let cfg = WalkConfig {
        tau: p.get_opt("tau").transpose()?.unwrap_or(d.tau),
        delta: p.get_opt("delta").transpose()?.unwrap_or(d.delta),
        dt: p.get_opt("dt").transpose()?.unwrap_or(d.dt),
        n_steps: p.get_opt("steps").transpose()?.unwrap_or(d.n_steps),
        n_trials: p.get_opt("trials").transpose()?.unwrap_or(d.n_trials),
        seed: p.get("seed")?,
        budget: budget()?,
        ..d
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn stationary(p: &Params, cfg: &WalkConfig) -> Result<Vec<f64>, String> {
    stationary_sample(&base_surface(p)?, STATIONARY_ANGLES, STATIONARY_BURN_IN, STATIONARY_HORIZON, cfg).map_err(|e| e.to_string())
}

/// The explicit `key`, or the stationary `quantile_key` percentile of `V`.
fn level(p: &Params, key: &str, quantile_key: &str, sample: &mut Option<Vec<f64>>, cfg: &WalkConfig) -> Result<f64, String> {
    if let Some(v) = p.get_opt::<f64>(key).transpose()? {
        return Ok(v);
    }
    let q: f64 = p.get(quantile_key)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(format!("--{quantile_key} = {q} must lie in [0, 1]"));
    }
    if sample.is_none() {
        *sample = Some(stationary(p, cfg)?);
    }
    Ok(percentile(sample.as_ref().expect("filled above"), q))
}

fn positive(p: &Params, key: &str) -> Result<f64, String> {
    let v: f64 = p.get(key)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(format!("--{key} = {v} must be positive"));
    }
    Ok(v)
}

fn count(p: &Params, key: &str, min: usize) -> Result<usize, String> {
    let v: usize = p.get(key)?;
    if v < min {
        return Err(format!("--{key} = {v} must be at least {min}"));
    }
    Ok(v)
}

fn tail_rows(curve: &TailCurve, overlay: impl Fn(f64) -> f64) -> Vec<Vec<String>> {
    (0..curve.times.len())
        .map(|i| {
            let t = curve.times[i];
            vec![num(t), num(curve.fraction[i]), num(curve.ci_lo[i]), num(curve.ci_hi[i]), num(overlay(t))]
        })
        .collect()
}

const TAIL_HEADER: [&str; 5] = ["T", "fraction", "ci_lo", "ci_hi", "bound_overlay"];

fn tail_plot() -> Option<Plot> {
    Some(Plot {
        x: 0,
        ys: vec![1, 4],
        log_y: true,
    })
}

fn fit_json(curve: &TailCurve) -> serde_json::Value {
    match curve.fit {
        Some(f) => json!({ "rate": -f.slope, "intercept": f.intercept, "r2": f.r2, "points": f.n }),
        None => serde_json::Value::Null,
    }
}

fn enumerate(p: &Params) -> Run {
    let l = positive(p, "L")?;
    let s = base_surface(p)?;
    let sc = enumerate_with_budget(&s, l, budget()?).map_err(|e| e.to_string())?;
    let rows = sc
        .iter()
        .map(|c| {
            vec![
                fixed(c.length()),
                fixed(c.holonomy.x),
                fixed(c.holonomy.y),
                c.start.to_string(),
                c.end.to_string(),
            ]
        })
        .collect();
    let sorted = sc.windows(2).all(|w| w[0].length() <= w[1].length());
    // reversing a saddle connection negates its holonomy
    let symmetric = sc.iter().all(|c| {
        sc.iter()
            .any(|d| d.start == c.end && d.end == c.start && (d.holonomy.x + c.holonomy.x).abs() < 1e-9 && (d.holonomy.y + c.holonomy.y).abs() < 1e-9)
    });
    Ok(Report {
        header: vec!["len", "hol_x", "hol_y", "start", "end"],
        rows,
        results: json!({ "L": l, "count": sc.len(), "shortest": sc.first().map(|c| c.length()) }),
        checks: vec![("sorted_by_length".into(), sorted), ("reversal_symmetric".into(), symmetric)],
        plot: Some(Plot {
            x: 1,
            ys: vec![2],
            log_y: false,
        }),
    })
}

/// Twelve decimals, with `-0` printed as `0`.
fn fixed(x: f64) -> String {
    let s = format!("{:.12}", x);
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn walk(p: &Params) -> Run {
    let cfg = walk_config(p)?;
    let s0 = pushed(&base_surface(p)?, p.get("s0")?)?;
    let walks = run_walks(&s0, &cfg).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut cap_ok = true;
    let cap = (1.0 + cfg.delta) * cfg.tau + 1e-9;
    for (trial, rec) in walks.iter().enumerate() {
        for (i, v) in rec.v_values.iter().enumerate() {
            let theta = if i == 0 { f64::NAN } else { rec.angles[i - 1] };
            rows.push(vec![trial.to_string(), i.to_string(), num(theta), num(*v)]);
        }
        cap_ok &= rec.v_values.windows(2).all(|w| (w[1].ln() - w[0].ln()).abs() <= cap);
    }
    let all: Vec<f64> = walks.iter().flat_map(|r| r.v_values.iter().copied()).collect();
    let trailing: Vec<f64> = walks.iter().flat_map(|r| r.v_values[r.v_values.len() / 2..].iter().copied()).collect();
    let trailing_mean = trailing.iter().sum::<f64>() / trailing.len().max(1) as f64;
    Ok(Report {
        header: vec!["trial", "step", "theta", "V"],
        rows,
        results: json!({
            "trials": walks.len(),
            "truncated": walks.iter().filter(|r| r.truncated).count(),
            "trailing_half_mean_V": trailing_mean,
            "first_quartile_V": percentile(&all, 0.25),
            "median_V": percentile(&all, 0.5),
        }),
        checks: vec![("growth_cap".into(), cap_ok), ("v_at_least_one".into(), all.iter().all(|v| *v >= 1.0))],
        plot: Some(Plot {
            x: 1,
            ys: vec![3],
            log_y: true,
        }),
    })
}

fn fan(p: &Params) -> Run {
    let cfg = walk_config(p)?;
    let s0 = pushed(&base_surface(p)?, p.get("s0")?)?;
    let angles = count(p, "angles", 2)?;
    let fan = run_flow_fan(&s0, angles, p.get("T")?, &cfg).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for rec in &fan {
        let theta = rec.theta.unwrap_or(f64::NAN);
        for (t, v) in rec.times.iter().zip(&rec.v_values) {
            rows.push(vec![num(theta), num(*t), num(*v)]);
        }
    }
    let v0: Vec<f64> = fan.iter().filter_map(|r| r.v_values.first().copied()).collect();
    let k_invariant = v0.iter().all(|v| (v - v0[0]).abs() <= 1e-9 * v0[0]);
    Ok(Report {
        header: vec!["theta", "t", "V"],
        rows,
        results: json!({ "angles": angles, "V_s0": v0.first(), "truncated": fan.iter().filter(|r| r.truncated).count() }),
        checks: vec![
            ("k_invariance_at_zero".into(), k_invariant),
            ("v_at_least_one".into(), fan.iter().all(|r| r.v_values.iter().all(|v| *v >= 1.0))),
        ],
        plot: Some(Plot {
            x: 1,
            ys: vec![2],
            log_y: true,
        }),
    })
}

fn first_hit(p: &Params) -> Run {
    let cfg = walk_config(p)?;
    let mut sample = None;
    let l = level(p, "l", "quantile", &mut sample, &cfg)?;
    let s0 = pushed(&base_surface(p)?, p.get("s0")?)?;
    let v_s0 = cfg_v(&s0, &cfg)?;
    if !(v_s0 > l) {
        return Err(format!("V(s0) = {v_s0} must exceed l = {l}; raise --s0 or lower --l"));
    }
    let angles = count(p, "angles", 2)?;
    let fan = run_flow_fan(&s0, angles, p.get("T")?, &cfg).map_err(|e| e.to_string())?;
    let curve = first_hit_tail(&fan, l).map_err(|e| e.to_string())?;
    let overlay = match (p.get_opt::<f64>("c").transpose()?, p.get_opt::<f64>("b").transpose()?) {
        (Some(c), Some(b)) => Some(effective_rate(cfg.delta, c, b, l, p.get("tau0")?).map_err(|e| e.to_string())?),
        _ => None,
    };
    let rows = tail_rows(&curve, |t| overlay.map_or(f64::NAN, |er| v_s0 / l * (-(1.0 - er.delta_prime) * t).exp()));
    let slope_negative = curve.fit.is_some_and(|f| f.slope < 0.0);
    Ok(Report {
        header: TAIL_HEADER.to_vec(),
        rows,
        results: json!({
            "l": l, "V_s0": v_s0, "angles": angles, "fit": fit_json(&curve),
            "truncated": fan.iter().filter(|r| r.truncated).count(),
            "overlay": overlay.map(|er| json!({ "delta_prime": er.delta_prime, "raw": er.raw, "shape_only": true })),
        }),
        checks: vec![("non_increasing".into(), curve.is_non_increasing()), ("negative_slope".into(), slope_negative)],
        plot: tail_plot(),
    })
}

fn cfg_v(s: &TranslationSurface, cfg: &WalkConfig) -> Result<f64, String> {
    flat::shortest_with_budget(s, cfg.budget)
        .map(|ell| flat::v0_from_length(ell, cfg.delta))
        .map_err(|e| e.to_string())
}

fn window_miss(p: &Params) -> Run {
    let cfg = walk_config(p)?;
    let mut sample = None;
    let l = level(p, "l", "quantile", &mut sample, &cfg)?;
    let s0 = pushed(&base_surface(p)?, p.get("s0")?)?;
    let (s, t_max): (f64, f64) = (p.get("S")?, p.get("T")?);
    if !(s >= 0.0 && t_max >= 0.0) {
        return Err(format!("need S, T ≥ 0 (got {s}, {t_max})"));
    }
    let angles = count(p, "angles", 2)?;
    let fan = run_flow_fan(&s0, angles, s + t_max, &cfg).map_err(|e| e.to_string())?;
    let n = (t_max / cfg.dt + 1e-9).floor() as usize;
    let ts: Vec<f64> = (0..=n).map(|k| k as f64 * cfg.dt).collect();
    let curve = window_miss_curve(&fan, l, s, &ts);
    Ok(Report {
        header: TAIL_HEADER.to_vec(),
        rows: tail_rows(&curve, |_| f64::NAN),
        results: json!({ "l": l, "S": s, "angles": angles, "fit": fit_json(&curve) }),
        checks: vec![("non_increasing".into(), curve.is_non_increasing())],
        plot: tail_plot(),
    })
}

fn occupation(p: &Params) -> Run {
    let cfg = walk_config(p)?;
    let lambda: f64 = p.get("lambda")?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(format!("--lambda = {lambda} must lie in (0, 1)"));
    }
    let mut sample = None;
    let l = level(p, "l", "quantile", &mut sample, &cfg)?;
    let l0 = level(p, "l0", "l0-quantile", &mut sample, &cfg)?;
    if !(l > l0 && l0 > 0.0) {
        return Err(format!("need l > l0 > 0 (got l = {l}, l0 = {l0})"));
    }
    let s0 = pushed(&base_surface(p)?, p.get("s0")?)?;
    let angles = count(p, "angles", 2)?;
    let fan = run_flow_fan(&s0, angles, positive(p, "T")?, &cfg).map_err(|e| e.to_string())?;
    let curve = occupation_tail(&fan, l, lambda).map_err(|e| e.to_string())?;
    let rate = sojourn_rate(&fan, l, l0, p.get("c-prime")?, lambda);
    let (rows, results, checks) = match &rate {
        Ok(r) => {
            let comp = composition_check(&curve, r.rate.gamma, r.rate.t_min);
            let rows = tail_rows(&curve, |t| comp.c_fit * r.rate.gamma.powf(t));
            let results = json!({ "l": l, "l0": l0, "lambda": lambda, "sojourns": r, "composition": comp });
            let checks = vec![
                ("gamma_below_one".to_string(), r.rate.gamma < 1.0),
                ("below_fitted_bound".to_string(), comp.holds),
            ];
            (rows, results, checks)
        }
        Err(e) => {
            let results = json!({ "l": l, "l0": l0, "lambda": lambda, "rate_error": e.to_string() });
            (tail_rows(&curve, |_| f64::NAN), results, vec![("gamma_below_one".to_string(), false)])
        }
    };
    Ok(Report {
        header: TAIL_HEADER.to_vec(),
        rows,
        results,
        checks,
        plot: tail_plot(),
    })
}

fn survival_report(report: &HittingReport, dc: &DriftCondition, v_start: f64, l: f64) -> Report {
    let rows = report
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), num(r.p_hat), num(r.ci_lo), num(r.ci_hi), num(r.bound)])
        .collect();
    Report {
        header: vec!["n", "fraction", "ci_lo", "ci_hi", "bound_overlay"],
        rows,
        results: json!({ "c": dc.c, "b": dc.b, "l": l, "V_start": v_start, "trials": report.trials, "upper_within": report.upper_within }),
        checks: vec![("bound_respected".into(), report.pass)],
        plot: tail_plot(),
    }
}

fn drift_override(p: &Params, base: DriftCondition) -> Result<DriftCondition, String> {
    let c = p.get_opt("c").transpose()?.unwrap_or(base.c);
    let b = p.get_opt("b").transpose()?.unwrap_or(base.b);
    DriftCondition::new(c, b).map_err(|e| e.to_string())
}

fn drift_verify(p: &Params) -> Run {
    let l = positive(p, "l")?;
    let n_max: u32 = p.get("n-max")?;
    let trials = count(p, "trials", 1)? as u64;
    let seed: u64 = p.get("seed")?;
    match p.raw("chain").unwrap_or("fixture") {
        "fixture" => {
            let start: usize = p.get("start")?;
            if start >= FIXTURE_STATES {
                return Err(format!("--start = {start} must be below {FIXTURE_STATES}"));
            }
            let dc = drift_override(p, FIXTURE_DRIFT)?;
            let report = verify_hitting_bound(&FixtureChain, &dc, l, &start, n_max, trials, seed).map_err(|e| e.to_string())?;
            Ok(survival_report(&report, &dc, FixtureChain.lyapunov(&start), l))
        }
        "walk" => {
            let cfg = walk_config(p)?;
            let chain = SurfaceWalkChain {
                tau: cfg.tau,
                delta: cfg.delta,
                budget: cfg.budget,
            };
            let base = base_surface(p)?;
            let starts = [0.0, 1.0, 2.0, 3.0].iter().map(|t| pushed(&base, *t)).collect::<Result<Vec<_>, _>>()?;
            let estimated = estimate_drift(&chain, &starts, count(p, "drift-samples", 100)?, seed::derive(seed, 1)).map_err(|e| e.to_string())?;
            let dc = drift_override(p, estimated)?;
            let start = pushed(&base, p.get("s0")?)?;
            let report = verify_hitting_bound(&chain, &dc, l, &start, n_max, trials, seed).map_err(|e| e.to_string())?;
            Ok(survival_report(&report, &dc, chain.lyapunov(&start), l))
        }
        other => Err(format!("--chain = '{other}' must be fixture or walk")),
    }
}

/// `exp:m`, `tail:a1:a2:cut`, `det:v`, `samples:x,y,...` or `file:path` (one number per line).
pub fn parse_tail(spec: &str) -> Result<TailModel, String> {
    let bad = |e: &dyn std::fmt::Display| format!("tail spec '{spec}': {e}");
    let (head, rest) = spec.split_once(':').ok_or_else(|| bad(&"expected kind:arguments"))?;
    let f = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(&e));
    let model = match head {
        "exp" => TailModel::exponential(f(rest)?),
        "det" => TailModel::deterministic(f(rest)?),
        "tail" => {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad(&"expected tail:a1:a2:cut"));
            }
            TailModel::exponential_tail(f(parts[0])?, f(parts[1])?, f(parts[2])?)
        }
        "samples" => TailModel::empirical(rest.split(',').filter(|s| !s.trim().is_empty()).map(f).collect::<Result<_, _>>()?),
        "file" => {
            let text = std::fs::read_to_string(rest).map_err(|e| bad(&e))?;
            TailModel::empirical(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(f)
                    .collect::<Result<_, _>>()?,
            )
        }
        other => return Err(bad(&format!("unknown kind '{other}'"))),
    };
    model.map_err(|e| bad(&e))
}

fn chernoff(p: &Params) -> Run {
    let eta = parse_tail(p.raw("eta").ok_or("missing required parameter --eta")?)?;
    let xi = parse_tail(p.raw("xi").ok_or("missing required parameter --xi")?)?;
    let lambda: f64 = p.get("lambda")?;
    let theta0 = match p.get_opt::<f64>("theta0").transpose()? {
        Some(t) => t,
        None => eta.theta_max().min(xi.theta_max()).min(THETA0_CAP),
    };
    let rate = deviation_rate(&eta, &xi, lambda, theta0).map_err(|e| e.to_string())?;
    let times = p.list("times")?;
    let trials: u64 = p.get("trials")?;
    let (rows, simulated_ok) = if trials > 0 {
        let tail = simulate_occupation_tail(&rate, &eta, &xi, lambda, &times, trials, p.get("seed")?);
        let ok = tail.iter().all(|r| r.ci_lo <= r.bound);
        (
            tail.iter()
                .map(|r| vec![num(r.t), num(r.fraction), num(r.ci_lo), num(r.ci_hi), num(r.bound)])
                .collect(),
            ok,
        )
    } else {
        (
            times
                .iter()
                .map(|t| vec![num(*t), String::new(), String::new(), String::new(), num(rate.bound(*t))])
                .collect(),
            true,
        )
    };
    Ok(Report {
        header: TAIL_HEADER.to_vec(),
        rows,
        results: json!({ "rate": rate, "theta0": theta0, "eta_mean": eta.mean(), "xi_mean": xi.mean(), "trials": trials }),
        checks: vec![("gamma_below_one".into(), rate.gamma < 1.0), ("simulated_within_bound".into(), simulated_ok)],
        plot: tail_plot(),
    })
}

fn hyp_check(p: &Params) -> Run {
    let (t1, t2, eta): (f64, f64, f64) = (p.get("t1")?, p.get("t2")?, p.get("eta")?);
    let pc = PolarChange::new(t1, t2).map_err(|e| e.to_string())?;
    let n = count(p, "grid", 2)?;
    let report = derivative_bound_report_on(&pc, eta, n).map_err(|e| e.to_string())?;
    let (lower, upper) = ((-t1).exp() / 2.0 * (1.0 - eta), (-t1).exp() * (1.0 + eta));
    let mut rows = Vec::with_capacity(n);
    for phi in grid(-FRAC_PI_2, FRAC_PI_2, n) {
        let d = pc.angle_derivative(phi).map_err(|e| e.to_string())?;
        rows.push(vec![num(phi), num(d), num(lower), num(upper)]);
    }
    let mut rng = seed::stream(p.get("seed")?, 0);
    let mut worst = 0.0f64;
    for _ in 0..count(p, "samples", 1)? {
        let q = PolarChange::new(rng.gen_range(0.1..20.0), rng.gen_range(0.1..20.0)).map_err(|e| e.to_string())?;
        let phi = rng.gen_range(-3.0..3.0);
        let (d, psi) = match (q.radius(phi), q.angle(phi)) {
            (Ok(d), Ok(psi)) => (d, psi),
            _ => continue,
        };
        let (d_seen, psi_seen) = polar_coordinates(q.circle_point(phi).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        worst = worst.max((d_seen - d).abs() / d.max(1.0)).max(wrap_angle(psi_seen - psi).abs());
    }
    Ok(Report {
        header: vec!["phi", "psi_prime", "lower", "upper"],
        rows,
        results: json!({ "t1": t1, "t2": t2, "eta": eta, "derivative": report, "spread": report.spread(), "round_trip_max_error": worst }),
        checks: vec![("derivative_bound".into(), report.holds), ("round_trip".into(), worst < ROUND_TRIP_TOL)],
        plot: Some(Plot {
            x: 0,
            ys: vec![1, 2, 3],
            log_y: false,
        }),
    })
}
