//! C ABI over `teich-recur`.
//!
//! Surfaces are opaque `TrSurface` handles released with `tr_surface_free`.
//! Every fallible call returns a `TrStatus`; on failure `tr_last_error`
//! returns a message that stays valid until the next call on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use teich_recur::deviations::{deviation_rate, DeviationError, TailModel};
use teich_recur::flat::{self, build_origami, parse_surface, FlatError, Permutation, TranslationSurface};
use teich_recur::hyperbolic::{HyperbolicError, Isometry2, PolarChange};
use teich_recur::markov::{hitting_tail_bound, DriftCondition, MarkovError};
use teich_recur::walk::{run_walk, WalkConfig, WalkError};

/// Opaque translation surface.
pub struct TrSurface {
    inner: TranslationSurface,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Budget = 4,
    Io = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrTailKind {
    /// Exponential with mean `a`.
    Exponential = 0,
    /// `P(X > x) = a·e^{-b x}` beyond `cutoff`.
    ExponentialTail = 1,
    /// Constant `a`.
    Deterministic = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrTail {
    pub kind: TrTailKind,
    pub a: f64,
    pub b: f64,
    pub cutoff: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrRate {
    pub theta1: f64,
    pub gamma1: f64,
    pub theta2: f64,
    pub gamma2: f64,
    pub c: f64,
    pub gamma: f64,
    pub t_min: f64,
}

type Failure = (TrStatus, String);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TrStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TrStatus::Panic
        }
    }
}

fn flat_failure(e: FlatError) -> Failure {
    let status = match e {
        FlatError::Parse { .. } => TrStatus::Parse,
        FlatError::BudgetExceeded { .. } => TrStatus::Budget,
        FlatError::Io(_) => TrStatus::Io,
        _ => TrStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn hyperbolic_failure(e: HyperbolicError) -> Failure {
    let status = match e {
        HyperbolicError::SingularConfiguration | HyperbolicError::SingularDerivative { .. } => TrStatus::Numeric,
        _ => TrStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn markov_failure(e: MarkovError) -> Failure {
    (TrStatus::InvalidArgument, e.to_string())
}

fn deviation_failure(e: DeviationError) -> Failure {
    let status = match e {
        DeviationError::NoRate { .. } => TrStatus::Numeric,
        _ => TrStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn walk_failure(e: WalkError) -> Failure {
    match e {
        WalkError::Flat(f) => flat_failure(f),
        other => (TrStatus::InvalidArgument, other.to_string()),
    }
}

fn null(what: &str) -> Failure {
    (TrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn surface<'a>(s: *const TrSurface) -> Result<&'a TranslationSurface, Failure> {
    s.as_ref().map(|h| &h.inner).ok_or_else(|| null("surface"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (TrStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit(out: *mut *mut TrSurface, s: TranslationSurface) -> Result<(), Failure> {
    write(out, Box::into_raw(Box::new(TrSurface { inner: s })), "output handle")
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL.
#[no_mangle]
pub extern "C" fn tr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builtin fixture: `torus`, `L3` or `octagon`.
#[no_mangle]
pub unsafe extern "C" fn tr_surface_builtin(name: *const c_char, out: *mut *mut TrSurface) -> TrStatus {
    guard(|| {
        let s = flat::builtin(text(name, "name")?).map_err(flat_failure)?;
        emit(out, s)
    })
}

/// Surface from the text format read by the command-line tool.
#[no_mangle]
pub unsafe extern "C" fn tr_surface_parse(source: *const c_char, out: *mut *mut TrSurface) -> TrStatus {
    guard(|| {
        let spec = parse_surface(text(source, "source")?).map_err(flat_failure)?;
        emit(out, spec.build().map_err(flat_failure)?)
    })
}

/// Square-tiled surface from 0-based permutation images of length `n`:
/// square `i` has square `h[i]` to its right and `v[i]` above.
#[no_mangle]
pub unsafe extern "C" fn tr_surface_origami(n: usize, h: *const u32, v: *const u32, out: *mut *mut TrSurface) -> TrStatus {
    guard(|| {
        if h.is_null() || v.is_null() {
            return Err(null("permutation"));
        }
        if n == 0 {
            return Err((TrStatus::InvalidArgument, "n must be positive".into()));
        }
        let perm = |p: *const u32| -> Result<Permutation, Failure> {
            let images = std::slice::from_raw_parts(p, n).iter().map(|&i| i as usize).collect();
            Permutation::from_images(images).map_err(flat_failure)
        };
        let s = build_origami(&perm(h)?, &perm(v)?).map_err(flat_failure)?;
        emit(out, s)
    })
}

/// Releases a handle; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn tr_surface_free(s: *mut TrSurface) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tr_surface_area(s: *const TrSurface, out: *mut f64) -> TrStatus {
    guard(|| write(out, surface(s)?.area(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn tr_surface_genus(s: *const TrSurface, out: *mut usize) -> TrStatus {
    guard(|| write(out, surface(s)?.genus(), "out"))
}

/// `[[a, b], [c, d]]·s` with `ad − bc = 1`, Delaunay re-triangulated, as a new handle.
#[no_mangle]
pub unsafe extern "C" fn tr_surface_apply(s: *const TrSurface, a: f64, b: f64, c: f64, d: f64, out: *mut *mut TrSurface) -> TrStatus {
    guard(|| {
        let m = Isometry2::new(a, b, c, d).map_err(hyperbolic_failure)?;
        let moved = surface(s)?.apply_linear_delaunay(&m).map_err(flat_failure)?;
        emit(out, moved)
    })
}

/// Length of the shortest saddle connection; `budget = 0` means the default.
#[no_mangle]
pub unsafe extern "C" fn tr_shortest_saddle(s: *const TrSurface, budget: usize, out: *mut f64) -> TrStatus {
    guard(|| {
        let budget = if budget == 0 { flat::DEFAULT_BUDGET } else { budget };
        let ell = flat::shortest_with_budget(surface(s)?, budget).map_err(flat_failure)?;
        write(out, ell, "out")
    })
}

/// Sorted saddle-connection lengths up to `l`. Writes at most `cap` values to
/// `lengths` and the full count to `count`; returns `BUFFER_TOO_SMALL` when
/// the count exceeds `cap`. `lengths` may be NULL when `cap` is 0.
#[no_mangle]
pub unsafe extern "C" fn tr_saddle_lengths(s: *const TrSurface, l: f64, budget: usize, lengths: *mut f64, cap: usize, count: *mut usize) -> TrStatus {
    guard(|| {
        let budget = if budget == 0 { flat::DEFAULT_BUDGET } else { budget };
        let sc = flat::enumerate_with_budget(surface(s)?, l, budget).map_err(flat_failure)?;
        write(count, sc.len(), "count")?;
        if cap > 0 {
            if lengths.is_null() {
                return Err(null("lengths"));
            }
            for (i, c) in sc.iter().take(cap).enumerate() {
                lengths.add(i).write(c.length());
            }
        }
        if sc.len() > cap {
            return Err((TrStatus::BufferTooSmall, format!("{} lengths do not fit in {cap}", sc.len())));
        }
        Ok(())
    })
}

/// `V₀(s) = max(1, ℓ(s)^{-(1+δ)})`.
#[no_mangle]
pub unsafe extern "C" fn tr_v0(s: *const TrSurface, delta: f64, out: *mut f64) -> TrStatus {
    guard(|| write(out, flat::v0(surface(s)?, delta).map_err(flat_failure)?, "out"))
}

/// One random walk; writes `V₀` at steps `0..=steps` (fewer if truncated)
/// and the number written to `len`. Needs `cap ≥ steps + 1`.
#[no_mangle]
pub unsafe extern "C" fn tr_walk(
    s: *const TrSurface,
    tau: f64,
    delta: f64,
    steps: usize,
    seed: u64,
    values: *mut f64,
    cap: usize,
    len: *mut usize,
) -> TrStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if cap < steps + 1 {
            return Err((TrStatus::BufferTooSmall, format!("cap {cap} is below steps + 1 = {}", steps + 1)));
        }
        let cfg = WalkConfig {
            tau,
            delta,
            n_steps: steps,
            n_trials: 1,
            seed,
            ..WalkConfig::default()
        };
        let rec = run_walk(surface(s)?, &cfg).map_err(walk_failure)?;
        for (i, v) in rec.v_values.iter().enumerate() {
            values.add(i).write(*v);
        }
        write(len, rec.v_values.len(), "len")
    })
}

/// `D(φ)` for a circle of radius `t2` about a point at distance `t1` from `i`.
#[no_mangle]
pub unsafe extern "C" fn tr_polar_radius(t1: f64, t2: f64, phi: f64, out: *mut f64) -> TrStatus {
    guard(|| {
        let pc = PolarChange::new(t1, t2).map_err(hyperbolic_failure)?;
        write(out, pc.radius(phi).map_err(hyperbolic_failure)?, "out")
    })
}

/// `Ψ(φ)`, the direction at `i` of the same circle point.
#[no_mangle]
pub unsafe extern "C" fn tr_polar_angle(t1: f64, t2: f64, phi: f64, out: *mut f64) -> TrStatus {
    guard(|| {
        let pc = PolarChange::new(t1, t2).map_err(hyperbolic_failure)?;
        write(out, pc.angle(phi).map_err(hyperbolic_failure)?, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn tr_polar_angle_derivative(t1: f64, t2: f64, phi: f64, out: *mut f64) -> TrStatus {
    guard(|| {
        let pc = PolarChange::new(t1, t2).map_err(hyperbolic_failure)?;
        write(out, pc.angle_derivative(phi).map_err(hyperbolic_failure)?, "out")
    })
}

/// `(V(x)/l)(c + b/l)^n`, the hitting-time tail bound under `PV ≤ cV + b`.
#[no_mangle]
pub unsafe extern "C" fn tr_hitting_bound(v: f64, c: f64, b: f64, l: f64, n: u32, out: *mut f64) -> TrStatus {
    guard(|| {
        let dc = DriftCondition::new(c, b).map_err(markov_failure)?;
        write(out, hitting_tail_bound(v, &dc, l, n).map_err(markov_failure)?.value, "out")
    })
}

fn tail_model(t: &TrTail) -> Result<TailModel, Failure> {
    match t.kind {
        TrTailKind::Exponential => TailModel::exponential(t.a),
        TrTailKind::ExponentialTail => TailModel::exponential_tail(t.a, t.b, t.cutoff),
        TrTailKind::Deterministic => TailModel::deterministic(t.a),
    }
    .map_err(deviation_failure)
}

/// Large-deviation rate of the outside occupation above `lambda`; `theta0 ≤ 0`
/// selects the smaller MGF domain limit of the two laws.
#[no_mangle]
pub unsafe extern "C" fn tr_deviation_rate(eta: *const TrTail, xi: *const TrTail, lambda: f64, theta0: f64, out: *mut TrRate) -> TrStatus {
    guard(|| {
        let eta = tail_model(eta.as_ref().ok_or_else(|| null("eta"))?)?;
        let xi = tail_model(xi.as_ref().ok_or_else(|| null("xi"))?)?;
        let theta0 = if theta0 > 0.0 {
            theta0
        } else {
            eta.theta_max().min(xi.theta_max()).min(10.0)
        };
        let r = deviation_rate(&eta, &xi, lambda, theta0).map_err(deviation_failure)?;
        write(
            out,
            TrRate {
                theta1: r.theta1,
                gamma1: r.gamma1,
                theta2: r.theta2,
                gamma2: r.gamma2,
                c: r.c,
                gamma: r.gamma,
                t_min: r.t_min,
            },
            "out",
        )
    })
}
