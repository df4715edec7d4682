//! Upper half-plane geometry.
//!
//! Points of `H² = SO(2)\SL(2,R)` are represented in the upper half-plane and
//! group elements act on the right: `p.g = gᵀ·p` as a Möbius map. With this
//! convention `i.g_t` lies at hyperbolic distance `2t` from `i`, and `i.r_θ`
//! turns the direction at `i` by the angle `2θ`.
//!
//! Polar coordinates are purely geometric: [`polar_point`] with radius `r` and
//! angle `α` is the point at hyperbolic distance `r` from `i`, in the direction
//! rotated by `α` from the upward vertical, i.e. `i.(g_{r/2} r_{α/2})`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use thiserror::Error;

/// Absolute tolerance used for geometric comparisons.
pub const TOL: f64 = 1e-9;
/// Default number of samples for grids over an angular window.
pub const DEFAULT_GRID: usize = 1024;
/// Step used for central finite differences.
pub const FD_STEP: f64 = 1e-6;
/// Radii below this count as the collapsed configuration `D(φ) = 0`.
const SINGULAR_RADIUS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperbolicError {
    #[error("non-finite or out-of-domain input: {0}")]
    Domain(String),
    #[error("matrix determinant {det} deviates from 1")]
    InvalidIsometry { det: f64 },
    #[error("singular polar configuration: D(phi) = 0")]
    SingularConfiguration,
    #[error("singular derivative: cos(Psi) = {cos_psi:e}")]
    SingularDerivative { cos_psi: f64 },
    #[error("derivative bounds do not hold on the window (achieved eta = {eta:.4})")]
    Precondition { eta: f64 },
}

pub type Result<T> = std::result::Result<T, HyperbolicError>;

/// A point `x + iy` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    pub const I: HPoint = HPoint { x: 0.0, y: 1.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(HyperbolicError::Domain(format!("({x}, {y})")));
        }
        if y <= 0.0 {
            return Err(HyperbolicError::Domain(format!("y = {y} must be positive")));
        }
        Ok(HPoint { x, y })
    }

    fn validate(&self) -> Result<()> {
        HPoint::new(self.x, self.y).map(|_| ())
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// Real 2×2 matrix of determinant one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Isometry2 {
    pub const IDENTITY: Isometry2 = Isometry2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds a matrix, rejecting determinants further than `1e-6` from one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Isometry2 { a, b, c, d };
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(HyperbolicError::Domain(format!("matrix {m:?}")));
        }
        let det = m.det();
        if (det - 1.0).abs() > 1e-6 {
            return Err(HyperbolicError::InvalidIsometry { det });
        }
        Ok(m)
    }

    /// The diagonal flow element `g_t = diag(e^t, e^{-t})`.
    pub fn geodesic(t: f64) -> Self {
        Isometry2 {
            a: t.exp(),
            b: 0.0,
            c: 0.0,
            d: (-t).exp(),
        }
    }

    /// The rotation `r_θ = [[cos θ, sin θ], [-sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Isometry2 { a: c, b: s, c: -s, d: c }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product `self · other`, re-normalized to determinant one.
    pub fn compose(&self, other: &Isometry2) -> Isometry2 {
        let m = Isometry2 {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        };
        m.normalized()
    }

    pub fn inverse(&self) -> Isometry2 {
        Isometry2 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    fn normalized(self) -> Isometry2 {
        let det = self.det();
        if det > 0.0 && (det - 1.0).abs() > f64::EPSILON {
            let s = det.sqrt().recip();
            Isometry2 {
                a: self.a * s,
                b: self.b * s,
                c: self.c * s,
                d: self.d * s,
            }
        } else {
            self
        }
    }

    /// Hyperbolic distance between `i` and `i.self`, computed without
    /// cancellation from the matrix entries.
    pub fn displacement(&self) -> f64 {
        let u = (self.a - self.d).powi(2) + (self.b + self.c).powi(2);
        2.0 * (u.sqrt() / 2.0).asinh()
    }
}

/// Hyperbolic distance in the upper half-plane (curvature −1).
pub fn distance(p: HPoint, q: HPoint) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let chord = (dx * dx + dy * dy).sqrt();
    Ok(2.0 * (chord / (2.0 * (p.y * q.y).sqrt())).asinh())
}

/// Right action `p.g = gᵀ·p`, so that `apply(h, I)` realizes `i.h`.
pub fn apply(g: &Isometry2, p: HPoint) -> Result<HPoint> {
    let g = Isometry2::new(g.a, g.b, g.c, g.d)?;
    p.validate()?;
    let z = p.to_complex();
    let w = (z * g.a + g.c) / (z * g.b + g.d);
    HPoint::new(w.re, w.im.max(f64::MIN_POSITIVE))
}

/// Orbit point `i.h`.
pub fn orbit_point(h: &Isometry2) -> Result<HPoint> {
    apply(h, HPoint::I)
}

/// Point at hyperbolic distance `r` from `i` in direction `alpha`.
pub fn polar_point(r: f64, alpha: f64) -> Result<HPoint> {
    let h = Isometry2::geodesic(r / 2.0).compose(&Isometry2::rotation(alpha / 2.0));
    orbit_point(&h)
}

/// Inverse of `polar_point`: the distance from `i` and the direction at `i`.
pub fn polar_coordinates(z: HPoint) -> Result<(f64, f64)> {
    let r = distance(HPoint::I, z)?;
    // the disc model reverses orientation relative to the polar angle
    Ok((r, -cayley(z.to_complex()).arg()))
}

/// Change of polar basepoint: a circle of radius `t2` centred at a point `z0`
/// which lies at distance `t1` from `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarChange {
    pub t1: f64,
    pub t2: f64,
}

impl PolarChange {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !t1.is_finite() || !t2.is_finite() || t1 < 0.0 || t2 < 0.0 {
            return Err(HyperbolicError::Domain(format!("radii t1 = {t1}, t2 = {t2}")));
        }
        Ok(PolarChange { t1, t2 })
    }

    /// Radii for the flow picture: flow times `S`, `T` are hyperbolic lengths `2S`, `2T`.
    pub fn from_flow_times(s: f64, t: f64) -> Result<Self> {
        PolarChange::new(2.0 * s, 2.0 * t)
    }

    /// The point of the circle at turning angle `phi`, `i.(g_{t2/2} r_{φ/2} g_{t1/2})`.
    pub fn circle_point(&self, phi: f64) -> Result<HPoint> {
        let h = Isometry2::geodesic(self.t2 / 2.0)
            .compose(&Isometry2::rotation(phi / 2.0))
            .compose(&Isometry2::geodesic(self.t1 / 2.0));
        orbit_point(&h)
    }

    /// `cosh D − 1`, written so that it stays accurate when `D` is small.
    fn cosh_radius_minus_one(&self, phi: f64) -> f64 {
        let half = ((self.t1 - self.t2) / 2.0).sinh();
        let c = (phi / 2.0).cos();
        2.0 * half * half + 2.0 * self.t1.sinh() * self.t2.sinh() * c * c
    }

    /// `D(φ) = arccosh(cosh t1 cosh t2 + sinh t1 sinh t2 cos φ)`.
    pub fn radius(&self, phi: f64) -> Result<f64> {
        if !phi.is_finite() {
            return Err(HyperbolicError::Domain(format!("phi = {phi}")));
        }
        let u = self.cosh_radius_minus_one(phi);
        if !u.is_finite() {
            return Err(HyperbolicError::Domain(format!("radius overflow at t1 = {}, t2 = {}", self.t1, self.t2)));
        }
        Ok((u + (u * (u + 2.0)).sqrt()).ln_1p())
    }

    /// `D′(φ) = −sinh t1 sinh t2 sin φ / sinh D(φ)`.
    pub fn radius_derivative(&self, phi: f64) -> Result<f64> {
        let d = self.radius(phi)?;
        if d <= SINGULAR_RADIUS {
            return Err(HyperbolicError::SingularConfiguration);
        }
        Ok(-self.t1.sinh() * self.t2.sinh() * phi.sin() / d.sinh())
    }

    /// Returns `(sin Ψ, cos Ψ)` scaled by the common positive factor `sinh t1 sinh D`.
    fn angle_components(&self, phi: f64, d: f64) -> (f64, f64) {
        let s = self.t1.sinh() * self.t2.sinh() * phi.sin();
        let c = self.t1.cosh() * d.cosh() - self.t2.cosh();
        (s, c)
    }

    /// `Ψ(φ)`, the direction at `i` of the circle point, measured from the
    /// geodesic through `i` and `z0`. The sine comes from the law of sines and
    /// the cosine from the law of cosines, combined with `atan2`.
    pub fn angle(&self, phi: f64) -> Result<f64> {
        let d = self.radius(phi)?;
        if d <= SINGULAR_RADIUS {
            return Err(HyperbolicError::SingularConfiguration);
        }
        if self.t1 == 0.0 {
            return Ok(wrap_angle(phi));
        }
        let (s, c) = self.angle_components(phi, d);
        Ok(s.atan2(c))
    }

    /// `Ψ′(φ)` from implicit differentiation of the law of sines.
    pub fn angle_derivative(&self, phi: f64) -> Result<f64> {
        let d = self.radius(phi)?;
        if d <= SINGULAR_RADIUS {
            return Err(HyperbolicError::SingularConfiguration);
        }
        if self.t1 == 0.0 {
            return Ok(1.0);
        }
        let (s, c) = self.angle_components(phi, d);
        let cos_psi = c / s.hypot(c);
        if cos_psi.abs() < 1e-12 {
            return Err(HyperbolicError::SingularDerivative { cos_psi });
        }
        let (sh1, sh2) = (self.t1.sinh(), self.t2.sinh());
        let shd = d.sinh();
        let (sin_phi, cos_phi) = phi.sin_cos();
        let rhs = sh2 * (cos_phi * shd + sin_phi * sin_phi * (d.cosh() / shd) * sh1 * sh2) / (shd * shd);
        Ok(rhs / cos_psi)
    }
}

/// Outcome of checking `(e^{-t1}/2)(1-η) ≤ |Ψ′| ≤ e^{-t1}(1+η)` on the window `[-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DerivativeBoundReport {
    pub holds: bool,
    /// `max(worst_lower_ratio, worst_upper_ratio)`; the bounds hold iff this is `≤ 1`.
    pub worst_ratio: f64,
    /// Largest `lower / |Ψ′|` over the grid.
    pub worst_lower_ratio: f64,
    /// Largest `|Ψ′| / upper` over the grid.
    pub worst_upper_ratio: f64,
    pub min_abs: f64,
    pub max_abs: f64,
}

impl DerivativeBoundReport {
    /// `max|Ψ′| / min|Ψ′|` on the window.
    pub fn spread(&self) -> f64 {
        self.max_abs / self.min_abs
    }
}

/// Uniform grid with `n` points covering `[lo, hi]` inclusive.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

pub fn derivative_bound_report(pc: &PolarChange, eta: f64) -> Result<DerivativeBoundReport> {
    derivative_bound_report_on(pc, eta, DEFAULT_GRID)
}

pub fn derivative_bound_report_on(pc: &PolarChange, eta: f64, n: usize) -> Result<DerivativeBoundReport> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(HyperbolicError::Domain(format!("eta = {eta} must lie in (0, 1)")));
    }
    let scale = (-pc.t1).exp();
    let lower = scale / 2.0 * (1.0 - eta);
    let upper = scale * (1.0 + eta);
    let mut report = DerivativeBoundReport {
        holds: true,
        worst_ratio: 0.0,
        worst_lower_ratio: 0.0,
        worst_upper_ratio: 0.0,
        min_abs: f64::INFINITY,
        max_abs: 0.0,
    };
    for phi in grid(-FRAC_PI_2, FRAC_PI_2, n) {
        let v = pc.angle_derivative(phi)?.abs();
        report.min_abs = report.min_abs.min(v);
        report.max_abs = report.max_abs.max(v);
        report.worst_lower_ratio = report.worst_lower_ratio.max(lower / v);
        report.worst_upper_ratio = report.worst_upper_ratio.max(v / upper);
    }
    report.worst_ratio = report.worst_lower_ratio.max(report.worst_upper_ratio);
    report.holds = report.worst_ratio <= 1.0;
    Ok(report)
}

/// Closed interval of angles, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval {
            lo: lo.min(hi),
            hi: lo.max(hi),
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Result of [`shadow_expansion_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ShadowReport {
    /// `ν(Ψ(A) ∩ U) / ν(U)`.
    pub ratio: f64,
    /// Normalized measure `ν(A)`.
    pub nu_a: f64,
    /// `ε` implied by the measured derivative spread on the window.
    pub epsilon: f64,
    /// `4(1+ε)ν(A)`.
    pub bound: f64,
}

impl ShadowReport {
    pub fn holds(&self) -> bool {
        self.ratio <= self.bound + TOL
    }
}

const SHADOW_ETA: f64 = 0.05;
const IMAGE_PIECES: usize = 4096;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

fn merge_intervals(mut v: Vec<Interval>) -> Vec<Interval> {
    v.retain(|i| i.len() > 0.0);
    v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for i in v {
        match out.last_mut() {
            Some(last) if i.lo <= last.hi => last.hi = last.hi.max(i.hi),
            _ => out.push(i),
        }
    }
    out
}

/// Splits arbitrary real intervals into pieces inside `(-π, π]`.
fn wrap_intervals(a: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    for i in a {
        if i.len() >= 2.0 * PI {
            return vec![Interval::new(-PI, PI)];
        }
        let lo = wrap_angle(i.lo);
        let hi = lo + i.len();
        if hi <= PI {
            out.push(Interval::new(lo, hi));
        } else {
            out.push(Interval::new(lo, PI));
            out.push(Interval::new(-PI, hi - 2.0 * PI));
        }
    }
    merge_intervals(out)
}

fn angle_nudged(pc: &PolarChange, phi: f64) -> Result<f64> {
    match pc.angle(phi) {
        Err(HyperbolicError::SingularConfiguration) => pc.angle(phi + 1e-9),
        r => r,
    }
}

/// Image of `[lo, hi]` under `Ψ`, as a union of intervals in `(-π, π]`.
fn image(pc: &PolarChange, piece: Interval) -> Result<Vec<Interval>> {
    let pieces = ((piece.len() / (2.0 * PI) * IMAGE_PIECES as f64).ceil() as usize).max(1);
    let mut out = Vec::new();
    let mut prev = angle_nudged(pc, piece.lo)?;
    for k in 1..=pieces {
        let phi = piece.lo + piece.len() * k as f64 / pieces as f64;
        let cur = angle_nudged(pc, phi)?;
        if (cur - prev).abs() > PI {
            // branch cut of atan2; split at ±π
            let (lo_side, hi_side) = if prev > cur { (prev, cur) } else { (cur, prev) };
            out.push(Interval::new(lo_side, PI));
            out.push(Interval::new(-PI, hi_side));
        } else {
            out.push(Interval::new(prev, cur));
        }
        prev = cur;
    }
    Ok(merge_intervals(out))
}

fn intersection_measure(a: &[Interval], b: &[Interval]) -> f64 {
    let mut total = 0.0;
    for x in a {
        for y in b {
            let lo = x.lo.max(y.lo);
            let hi = x.hi.min(y.hi);
            if hi > lo {
                total += hi - lo;
            }
        }
    }
    total
}

/// Proportion of the window image `U = Ψ([-π/2, π/2])` covered by `Ψ(A)`.
///
/// Requires the derivative spread on the window to satisfy
/// `max|Ψ′| / min|Ψ′| ≤ 2(1+η)/(1-η)` with `η = 0.05`.
pub fn shadow_expansion_ratio(pc: &PolarChange, a: &[Interval]) -> Result<ShadowReport> {
    let report = derivative_bound_report(pc, SHADOW_ETA)?;
    let spread = report.spread();
    let allowed = 2.0 * (1.0 + SHADOW_ETA) / (1.0 - SHADOW_ETA);
    if !(spread <= allowed) {
        return Err(HyperbolicError::Precondition {
            eta: (spread - 2.0) / (spread + 2.0),
        });
    }
    let epsilon = (spread / 2.0 - 1.0).max(0.0);
    let wrapped = wrap_intervals(a);
    let nu_a = wrapped.iter().map(Interval::len).sum::<f64>() / (2.0 * PI);
    if wrapped.is_empty() {
        return Ok(ShadowReport {
            ratio: 0.0,
            nu_a: 0.0,
            epsilon,
            bound: 0.0,
        });
    }
    let window = image(pc, Interval::new(-FRAC_PI_2, FRAC_PI_2))?;
    let u_len: f64 = window.iter().map(Interval::len).sum();
    let mut img = Vec::new();
    for piece in &wrapped {
        img.extend(image(pc, *piece)?);
    }
    let img = merge_intervals(img);
    let ratio = intersection_measure(&img, &window) / u_len;
    Ok(ShadowReport {
        ratio,
        nu_a,
        epsilon,
        bound: 4.0 * (1.0 + epsilon) * nu_a,
    })
}

/// Maximal distance from a point on one side of a hyperbolic triangle to the
/// union of the other two sides, in curvature −1: `arccosh(√2)`.
pub fn thin_triangle_constant() -> f64 {
    std::f64::consts::SQRT_2.acosh()
}

/// Compares the broken path `i.g_t r_{θ0}` (for `t ≤ S`) followed by
/// `i.g_{t-S} r_{φ/2} g_S r_{θ0}` with the geodesic `i.g_t r_θ`,
/// `θ = θ0 + Ψ_{2S,2T}(φ)/2`, at `n_samples` matched times in `[0, S+T]`.
///
/// `phi` is the geometric turning angle at the corner `i.g_S r_{θ0}`.
/// The maximum distance is returned; it does not depend on `θ0`.
pub fn shadow_deviation(_theta0: f64, phi: f64, s: f64, t: f64, n_samples: usize) -> Result<f64> {
    if !(s > 0.0 && t > 0.0) || !phi.is_finite() {
        return Err(HyperbolicError::Domain(format!("S = {s}, T = {t}, phi = {phi}")));
    }
    let pc = PolarChange::from_flow_times(s, t)?;
    // θ0 − θ, kept small and computed directly rather than as a difference
    let delta = if phi == 0.0 { 0.0 } else { -pc.angle(phi)? / 2.0 };
    let (sd, cd) = delta.sin_cos();
    let big = (2.0 * s).exp();
    let turn = Isometry2::rotation(phi / 2.0);
    // N = g_S r_δ g_{-S}
    let n = Isometry2 {
        a: cd,
        b: big * sd,
        c: -sd / big,
        d: cd,
    };
    let p = Isometry2 {
        a: turn.a * n.a + turn.b * n.c,
        b: turn.a * n.b + turn.b * n.d,
        c: turn.c * n.a + turn.d * n.c,
        d: turn.c * n.b + turn.d * n.d,
    };
    let mut worst: f64 = 0.0;
    let mut times = grid(0.0, s + t, n_samples.max(2));
    times.push(s);
    for time in times {
        let m = if time <= s {
            let e = (2.0 * time).exp();
            Isometry2 {
                a: cd,
                b: e * sd,
                c: -sd / e,
                d: cd,
            }
        } else {
            let e = (2.0 * (time - s)).exp();
            Isometry2 {
                a: p.a,
                b: e * p.b,
                c: p.c / e,
                d: p.d,
            }
        };
        worst = worst.max(m.displacement());
    }
    Ok(worst)
}

/// Isometry normalizing a segment: sends `a` to `i` and `b` to the imaginary
/// axis above `i`, working through the disc model.
struct SegmentFrame {
    a: HPoint,
    rot: Complex64,
    len: f64,
}

fn cayley(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    (z - i) / (z + i)
}

fn cayley_inv(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    i * (Complex64::new(1.0, 0.0) + w) / (Complex64::new(1.0, 0.0) - w)
}

impl SegmentFrame {
    fn new(a: HPoint, b: HPoint) -> Result<Self> {
        let len = distance(a, b)?;
        let mut frame = SegmentFrame {
            a,
            rot: Complex64::new(1.0, 0.0),
            len,
        };
        let wb = cayley(frame.translate(b));
        if wb.norm() > 0.0 {
            frame.rot = wb.conj() / wb.norm();
        }
        Ok(frame)
    }

    fn translate(&self, p: HPoint) -> Complex64 {
        Complex64::new((p.x - self.a.x) / self.a.y, p.y / self.a.y)
    }

    fn forward(&self, p: HPoint) -> Complex64 {
        let z = cayley_inv(cayley(self.translate(p)) * self.rot);
        Complex64::new(z.re, z.im.max(f64::MIN_POSITIVE))
    }

    fn backward(&self, z: Complex64) -> HPoint {
        let w = cayley(z) * self.rot.conj();
        let t = cayley_inv(w);
        HPoint {
            x: t.re * self.a.y + self.a.x,
            y: (t.im * self.a.y).max(f64::MIN_POSITIVE),
        }
    }
}

/// Point at fraction `s ∈ [0, 1]` along the geodesic segment from `a` to `b`.
pub fn geodesic_point(a: HPoint, b: HPoint, s: f64) -> Result<HPoint> {
    let frame = SegmentFrame::new(a, b)?;
    Ok(frame.backward(Complex64::new(0.0, (s * frame.len).exp())))
}

/// Distance from `p` to the geodesic segment `[a, b]`.
pub fn segment_distance(p: HPoint, a: HPoint, b: HPoint) -> Result<f64> {
    let frame = SegmentFrame::new(a, b)?;
    let z = frame.forward(p);
    let foot = z.norm().ln();
    if (0.0..=frame.len).contains(&foot) {
        Ok((z.re.abs() / z.im).asinh())
    } else {
        Ok(distance(p, a)?.min(distance(p, b)?))
    }
}

/// Sampled thinness of the triangle `abc`: the largest distance from a point
/// on one side to the union of the other two.
pub fn triangle_thinness(a: HPoint, b: HPoint, c: HPoint, samples_per_side: usize) -> Result<f64> {
    let sides = [(a, b, c), (b, c, a), (c, a, b)];
    let mut worst: f64 = 0.0;
    for (p, q, r) in sides {
        for s in grid(0.0, 1.0, samples_per_side.max(2)) {
            let x = geodesic_point(p, q, s)?;
            let d = segment_distance(x, q, r)?.min(segment_distance(x, r, p)?);
            worst = worst.max(d);
        }
    }
    Ok(worst)
}
