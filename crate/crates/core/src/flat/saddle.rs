use std::cmp::Ordering;

use super::{FlatError, Result, TranslationSurface, Vec2};

/// Default cap on the number of triangles developed by one enumeration.
pub const DEFAULT_BUDGET: usize = 20_000_000;

const COLLINEAR: f64 = 1e-12;
const DEDUP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SaddleConnection {
    pub holonomy: Vec2,
    pub start: usize,
    pub end: usize,
}

impl SaddleConnection {
    pub fn length(&self) -> f64 {
        self.holonomy.norm()
    }
}

/// A triangle seen from the source through its side `k`; `pa` is the right
/// end (vertex `k+1`) and `pb` the left end (vertex `k`) of that side. The
/// open cone between the rays `wr` and `wl` is still unobstructed.
struct Item {
    tri: usize,
    k: usize,
    pa: Vec2,
    pb: Vec2,
    wr: Vec2,
    wl: Vec2,
}

fn strictly_left(a: Vec2, b: Vec2) -> bool {
    a.cross(b) > COLLINEAR * a.norm() * b.norm()
}

/// Distance from the origin to the part of segment `[pa, pb]` inside the cone `(wr, wl)`.
fn window_distance(pa: Vec2, pb: Vec2, wr: Vec2, wl: Vec2) -> f64 {
    let dir = pb - pa;
    let hit = |w: Vec2| {
        let den = w.cross(dir);
        if den.abs() < f64::MIN_POSITIVE {
            return None;
        }
        Some((-w.cross(pa) / den).clamp(0.0, 1.0))
    };
    let s0 = hit(wr).unwrap_or(0.0);
    let s1 = hit(wl).unwrap_or(1.0);
    let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
    let a = pa + dir * lo;
    let b = pa + dir * hi;
    segment_origin_distance(a, b)
}

fn segment_origin_distance(a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return a.norm();
    }
    let s = (-a.dot(d) / len2).clamp(0.0, 1.0);
    (a + d * s).norm()
}

fn develop_corner(s: &TranslationSurface, t0: usize, k0: usize, l: f64, budget: &mut usize, out: &mut Vec<SaddleConnection>) -> Result<()> {
    let start = s.vertex_class(t0, k0);
    let e0 = s.side(t0, k0);
    if e0.norm() <= l {
        out.push(SaddleConnection {
            holonomy: e0,
            start,
            end: s.vertex_class(t0, (k0 + 1) % 3),
        });
    }
    let opposite = -s.side(t0, (k0 + 2) % 3);
    let (t1, k1) = s.neighbor(t0, (k0 + 1) % 3);
    let mut stack = vec![Item {
        tri: t1,
        k: k1,
        pa: e0,
        pb: opposite,
        wr: e0,
        wl: opposite,
    }];
    while let Some(it) = stack.pop() {
        if window_distance(it.pa, it.pb, it.wr, it.wl) > l {
            continue;
        }
        if *budget == 0 {
            return Err(FlatError::BudgetExceeded { budget: 0 });
        }
        *budget -= 1;
        let k1 = (it.k + 1) % 3;
        let k2 = (it.k + 2) % 3;
        let c = it.pa + s.side(it.tri, k1);
        let right_of_left = strictly_left(c, it.wl);
        let left_of_right = strictly_left(it.wr, c);
        if right_of_left && left_of_right {
            if c.norm() <= l {
                out.push(SaddleConnection {
                    holonomy: c,
                    start,
                    end: s.vertex_class(it.tri, k2),
                });
            }
            let (ta, ka) = s.neighbor(it.tri, k1);
            stack.push(Item {
                tri: ta,
                k: ka,
                pa: it.pa,
                pb: c,
                wr: it.wr,
                wl: c,
            });
            let (tb, kb) = s.neighbor(it.tri, k2);
            stack.push(Item {
                tri: tb,
                k: kb,
                pa: c,
                pb: it.pb,
                wr: c,
                wl: it.wl,
            });
        } else if left_of_right {
            // c lies on or left of the window: only side k1 (pa -> c) is visible
            let (ta, ka) = s.neighbor(it.tri, k1);
            stack.push(Item {
                tri: ta,
                k: ka,
                pa: it.pa,
                pb: c,
                wr: it.wr,
                wl: it.wl,
            });
        } else {
            let (tb, kb) = s.neighbor(it.tri, k2);
            stack.push(Item {
                tri: tb,
                k: kb,
                pa: c,
                pb: it.pb,
                wr: it.wr,
                wl: it.wl,
            });
        }
    }
    Ok(())
}

fn order(a: &SaddleConnection, b: &SaddleConnection) -> Ordering {
    a.length()
        .total_cmp(&b.length())
        .then(a.holonomy.angle().total_cmp(&b.holonomy.angle()))
        .then(a.start.cmp(&b.start))
        .then(a.end.cmp(&b.end))
}

/// All oriented saddle connections of length at most `l`, sorted by length then angle.
pub fn enumerate_saddle_connections(s: &TranslationSurface, l: f64) -> Result<Vec<SaddleConnection>> {
    enumerate_with_budget(s, l, DEFAULT_BUDGET)
}

pub fn enumerate_with_budget(s: &TranslationSurface, l: f64, budget: usize) -> Result<Vec<SaddleConnection>> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(FlatError::Domain(format!("length bound L = {l} must be positive and finite")));
    }
    let mut remaining = budget;
    let mut out = Vec::new();
    for t in 0..s.triangles.len() {
        for k in 0..3 {
            develop_corner(s, t, k, l, &mut remaining, &mut out).map_err(|e| match e {
                FlatError::BudgetExceeded { .. } => FlatError::BudgetExceeded { budget },
                other => other,
            })?;
        }
    }
    out.sort_by(order);
    let scale = DEDUP * (1.0 + l);
    let mut unique: Vec<SaddleConnection> = Vec::with_capacity(out.len());
    for sc in out {
        // equal holonomies have lengths within the tolerance, so look back only that far
        let dup = unique
            .iter()
            .rev()
            .take_while(|u| sc.length() - u.length() <= scale)
            .any(|u| u.start == sc.start && u.end == sc.end && (u.holonomy - sc.holonomy).norm() <= scale);
        if !dup {
            unique.push(sc);
        }
    }
    Ok(unique)
}

/// `ℓ(q)`: the length of the shortest saddle connection.
pub fn shortest_saddle_connection(s: &TranslationSurface) -> Result<f64> {
    shortest_with_budget(s, DEFAULT_BUDGET)
}

pub fn shortest_with_budget(s: &TranslationSurface, budget: usize) -> Result<f64> {
    // every edge joins two marked points, so the shortest edge bounds ℓ from above
    let mut l = s.min_edge_length() * (1.0 + 1e-9);
    loop {
        let found = enumerate_with_budget(s, l, budget)?;
        if let Some(first) = found.first() {
            return Ok(first.length());
        }
        l *= 2.0;
    }
}
