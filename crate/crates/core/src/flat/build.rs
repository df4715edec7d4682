use std::f64::consts::PI;

use super::{FlatError, Result, Side, TranslationSurface, Vec2};

pub const BUILTIN_NAMES: [&str; 3] = ["torus", "L3", "octagon"];

/// Permutation of `{0, …, n-1}`, written in cycle notation over `{1, …, n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(FlatError::Construction(format!("{images:?} is not a permutation")));
            }
        }
        Ok(Permutation(images))
    }

    /// Parses cycles such as `(1,2,3)(4)` or `(1 2 3)`; unlisted points are fixed.
    pub fn parse_cycles(text: &str, n: usize) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut seen = vec![false; n];
        let bad = |msg: String| FlatError::Construction(format!("cycle notation '{text}': {msg}"));
        let mut rest = text.trim();
        if rest == "id" || rest == "()" || rest.is_empty() {
            return Ok(Permutation(images));
        }
        while !rest.is_empty() {
            let open = rest.strip_prefix('(').ok_or_else(|| bad("expected '('".into()))?;
            let close = open.find(')').ok_or_else(|| bad("missing ')'".into()))?;
            let body = &open[..close];
            let cycle: Vec<usize> = body
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|_| bad(format!("'{s}' is not a positive integer"))))
                .collect::<Result<_>>()?;
            for w in 0..cycle.len() {
                let (a, b) = (cycle[w], cycle[(w + 1) % cycle.len()]);
                if a == 0 || a > n || b == 0 || b > n {
                    return Err(bad(format!("points must lie in 1..={n}")));
                }
                if std::mem::replace(&mut seen[a - 1], true) {
                    return Err(bad(format!("{a} appears twice")));
                }
                images[a - 1] = b - 1;
            }
            rest = open[close + 1..].trim_start();
        }
        Ok(Permutation(images))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Permutation(inv)
    }
}

fn transitive(h: &Permutation, v: &Permutation) -> bool {
    let n = h.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in [h.apply(i), v.apply(i)] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// Square-tiled surface: square `i` has square `h(i)` to its right and `v(i)` above it.
pub fn build_origami(h: &Permutation, v: &Permutation) -> Result<TranslationSurface> {
    let n = h.len();
    if n == 0 || v.len() != n {
        return Err(FlatError::Construction(format!("permutations of sizes {} and {} do not match", n, v.len())));
    }
    if !transitive(h, v) {
        return Err(FlatError::Disconnected);
    }
    // per square: diagonal, bottom and right edge
    let diag = |i: usize| 3 * i;
    let bottom = |i: usize| 3 * i + 1;
    let right = |i: usize| 3 * i + 2;
    let mut edges = Vec::with_capacity(3 * n);
    for _ in 0..n {
        edges.extend([Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]);
    }
    let hinv = h.inverse();
    let mut triangles = Vec::with_capacity(2 * n);
    for i in 0..n {
        // lower-right triangle: bottom, right, diagonal back to the origin
        triangles.push([Side::fwd(bottom(i)), Side::fwd(right(i)), Side::bwd(diag(i))]);
        // upper-left triangle: diagonal, top (bottom of v(i)), left (right of h⁻¹(i))
        triangles.push([Side::fwd(diag(i)), Side::bwd(bottom(v.apply(i))), Side::bwd(right(hinv.apply(i)))]);
    }
    TranslationSurface::from_parts(edges, triangles)
}

fn triangle_contains(a: Vec2, b: Vec2, c: Vec2, p: Vec2) -> bool {
    let eps = 1e-12;
    (b - a).cross(p - a) >= -eps && (c - b).cross(p - b) >= -eps && (a - c).cross(p - c) >= -eps
}

/// Ear clipping of a simple counter-clockwise polygon; returns vertex index triples.
fn ear_clip(pts: &[Vec2]) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut out = Vec::with_capacity(pts.len() - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&j| {
            let (a, b, c) = (idx[(j + m - 1) % m], idx[j], idx[(j + 1) % m]);
            let (pa, pb, pc) = (pts[a], pts[b], pts[c]);
            if (pb - pa).cross(pc - pb) <= 1e-12 {
                return false;
            }
            idx.iter().all(|&q| q == a || q == b || q == c || !triangle_contains(pa, pb, pc, pts[q]))
        });
        let j = ear.ok_or_else(|| FlatError::Construction("polygon is not simple".into()))?;
        out.push([idx[(j + m - 1) % m], idx[j], idx[(j + 1) % m]]);
        idx.remove(j);
    }
    out.push([idx[0], idx[1], idx[2]]);
    Ok(out)
}

/// Glues a polygon with boundary edge vectors `edges` (counter-clockwise)
/// along the involution `pairing`, then triangulates it.
pub fn build_polygon(edges: &[Vec2], pairing: &[usize]) -> Result<TranslationSurface> {
    let n = edges.len();
    if n < 3 || pairing.len() != n {
        return Err(FlatError::Construction("need at least three edges and one pairing entry per edge".into()));
    }
    let scale = edges.iter().map(|e| e.norm()).fold(0.0, f64::max);
    if edges.iter().any(|e| !(e.norm() > 1e-12 * scale)) {
        return Err(FlatError::Construction("zero-length edge".into()));
    }
    let sum = edges.iter().fold(Vec2::ZERO, |a, &e| a + e);
    if sum.norm() > 1e-9 * scale {
        return Err(FlatError::Construction(format!("polygon does not close (gap {:.3e})", sum.norm())));
    }
    for (i, &j) in pairing.iter().enumerate() {
        if j >= n || j == i || pairing[j] != i {
            return Err(FlatError::Construction(format!("pairing is not a fixed-point-free involution at edge {i}")));
        }
        if (edges[i] + edges[j]).norm() > 1e-9 * scale {
            return Err(FlatError::Construction(format!("paired edges {i} and {j} are not opposite")));
        }
    }
    let mut pts = Vec::with_capacity(n);
    let mut p = Vec2::ZERO;
    for e in edges {
        pts.push(p);
        p = p + *e;
    }
    let signed_area: f64 = (0..n).map(|k| pts[k].cross(pts[(k + 1) % n])).sum::<f64>() / 2.0;
    if signed_area <= 0.0 {
        return Err(FlatError::Construction("polygon must be counter-clockwise with positive area".into()));
    }
    let tris = ear_clip(&pts)?;

    // boundary edge k runs pts[k] -> pts[k+1]; the lower index of a pair owns the edge
    let mut surface_edges: Vec<Vec2> = Vec::new();
    let mut boundary_edge = vec![usize::MAX; n];
    for k in 0..n {
        if k < pairing[k] {
            boundary_edge[k] = surface_edges.len();
            surface_edges.push(edges[k]);
        }
    }
    let mut diagonals: Vec<((usize, usize), usize)> = Vec::new();
    let mut side_for = |a: usize, b: usize, surface_edges: &mut Vec<Vec2>| -> Side {
        if b == (a + 1) % n {
            return if k_owns(a, pairing) {
                Side::fwd(boundary_edge[a])
            } else {
                Side::bwd(boundary_edge[pairing[a]])
            };
        }
        if let Some(&(_, e)) = diagonals.iter().find(|((x, y), _)| *x == b && *y == a) {
            return Side::bwd(e);
        }
        let e = surface_edges.len();
        surface_edges.push(pts[b] - pts[a]);
        diagonals.push(((a, b), e));
        Side::fwd(e)
    };
    let mut triangles = Vec::with_capacity(tris.len());
    for [a, b, c] in tris {
        let s0 = side_for(a, b, &mut surface_edges);
        let s1 = side_for(b, c, &mut surface_edges);
        let s2 = side_for(c, a, &mut surface_edges);
        triangles.push([s0, s1, s2]);
    }
    TranslationSurface::from_parts(surface_edges, triangles)
}

fn k_owns(k: usize, pairing: &[usize]) -> bool {
    k < pairing[k]
}

/// Regular octagon of unit side with opposite sides identified.
fn octagon() -> Result<TranslationSurface> {
    let edges: Vec<Vec2> = (0..8)
        .map(|k| {
            let a = k as f64 * PI / 4.0;
            Vec2::new(a.cos(), a.sin())
        })
        .collect();
    let pairing: Vec<usize> = (0..8).map(|k| (k + 4) % 8).collect();
    build_polygon(&edges, &pairing)
}

/// Named fixture surfaces: the square torus, the three-square L and the regular octagon.
pub fn builtin(name: &str) -> Result<TranslationSurface> {
    match name {
        "torus" => build_origami(&Permutation::identity(1), &Permutation::identity(1)),
        "L3" | "l3" => build_origami(&Permutation::parse_cycles("(1,2,3)", 3)?, &Permutation::parse_cycles("(1)(2,3)", 3)?),
        "octagon" => octagon(),
        other => Err(FlatError::Domain(format!(
            "unknown builtin surface '{other}' (known: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
