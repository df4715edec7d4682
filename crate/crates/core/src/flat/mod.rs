//! Translation surfaces given by triangulations with edge gluings.
//!
//! A surface stores one vector per edge and, for every triangle, three sides
//! that reference an edge either forward or reversed. Each edge is used by
//! exactly two sides with opposite orientation, which encodes the gluing.
//! Corner `k` of a triangle is the start point of side `k`; every vertex of the
//! triangulation is a marked point, so regular points of angle `2π` count as
//! endpoints of saddle connections.

mod build;
mod delaunay;
mod drift;
mod io;
mod saddle;

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::hyperbolic::Isometry2;

pub use build::{build_origami, build_polygon, builtin, Permutation, BUILTIN_NAMES};
pub use drift::{combine_drift, logsmooth_check, logsmooth_check_with, v0, v0_from_length, DriftCombination, DriftWeights, LogsmoothReport};
pub use io::{parse_surface, read_surface, write_saddle_csv, SurfaceSpec};
pub use saddle::{enumerate_saddle_connections, enumerate_with_budget, shortest_saddle_connection, shortest_with_budget, SaddleConnection, DEFAULT_BUDGET};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlatError {
    #[error("construction error: {0}")]
    Construction(String),
    #[error("surface is disconnected: <h, v> is not transitive")]
    Disconnected,
    #[error("matrix determinant {det} deviates from 1")]
    InvalidMatrix { det: f64 },
    #[error("saddle-connection enumeration exceeded its budget of {budget} triangles")]
    BudgetExceeded { budget: usize },
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, FlatError>;

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn transform(self, m: &Isometry2) -> Vec2 {
        Vec2 {
            x: m.a * self.x + m.b * self.y,
            y: m.c * self.x + m.d * self.y,
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// A triangle side: an edge traversed forward or backward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Side {
    pub edge: usize,
    pub forward: bool,
}

impl Side {
    pub const fn fwd(edge: usize) -> Side {
        Side { edge, forward: true }
    }

    pub const fn bwd(edge: usize) -> Side {
        Side { edge, forward: false }
    }
}

/// A vertex class with its total angle as a multiple of `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ConePoint {
    pub class: usize,
    pub multiple: u32,
}

#[derive(Debug, Clone)]
pub struct TranslationSurface {
    edges: Vec<Vec2>,
    triangles: Vec<[Side; 3]>,
    /// `edge_slots[e] = [forward slot, backward slot]`, slot = `3·triangle + side`.
    edge_slots: Vec<[usize; 2]>,
    /// Vertex class of each corner slot.
    vertex_class: Vec<usize>,
    cones: Vec<ConePoint>,
}

impl PartialEq for TranslationSurface {
    fn eq(&self, other: &Self) -> bool {
        self.edges == other.edges && self.triangles == other.triangles
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn interior_angle(a: Vec2, b: Vec2) -> f64 {
    // angle between the rays a and b, both leaving the same corner
    a.cross(b).atan2(a.dot(b)).abs()
}

impl TranslationSurface {
    /// Validates the combinatorics and geometry and derives the cone points.
    pub fn from_parts(edges: Vec<Vec2>, triangles: Vec<[Side; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(FlatError::Construction("no triangles".into()));
        }
        let mut edge_slots = vec![[usize::MAX; 2]; edges.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for (k, side) in tri.iter().enumerate() {
                let slot = edge_slots
                    .get_mut(side.edge)
                    .ok_or_else(|| FlatError::Construction(format!("triangle {t} references missing edge {}", side.edge)))?;
                let idx = if side.forward { 0 } else { 1 };
                if slot[idx] != usize::MAX {
                    return Err(FlatError::Construction(format!("edge {} used twice in the same direction", side.edge)));
                }
                slot[idx] = 3 * t + k;
            }
        }
        if let Some(e) = edge_slots.iter().position(|s| s.contains(&usize::MAX)) {
            return Err(FlatError::Construction(format!("edge {e} is not glued on both sides")));
        }
        let mut s = TranslationSurface {
            edges,
            triangles,
            edge_slots,
            vertex_class: Vec::new(),
            cones: Vec::new(),
        };
        let scale = s.edges.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !s.edges.iter().all(|v| v.x.is_finite() && v.y.is_finite()) {
            return Err(FlatError::Construction("non-finite edge vector".into()));
        }
        for (e, v) in s.edges.iter().enumerate() {
            if v.norm() <= 1e-12 * scale.max(1e-300) {
                return Err(FlatError::Construction(format!("edge {e} has zero length")));
            }
        }
        for t in 0..s.triangles.len() {
            let sum = s.side(t, 0) + s.side(t, 1) + s.side(t, 2);
            if sum.norm() > 1e-9 * scale {
                return Err(FlatError::Construction(format!("triangle {t} does not close")));
            }
            if s.side(t, 0).cross(s.side(t, 1)) <= 0.0 {
                return Err(FlatError::Construction(format!("triangle {t} is degenerate or clockwise")));
            }
        }
        s.recompute_vertices()?;
        Ok(s)
    }

    pub(crate) fn recompute_vertices(&mut self) -> Result<()> {
        let n = 3 * self.triangles.len();
        let mut parent: Vec<usize> = (0..n).collect();
        for slots in &self.edge_slots {
            let (a, b) = (slots[0], slots[1]);
            let (ta, ka) = (a / 3, a % 3);
            let (tb, kb) = (b / 3, b % 3);
            // start of one side is the end of the other
            let pairs = [(3 * ta + ka, 3 * tb + (kb + 1) % 3), (3 * ta + (ka + 1) % 3, 3 * tb + kb)];
            for (x, y) in pairs {
                let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                if rx != ry {
                    parent[rx.max(ry)] = rx.min(ry);
                }
            }
        }
        let mut class_of_root = vec![usize::MAX; n];
        let mut vertex_class = vec![0; n];
        let mut count = 0;
        for slot in 0..n {
            let r = find(&mut parent, slot);
            if class_of_root[r] == usize::MAX {
                class_of_root[r] = count;
                count += 1;
            }
            vertex_class[slot] = class_of_root[r];
        }
        let mut angle = vec![0.0; count];
        for slot in 0..n {
            let (t, k) = (slot / 3, slot % 3);
            angle[vertex_class[slot]] += interior_angle(self.side(t, k), -self.side(t, (k + 2) % 3));
        }
        let mut cones = Vec::with_capacity(count);
        for (class, a) in angle.iter().enumerate() {
            let m = a / TAU;
            let rounded = m.round();
            if rounded < 1.0 || (m - rounded).abs() > 1e-6 {
                return Err(FlatError::Construction(format!("vertex {class} has total angle {m:.6}·2π")));
            }
            cones.push(ConePoint {
                class,
                multiple: rounded as u32,
            });
        }
        self.vertex_class = vertex_class;
        self.cones = cones;
        self.check_topology()
    }

    fn check_topology(&self) -> Result<()> {
        let excess: i64 = self.cones.iter().map(|c| c.multiple as i64 - 1).sum();
        let euler = self.cones.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64;
        if excess % 2 != 0 || excess != -euler {
            return Err(FlatError::Construction(format!(
                "Gauss-Bonnet fails: cone excess {excess}, Euler characteristic {euler}"
            )));
        }
        if !self.is_connected() {
            return Err(FlatError::Disconnected);
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let n = self.triangles.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                let (u, _) = self.neighbor(t, k);
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    /// Vector of side `k` of triangle `t`.
    pub fn side(&self, t: usize, k: usize) -> Vec2 {
        let s = self.triangles[t][k];
        if s.forward {
            self.edges[s.edge]
        } else {
            -self.edges[s.edge]
        }
    }

    /// Triangle and side glued to side `k` of triangle `t`.
    pub fn neighbor(&self, t: usize, k: usize) -> (usize, usize) {
        let s = self.triangles[t][k];
        let slots = self.edge_slots[s.edge];
        let other = if s.forward { slots[1] } else { slots[0] };
        (other / 3, other % 3)
    }

    pub fn vertex_class(&self, t: usize, k: usize) -> usize {
        self.vertex_class[3 * t + k]
    }

    pub fn edges(&self) -> &[Vec2] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[Side; 3]] {
        &self.triangles
    }

    pub fn cone_points(&self) -> &[ConePoint] {
        &self.cones
    }

    pub fn genus(&self) -> usize {
        let excess: u32 = self.cones.iter().map(|c| c.multiple - 1).sum();
        (excess as usize + 2) / 2
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| 0.5 * self.side(t, 0).cross(self.side(t, 1))).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Post-composes the charts with `m`; the triangulation is kept as is.
    pub fn apply_linear(&self, m: &Isometry2) -> Result<TranslationSurface> {
        let det = m.det();
        if !det.is_finite() || (det - 1.0).abs() > 1e-9 {
            return Err(FlatError::InvalidMatrix { det });
        }
        let mut out = self.clone();
        for v in &mut out.edges {
            *v = v.transform(m);
        }
        Ok(out)
    }

    /// Applies `m` and then restores a Delaunay triangulation by edge flips.
    pub fn apply_linear_delaunay(&self, m: &Isometry2) -> Result<TranslationSurface> {
        let mut out = self.apply_linear(m)?;
        out.make_delaunay()?;
        Ok(out)
    }
}
