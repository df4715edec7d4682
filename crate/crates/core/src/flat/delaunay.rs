use std::f64::consts::PI;

use super::{FlatError, Result, Side, TranslationSurface};

const FLIP_SLACK: f64 = 1e-10;
const MAX_SWEEPS: usize = 100_000;

fn corner_angle(s: &TranslationSurface, t: usize, k: usize) -> f64 {
    let a = s.side(t, k);
    let b = -s.side(t, (k + 2) % 3);
    a.cross(b).atan2(a.dot(b))
}

impl TranslationSurface {
    /// Sum of the two angles opposite edge `e`.
    fn opposite_angle_sum(&self, e: usize) -> f64 {
        let [fs, bs] = self.edge_slots[e];
        let (t, k) = (fs / 3, fs % 3);
        let (u, j) = (bs / 3, bs % 3);
        corner_angle(self, t, (k + 2) % 3) + corner_angle(self, u, (j + 2) % 3)
    }

    pub fn is_delaunay(&self) -> bool {
        (0..self.edges.len()).all(|e| self.edge_slots[e][0] / 3 == self.edge_slots[e][1] / 3 || self.opposite_angle_sum(e) <= PI + FLIP_SLACK)
    }

    /// Replaces edge `e` by the other diagonal of the quadrilateral formed by its two triangles.
    fn flip(&mut self, e: usize) {
        let [fs, bs] = self.edge_slots[e];
        let (t, k) = (fs / 3, fs % 3);
        let (u, j) = (bs / 3, bs % 3);
        let tk2 = self.triangles[t][(k + 2) % 3];
        let tk1 = self.triangles[t][(k + 1) % 3];
        let uj1 = self.triangles[u][(j + 1) % 3];
        let uj2 = self.triangles[u][(j + 2) % 3];
        // from the corner opposite e in t to the corner opposite e in u
        let d = self.side(u, (j + 1) % 3) + self.side(t, (k + 2) % 3);
        self.edges[e] = d;
        self.triangles[t] = [tk2, uj1, Side::bwd(e)];
        self.triangles[u] = [uj2, tk1, Side::fwd(e)];
        for (tri, idx) in [(t, 0), (t, 1), (t, 2), (u, 0), (u, 1), (u, 2)] {
            let side = self.triangles[tri][idx];
            self.edge_slots[side.edge][if side.forward { 0 } else { 1 }] = 3 * tri + idx;
        }
    }

    /// Flips edges until every edge satisfies the Delaunay angle condition.
    pub fn make_delaunay(&mut self) -> Result<usize> {
        let mut flips = 0;
        for _ in 0..MAX_SWEEPS {
            let mut changed = false;
            for e in 0..self.edges.len() {
                let [fs, bs] = self.edge_slots[e];
                if fs / 3 == bs / 3 {
                    continue;
                }
                if self.opposite_angle_sum(e) > PI + FLIP_SLACK {
                    self.flip(e);
                    flips += 1;
                    changed = true;
                }
            }
            if !changed {
                self.recompute_vertices()?;
                return Ok(flips);
            }
        }
        Err(FlatError::Construction("Delaunay flips did not terminate".into()))
    }
}

#[cfg(test)]
mod tests {
    use crate::flat::builtin;
    use crate::hyperbolic::Isometry2;

    #[test]
    fn fixtures_are_delaunay() {
        for name in ["torus", "L3", "octagon"] {
            let mut s = builtin(name).unwrap();
            s.make_delaunay().unwrap();
            assert!(s.is_delaunay(), "{name}");
        }
    }

    #[test]
    fn flips_restore_short_edges_after_stretching() {
        let s = builtin("L3").unwrap();
        let m = Isometry2::geodesic(3.0).compose(&Isometry2::rotation(0.4));
        let mut t = s.apply_linear(&m).unwrap();
        let before = t.edges().iter().map(|v| v.norm()).fold(0.0, f64::max);
        t.make_delaunay().unwrap();
        assert!(t.is_delaunay());
        assert!((t.area() - 3.0).abs() < 1e-9);
        assert_eq!(t.cone_points()[0].multiple, 3);
        let after = t.edges().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(after < before);
        for tri in 0..t.triangles().len() {
            assert!(t.side(tri, 0).cross(t.side(tri, 1)) > 0.0);
        }
    }
}
