//! Plain 2-D vectors and simple polygons.
//!
//! Everything here is exact arithmetic on `f64` with no tolerance policy of
//! its own; predicates that need a tolerance take one explicitly.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A point or displacement in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// 2-D cross product `self.x * other.y - self.y * other.x`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Counterclockwise rotation by 90 degrees: `(x, y) -> (-y, x)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn scale(self, t: f64) -> Vec2 {
        Vec2::new(self.x * t, self.y * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_angle(theta: f64) -> Vec2 {
        Vec2::new(theta.cos(), theta.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
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
    fn mul(self, rhs: f64) -> Vec2 {
        self.scale(rhs)
    }
}

/// A simple polygon given by its vertices in counterclockwise order.
///
/// The polygon is always treated as closed; the last vertex connects back to
/// the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    /// Builds a polygon, checking that it has at least three vertices and
    /// positive signed area (counterclockwise orientation).
    pub fn new(vertices: Vec<Vec2>) -> Result<Polygon> {
        if vertices.len() < 3 {
            return Err(Error::invalid(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let poly = Polygon { vertices };
        if poly.signed_area() <= 0.0 {
            return Err(Error::invalid("polygon must be counterclockwise with positive area"));
        }
        Ok(poly)
    }

    /// Builds a polygon without orientation/size checks. For internal use
    /// where the construction guarantees validity.
    pub fn new_unchecked(vertices: Vec<Vec2>) -> Polygon {
        Polygon { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace formula; positive for counterclockwise orientation.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.cross(b);
        }
        acc / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Edge displacement vectors, in order.
    pub fn edges(&self) -> Vec<Vec2> {
        let n = self.vertices.len();
        (0..n).map(|i| self.vertices[(i + 1) % n] - self.vertices[i]).collect()
    }

    /// Largest pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, &a) in self.vertices.iter().enumerate() {
            for &b in &self.vertices[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }

    /// Centroid of the vertex set (not the area centroid).
    pub fn vertex_centroid(&self) -> Vec2 {
        let mut c = Vec2::ZERO;
        for &v in &self.vertices {
            c = c + v;
        }
        c.scale(1.0 / self.vertices.len() as f64)
    }

    pub fn translate(&self, t: Vec2) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|&v| v + t).collect() }
    }

    pub fn scaled(&self, t: f64) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|&v| v.scale(t)).collect() }
    }

    /// Interior angles in radians, one per vertex.
    pub fn interior_angles(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let prev = self.vertices[(i + n - 1) % n];
                let cur = self.vertices[i];
                let next = self.vertices[(i + 1) % n];
                let u = prev - cur;
                let v = next - cur;
                let cos = u.dot(v) / (u.norm() * v.norm());
                cos.clamp(-1.0, 1.0).acos()
            })
            .collect()
    }

    /// Point-in-polygon by winding of crossings; `true` for strictly
    /// interior points, boundary points may go either way.
    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x = a.x + t * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Simplicity check: no two non-adjacent edges intersect.
    pub fn is_simple(&self, tol: f64) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a1, a2) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in i + 1..n {
                // Skip adjacent edges (shared vertex).
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (b1, b2) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_intersect(a1, a2, b1, b2, tol) {
                    return false;
                }
            }
        }
        true
    }

    /// Drops consecutive duplicate vertices (within `tol`) and colinear
    /// vertices. Used to clean up degenerate hexagons.
    pub fn simplified(&self, tol: f64) -> Polygon {
        let mut verts: Vec<Vec2> = Vec::new();
        for &v in &self.vertices {
            if let Some(&last) = verts.last() {
                if (v - last).norm() <= tol {
                    continue;
                }
            }
            verts.push(v);
        }
        while verts.len() > 1 && (verts[0] - *verts.last().unwrap()).norm() <= tol {
            verts.pop();
        }
        // Remove colinear middle vertices.
        let mut out: Vec<Vec2> = Vec::new();
        let n = verts.len();
        for i in 0..n {
            let prev = verts[(i + n - 1) % n];
            let cur = verts[i];
            let next = verts[(i + 1) % n];
            let u = cur - prev;
            let v = next - cur;
            if u.cross(v).abs() > tol * (u.norm() * v.norm()).max(tol) {
                out.push(cur);
            }
        }
        if out.len() < 3 {
            return Polygon { vertices: verts };
        }
        Polygon { vertices: out }
    }
}

/// Proper or touching intersection of two closed segments.
pub fn segments_intersect(a1: Vec2, a2: Vec2, b1: Vec2, b2: Vec2, tol: f64) -> bool {
    let d1 = a2 - a1;
    let d2 = b2 - b1;
    let denom = d1.cross(d2);
    let diff = b1 - a1;
    if denom.abs() < tol {
        // Parallel: overlap only if colinear and ranges intersect.
        if diff.cross(d1).abs() > tol {
            return false;
        }
        let len = d1.norm_sq();
        if len == 0.0 {
            return (b1 - a1).norm() <= tol;
        }
        let t0 = diff.dot(d1) / len;
        let t1 = (b2 - a1).dot(d1) / len;
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        return hi >= -tol && lo <= 1.0 + tol;
    }
    let t = diff.cross(d2) / denom;
    let u = diff.cross(d1) / denom;
    (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u)
}

/// Do two convex polygons have overlapping interiors? Separating-axis test.
///
/// `tol` is the slack allowed along each axis, so shared edges do not count
/// as overlap.
pub fn convex_interiors_overlap(a: &Polygon, b: &Polygon, tol: f64) -> bool {
    !has_separating_axis(a, b, tol) && !has_separating_axis(b, a, tol)
}

fn has_separating_axis(a: &Polygon, b: &Polygon, tol: f64) -> bool {
    let n = a.vertices.len();
    for i in 0..n {
        let edge = a.vertices[(i + 1) % n] - a.vertices[i];
        let axis = edge.perp();
        let (a_min, a_max) = project(a, axis);
        let (b_min, b_max) = project(b, axis);
        let scale = axis.norm();
        if a_max <= b_min + tol * scale || b_max <= a_min + tol * scale {
            return true;
        }
    }
    false
}

fn project(p: &Polygon, axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &p.vertices {
        let t = v.dot(axis);
        lo = lo.min(t);
        hi = hi.max(t);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn shoelace_of_unit_square() {
        assert_eq!(unit_square().signed_area(), 1.0);
    }

    #[test]
    fn clockwise_rejected() {
        let r = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn degenerate_rejected() {
        assert!(Polygon::new(vec![Vec2::ZERO, Vec2::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn square_diameter_is_diagonal() {
        assert!((unit_square().diameter() - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn point_in_polygon() {
        let sq = unit_square();
        assert!(sq.contains(Vec2::new(0.5, 0.5)));
        assert!(!sq.contains(Vec2::new(1.5, 0.5)));
        assert!(!sq.contains(Vec2::new(-0.1, 0.2)));
    }

    #[test]
    fn interior_angles_of_square() {
        for a in unit_square().interior_angles() {
            assert!((a - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_translates_do_not_overlap() {
        let a = unit_square();
        let b = a.translate(Vec2::new(1.0, 0.0));
        let c = a.translate(Vec2::new(0.5, 0.5));
        assert!(!convex_interiors_overlap(&a, &b, 1e-9));
        assert!(convex_interiors_overlap(&a, &c, 1e-9));
    }

    #[test]
    fn self_intersecting_polygon_detected() {
        let bow = Polygon {
            vertices: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
            ],
        };
        assert!(!bow.is_simple(1e-12));
        assert!(unit_square().is_simple(1e-12));
    }
}
