//! Symmetric one-homogeneous convex costs on the plane and the derived
//! objects: dual norms, Wulff shapes, and the anisotropic length of
//! polygonal boundaries.
//!
//! Four kinds of cost are supported. `Euclidean` and `PNorm` have closed
//! forms throughout. `Crystalline` costs are given by a finite symmetric
//! set of weighted directions and evaluate as the support function of that
//! point set, so their unit circle is a polygon. `Table` costs tabulate a
//! support function on an angular grid and are interpreted the same way
//! (support function of the sampled points), which keeps the one-homogeneous
//! extension convex regardless of the tabulated data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Polygon, Vec2};

/// Angular tolerance of the golden-section search used for dual norms of
/// polyhedral kinds.
pub const DUAL_SEARCH_TOL: f64 = 1e-10;

/// Declared tolerance on `|phi*(vertex) - 1|` for Wulff-shape vertices.
pub const WULFF_VERTEX_TOL: f64 = 1e-8;

/// Step for central finite differences when no closed-form gradient exists.
const GRAD_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    Euclidean,
    /// p-norm with exponent in (1, inf). The p = 1 limit is handled as a
    /// crystalline cost, see [`NormSpec::crystalline_l1`].
    PNorm { p: f64 },
    /// Weighted directions (direction, weight); the set is symmetrized at
    /// construction.
    Crystalline { directions: Vec<(Vec2, f64)> },
    /// Support-function samples (angle, value); symmetrized at construction.
    Table { entries: Vec<(f64, f64)> },
}

/// A symmetric, positively 1-homogeneous, convex, coercive cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    kind: NormKind,
    /// Symmetric support vectors for the polyhedral kinds; the cost is
    /// `max_i s_i . v`. Empty for closed-form kinds.
    support: Vec<Vec2>,
    /// Whether phi^2 is strictly convex and differentiable.
    strict: bool,
}

impl NormSpec {
    pub fn euclidean() -> NormSpec {
        NormSpec { kind: NormKind::Euclidean, support: Vec::new(), strict: true }
    }

    pub fn p_norm(p: f64) -> Result<NormSpec> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::invalid(format!("p-norm exponent must lie in (1, inf), got {p}")));
        }
        Ok(NormSpec { kind: NormKind::PNorm { p }, support: Vec::new(), strict: true })
    }

    /// Crystalline cost from weighted directions. The input set is
    /// symmetrized (`-d` added for every `d`); it must contain two
    /// non-parallel directions so the cost is positive away from zero.
    pub fn crystalline(directions: Vec<(Vec2, f64)>) -> Result<NormSpec> {
        if directions.is_empty() {
            return Err(Error::invalid("crystalline cost needs at least one direction"));
        }
        let mut support = Vec::with_capacity(directions.len() * 2);
        for &(d, w) in &directions {
            if !d.is_finite() || !w.is_finite() || w <= 0.0 || d.norm() == 0.0 {
                return Err(Error::invalid(
                    "crystalline directions must be finite and nonzero with positive weights",
                ));
            }
            support.push(d.scale(w));
            support.push(d.scale(-w));
        }
        if !spans_plane(&support) {
            return Err(Error::invalid(
                "crystalline directions must contain two non-parallel directions",
            ));
        }
        Ok(NormSpec { kind: NormKind::Crystalline { directions }, support, strict: false })
    }

    /// The l1 norm as a crystalline cost: directions `(1, 1)` and `(1, -1)`
    /// of weight one, whose Wulff shape is the square with corners
    /// `(+-1, +-1)`.
    pub fn crystalline_l1() -> NormSpec {
        NormSpec::crystalline(vec![(Vec2::new(1.0, 1.0), 1.0), (Vec2::new(1.0, -1.0), 1.0)])
            .expect("l1 directions are valid")
    }

    /// Tabulated support function: entries `(theta, value)` with positive
    /// values. Interpreted as the support function of the point set
    /// `value * (cos theta, sin theta)` after symmetrization.
    pub fn table(entries: Vec<(f64, f64)>) -> Result<NormSpec> {
        if entries.len() < 2 {
            return Err(Error::invalid("tabulated cost needs at least two entries"));
        }
        let mut support = Vec::with_capacity(entries.len() * 2);
        for &(theta, h) in &entries {
            if !theta.is_finite() || !h.is_finite() || h <= 0.0 {
                return Err(Error::invalid(
                    "table entries must be finite angles with positive values",
                ));
            }
            let p = Vec2::from_angle(theta).scale(h);
            support.push(p);
            support.push(-p);
        }
        if !spans_plane(&support) {
            return Err(Error::invalid("table entries must span two non-parallel directions"));
        }
        Ok(NormSpec { kind: NormKind::Table { entries }, support, strict: false })
    }

    /// Tabulated cost whose Wulff shape is exactly the given centrally
    /// symmetric convex polygon (centered at the origin): tabulates the
    /// polygon's support function at its own vertex angles.
    pub fn from_wulff_polygon(poly: &Polygon) -> Result<NormSpec> {
        let entries: Vec<(f64, f64)> =
            poly.vertices.iter().map(|v| (v.angle(), v.norm())).collect();
        NormSpec::table(entries)
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// Whether phi^2 is declared strictly convex and differentiable.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Evaluates the cost. Zero exactly at the origin, positive elsewhere.
    pub fn eval(&self, v: Vec2) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::invalid("norm evaluated at non-finite vector"));
        }
        Ok(self.raw(v))
    }

    pub(crate) fn raw(&self, v: Vec2) -> f64 {
        match &self.kind {
            NormKind::Euclidean => v.norm(),
            NormKind::PNorm { p } => {
                (v.x.abs().powf(*p) + v.y.abs().powf(*p)).powf(1.0 / *p)
            }
            _ => {
                let mut best = 0.0f64;
                for &s in &self.support {
                    best = best.max(s.dot(v));
                }
                best
            }
        }
    }

    /// Dual norm `phi*(x) = sup { x . y : phi(y) <= 1 }`.
    ///
    /// Closed form for euclidean (self-dual) and p-norms (Holder conjugate);
    /// golden-section search over the angular parameter of the unit circle
    /// for the polyhedral kinds.
    pub fn dual(&self, x: Vec2) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::invalid("dual norm evaluated at non-finite vector"));
        }
        Ok(match &self.kind {
            NormKind::Euclidean => x.norm(),
            NormKind::PNorm { p } => {
                let q = p / (p - 1.0);
                (x.x.abs().powf(q) + x.y.abs().powf(q)).powf(1.0 / q)
            }
            _ => self.dual_by_search(x),
        })
    }

    /// Maximizes `x . u(theta) / phi(u(theta))` over the angle; the maximum
    /// over the unit circle of phi is the dual value. A coarse scan brackets
    /// the peak, golden-section refines it.
    fn dual_by_search(&self, x: Vec2) -> f64 {
        if x.norm() == 0.0 {
            return 0.0;
        }
        let g = |theta: f64| {
            let u = Vec2::from_angle(theta);
            x.dot(u) / self.raw(u)
        };
        const SCAN: usize = 1024;
        let mut best_theta = 0.0;
        let mut best = f64::NEG_INFINITY;
        for k in 0..SCAN {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / SCAN as f64;
            let val = g(theta);
            if val > best {
                best = val;
                best_theta = theta;
            }
        }
        let step = 2.0 * std::f64::consts::PI / SCAN as f64;
        let (mut a, mut b) = (best_theta - step, best_theta + step);
        let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (g(c), g(d));
        while b - a > DUAL_SEARCH_TOL {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = g(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = g(d);
            }
        }
        g(0.5 * (a + b)).max(best)
    }

    /// Polygonal approximation of the Wulff shape `{ phi* <= 1 }`, sampling
    /// the boundary radially at `resolution` angles. Every returned vertex
    /// satisfies `|phi*(v) - 1| <= WULFF_VERTEX_TOL`.
    pub fn wulff_shape(&self, resolution: usize) -> Result<Polygon> {
        if resolution < 3 {
            return Err(Error::invalid("wulff_shape needs resolution >= 3"));
        }
        let mut vertices = Vec::with_capacity(resolution);
        for k in 0..resolution {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
            let u = Vec2::from_angle(theta);
            let r = self.dual(u)?;
            vertices.push(u.scale(1.0 / r));
        }
        Polygon::new(vertices)
    }

    /// Wulff shape rescaled to unit area by `|W|^{-1/2}`.
    pub fn normalized_wulff_shape(&self, resolution: usize) -> Result<Polygon> {
        let w = self.wulff_shape(resolution)?;
        let area = w.area();
        Ok(w.scaled(1.0 / area.sqrt()))
    }

    /// Anisotropic cost of a straight edge with displacement `v`: the cost of
    /// the rotated normal, `phi(v_perp)`. One-homogeneous and symmetric in `v`.
    pub fn segment_cost(&self, v: Vec2) -> f64 {
        debug_assert!(v.is_finite());
        self.raw(v.perp())
    }

    /// Anisotropic perimeter of a simple polygon: sum of `segment_cost` over
    /// its edges. Equals Euclidean arc length for the euclidean cost.
    pub fn polygon_perimeter(&self, poly: &Polygon) -> Result<f64> {
        if poly.len() < 3 {
            return Err(Error::invalid("perimeter of a degenerate polygon"));
        }
        Ok(poly.edges().iter().map(|&e| self.segment_cost(e)).sum())
    }

    /// Gradient of phi away from the origin. Closed form for euclidean and
    /// p-norms; central finite differences otherwise.
    pub fn gradient(&self, v: Vec2) -> Vec2 {
        debug_assert!(v.norm() > 0.0);
        match &self.kind {
            NormKind::Euclidean => v.scale(1.0 / v.norm()),
            NormKind::PNorm { p } => {
                let phi = self.raw(v);
                let g = |t: f64| t.signum() * t.abs().powf(p - 1.0);
                Vec2::new(g(v.x), g(v.y)).scale(phi.powf(1.0 - p))
            }
            _ => {
                let h = GRAD_FD_STEP;
                let dx = (self.raw(v + Vec2::new(h, 0.0)) - self.raw(v - Vec2::new(h, 0.0)))
                    / (2.0 * h);
                let dy = (self.raw(v + Vec2::new(0.0, h)) - self.raw(v - Vec2::new(0.0, h)))
                    / (2.0 * h);
                Vec2::new(dx, dy)
            }
        }
    }

    /// Minimum of `segment_cost` over unit vectors on an angular grid.
    /// Used by the enumeration cutoff certificate.
    pub fn min_unit_cost(&self, grid: usize) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..grid {
            let theta = std::f64::consts::PI * k as f64 / grid as f64;
            best = best.min(self.segment_cost(Vec2::from_angle(theta)));
        }
        best
    }
}

fn spans_plane(support: &[Vec2]) -> bool {
    for (i, &a) in support.iter().enumerate() {
        for &b in &support[i + 1..] {
            if a.cross(b).abs() > 1e-12 * a.norm() * b.norm() {
                return true;
            }
        }
    }
    false
}
