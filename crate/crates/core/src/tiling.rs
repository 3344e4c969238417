//! Exact solver for the planar problem: the minimal anisotropic-perimeter
//! fundamental domain of the integer lattice over all centrally symmetric
//! hexagon and parallelogram tilings.
//!
//! A unimodular basis `(t1, t2)` fixes the gluing translations of a family
//! of centrally symmetric hexagons with one free vertex parameter `b`; the
//! half-perimeter `f(b) = phi((t1-b)_perp) + phi(b_perp) + phi((t2-b)_perp)`
//! is convex in `b` and is minimized by coordinate descent with a compass
//! polish. Enumerating bases up to a component bound and keeping the best
//! hexagon per gluing class gives the global optimum together with a cutoff
//! certificate for everything outside the bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::anisotropy::NormSpec;
use crate::error::{Error, Result};
use crate::geometry::{Polygon, Vec2};

/// Function-value tolerance of the hexagon descent.
pub const DESCENT_TOL: f64 = 1e-10;

/// Edge norms below this flag the solution as a parallelogram.
pub const PARALLELOGRAM_EDGE_TOL: f64 = 1e-8;

/// Perimeters within this of the optimum are reported as ties.
pub const TIE_TOL: f64 = 1e-9;

/// Angular grid used for the cutoff certificate's minimal unit cost.
const PHI_MIN_GRID: usize = 4096;

/// An integer lattice vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVec {
    pub x: i64,
    pub y: i64,
}

impl LatticeVec {
    pub fn new(x: i64, y: i64) -> Self {
        LatticeVec { x, y }
    }

    pub fn to_vec2(self) -> Vec2 {
        Vec2::new(self.x as f64, self.y as f64)
    }

    pub fn det(self, other: LatticeVec) -> i64 {
        self.x * other.y - self.y * other.x
    }

    pub fn max_abs(self) -> i64 {
        self.x.abs().max(self.y.abs())
    }

    fn neg(self) -> LatticeVec {
        LatticeVec::new(-self.x, -self.y)
    }

    fn sub(self, o: LatticeVec) -> LatticeVec {
        LatticeVec::new(self.x - o.x, self.y - o.y)
    }
}

/// A centrally symmetric hexagon tiling the plane under integer translations.
///
/// The basis `(t1, t2)` is unimodular; `b` is the free vertex. Edge vectors
/// are `a = t1 - b`, `b`, `c = t2 - b`, and the vertices walk
/// `0, a, a+b, a+b+c, b+c, c`. Shoelace area equals `det(t1, t2) = 1`
/// exactly through the identity `a x b + a x c + b x c = t1 x t2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexagonDomain {
    pub t1: LatticeVec,
    pub t2: LatticeVec,
    pub b: Vec2,
}

impl HexagonDomain {
    pub fn new(t1: LatticeVec, t2: LatticeVec, b: Vec2) -> Result<HexagonDomain> {
        if t1.det(t2) != 1 {
            return Err(Error::invalid(format!(
                "basis must have det +1, got det(({},{}),({},{})) = {}",
                t1.x,
                t1.y,
                t2.x,
                t2.y,
                t1.det(t2)
            )));
        }
        if !b.is_finite() {
            return Err(Error::invalid("vertex parameter must be finite"));
        }
        Ok(HexagonDomain { t1, t2, b })
    }

    /// Edge vectors `(a, b, c)`.
    pub fn edge_vectors(&self) -> (Vec2, Vec2, Vec2) {
        let a = self.t1.to_vec2() - self.b;
        let c = self.t2.to_vec2() - self.b;
        (a, self.b, c)
    }

    /// The six vertices in counterclockwise order (possibly with repeats when
    /// an edge degenerates).
    pub fn vertices(&self) -> [Vec2; 6] {
        let (a, b, c) = self.edge_vectors();
        [Vec2::ZERO, a, a + b, a + b + c, b + c, c]
    }

    /// The hexagon as a polygon, degenerate edges dropped.
    pub fn polygon(&self) -> Polygon {
        Polygon::new_unchecked(self.vertices().to_vec()).simplified(PARALLELOGRAM_EDGE_TOL)
    }

    /// Shoelace area of the (possibly degenerate) hexagon.
    pub fn area(&self) -> f64 {
        Polygon::new_unchecked(self.vertices().to_vec()).signed_area()
    }

    /// Translations under which the tiling glues opposite edges:
    /// `t1`, `t2`, and `t1 - t2`.
    pub fn gluing_translations(&self) -> [Vec2; 3] {
        [self.t1.to_vec2(), self.t2.to_vec2(), self.t1.sub(self.t2).to_vec2()]
    }

    /// Checks the convexity invariant: consecutive edge cross products all
    /// share one sign or vanish.
    pub fn is_convex(&self, tol: f64) -> bool {
        let verts = self.vertices();
        let edges: Vec<Vec2> = (0..6).map(|i| verts[(i + 1) % 6] - verts[i]).collect();
        let mut sign = 0.0f64;
        for i in 0..6 {
            let c = edges[i].cross(edges[(i + 1) % 6]);
            if c.abs() <= tol {
                continue;
            }
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
        true
    }
}

/// One optimized tiling domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingSolution {
    pub domain: HexagonDomain,
    /// Full anisotropic perimeter `2 f(b*)`.
    pub perimeter: f64,
    pub is_parallelogram: bool,
    /// Index of the basis in the enumeration order.
    pub basis_rank: usize,
}

/// Cutoff certificate: bases outside the enumeration bound cannot beat the
/// incumbent once `2 phi_min (bound + 1) > incumbent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffCertificate {
    pub phi_min: f64,
    /// Lower bound `2 phi_min (bound + 1)` on every out-of-bound perimeter.
    pub outside_lower_bound: f64,
    pub cutoff_ok: bool,
}

/// Result of the enumeration search: best solution, full ranked list, ties,
/// and the cutoff certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingSearch {
    pub best: TilingSolution,
    pub ranked: Vec<TilingSolution>,
    /// Basis ranks whose perimeter ties the optimum within `TIE_TOL`.
    pub ties: Vec<usize>,
    pub certificate: CutoffCertificate,
}

/// Enumerates unimodular bases with components in `[-bound, bound]`,
/// deduplicated by gluing class and sorted by max component magnitude.
///
/// Two bases generate the same hexagon family exactly when the unordered
/// axis triples `{±t1, ±t2, ±(t1-t2)}` coincide; this identification
/// contains the sign flip `(t1,t2) ~ (-t1,-t2)` and the det-fixed swap, and
/// the half-perimeter optimum is constant on each class for every symmetric
/// cost (substituting `b -> t - b` maps the objectives onto each other).
pub fn enumerate_bases(bound: i64) -> Result<Vec<(LatticeVec, LatticeVec)>> {
    if bound < 1 {
        return Err(Error::invalid("enumeration bound must be >= 1"));
    }
    let mut by_class: HashMap<[(i64, i64); 3], (LatticeVec, LatticeVec)> = HashMap::new();
    let range = -bound..=bound;
    for x1 in range.clone() {
        for y1 in range.clone() {
            for x2 in range.clone() {
                for y2 in range.clone() {
                    let t1 = LatticeVec::new(x1, y1);
                    let t2 = LatticeVec::new(x2, y2);
                    if t1.det(t2) != 1 {
                        continue;
                    }
                    let key = gluing_class_key(t1, t2);
                    let entry = by_class.entry(key).or_insert((t1, t2));
                    if prefer_representative(t1, t2, entry.0, entry.1) {
                        *entry = (t1, t2);
                    }
                }
            }
        }
    }
    let mut bases: Vec<(LatticeVec, LatticeVec)> = by_class.into_values().collect();
    bases.sort_by_key(|&(t1, t2)| basis_sort_key(t1, t2));
    Ok(bases)
}

/// Class representatives have the smallest max component; among those the
/// lexicographically greatest tuple wins, which picks the all-positive
/// member such as `((1,0),(0,1))` over its negation.
fn prefer_representative(t1: LatticeVec, t2: LatticeVec, c1: LatticeVec, c2: LatticeVec) -> bool {
    let m = t1.max_abs().max(t2.max_abs());
    let mc = c1.max_abs().max(c2.max_abs());
    m < mc || (m == mc && (t1.x, t1.y, t2.x, t2.y) > (c1.x, c1.y, c2.x, c2.y))
}

fn basis_sort_key(t1: LatticeVec, t2: LatticeVec) -> (i64, i64, i64, i64, i64) {
    (t1.max_abs().max(t2.max_abs()), -t1.x, -t1.y, -t2.x, -t2.y)
}

/// Canonical key of the unordered axis triple `{±t1, ±t2, ±(t1-t2)}`.
fn gluing_class_key(t1: LatticeVec, t2: LatticeVec) -> [(i64, i64); 3] {
    let mut axes = [normalize_axis(t1), normalize_axis(t2), normalize_axis(t1.sub(t2))];
    axes.sort_unstable();
    axes
}

fn normalize_axis(v: LatticeVec) -> (i64, i64) {
    let v = if v.x < 0 || (v.x == 0 && v.y < 0) { v.neg() } else { v };
    (v.x, v.y)
}

/// Half-perimeter objective of the hexagon family over basis `(t1, t2)`.
pub fn half_perimeter(phi: &NormSpec, t1: LatticeVec, t2: LatticeVec, b: Vec2) -> f64 {
    phi.segment_cost(t1.to_vec2() - b) + phi.segment_cost(b) + phi.segment_cost(t2.to_vec2() - b)
}

/// Minimizes the hexagon objective over the free vertex for one basis.
///
/// Accepts any basis with `|det| = 1`; bases with det `-1` are normalized by
/// swapping `t1` and `t2`, which leaves the objective unchanged.
pub fn optimal_hexagon(phi: &NormSpec, t1: LatticeVec, t2: LatticeVec) -> Result<TilingSolution> {
    let (t1, t2) = match t1.det(t2) {
        1 => (t1, t2),
        -1 => (t2, t1),
        d => {
            return Err(Error::invalid(format!(
                "basis must be unimodular, got det = {d}"
            )))
        }
    };
    let v1 = t1.to_vec2();
    let v2 = t2.to_vec2();
    let f = |b: Vec2| half_perimeter(phi, t1, t2, b);

    let mut starts = vec![
        (v1 + v2).scale(1.0 / 3.0),
        v1.scale(0.5),
        v2.scale(0.5),
        (v1 + v2).scale(0.5),
    ];
    // Deterministic fifth start off the symmetric axes.
    starts.push((v1 + v2).scale(0.371) + (v1 - v2).scale(0.113));

    let scale = v1.norm() + v2.norm();
    let mut best_b = starts[0];
    let mut best_f = f(best_b);
    for &s in &starts {
        let (b, fb) = descend(&f, s, scale);
        if fb < best_f - 0.0 || (fb < best_f) {
            best_f = fb;
            best_b = b;
        }
    }

    let domain = HexagonDomain::new(t1, t2, best_b)?;
    let (ea, eb, ec) = domain.edge_vectors();
    let is_parallelogram = ea.norm() < PARALLELOGRAM_EDGE_TOL
        || eb.norm() < PARALLELOGRAM_EDGE_TOL
        || ec.norm() < PARALLELOGRAM_EDGE_TOL;
    Ok(TilingSolution { domain, perimeter: 2.0 * best_f, is_parallelogram, basis_rank: 0 })
}

/// Coordinate descent with golden-section line searches, then a compass
/// polish with shrinking steps. The objective is convex; each 1-D slice is
/// unimodal, and the compass stage recovers from corner stalls of the
/// coordinate stage on crystalline costs.
fn descend(f: &dyn Fn(Vec2) -> f64, start: Vec2, scale: f64) -> (Vec2, f64) {
    let mut b = start;
    let mut fb = f(b);
    let span = scale + 1.0;
    for _ in 0..60 {
        let bx = golden_min(&|t| f(Vec2::new(t, b.y)), b.x - span, b.x + span);
        b = Vec2::new(bx, b.y);
        let by = golden_min(&|t| f(Vec2::new(b.x, t)), b.y - span, b.y + span);
        b = Vec2::new(b.x, by);
        let fnew = f(b);
        if fb - fnew < DESCENT_TOL * 0.01 {
            fb = fnew;
            break;
        }
        fb = fnew;
    }

    // Compass polish over 16 directions.
    let dirs: Vec<Vec2> = (0..16)
        .map(|k| Vec2::from_angle(2.0 * std::f64::consts::PI * k as f64 / 16.0))
        .collect();
    let mut step = 0.1 * span;
    while step > 1e-12 {
        let mut improved = false;
        for &d in &dirs {
            let cand = b + d.scale(step);
            let fc = f(cand);
            if fc < fb {
                b = cand;
                fb = fc;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (b, fb)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 * (1.0 + a.abs().max(b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimum of [`optimal_hexagon`] over [`enumerate_bases`], with the ranked
/// list, the tie set, and the enumeration cutoff certificate.
pub fn best_fundamental_polygon(phi: &NormSpec, bound: i64) -> Result<TilingSearch> {
    let bases = enumerate_bases(bound)?;
    let mut solutions: Vec<TilingSolution> = bases
        .par_iter()
        .enumerate()
        .map(|(rank, &(t1, t2))| {
            let mut sol = optimal_hexagon(phi, t1, t2)?;
            sol.basis_rank = rank;
            Ok(sol)
        })
        .collect::<Result<Vec<_>>>()?;
    solutions.sort_by(|a, b| {
        a.perimeter
            .partial_cmp(&b.perimeter)
            .unwrap()
            .then(a.basis_rank.cmp(&b.basis_rank))
    });
    let best = solutions[0].clone();
    let ties: Vec<usize> = solutions
        .iter()
        .filter(|s| s.perimeter <= best.perimeter + TIE_TOL)
        .map(|s| s.basis_rank)
        .collect();
    let phi_min = phi.min_unit_cost(PHI_MIN_GRID);
    let outside_lower_bound = 2.0 * phi_min * (bound + 1) as f64;
    let certificate = CutoffCertificate {
        phi_min,
        outside_lower_bound,
        cutoff_ok: outside_lower_bound > best.perimeter,
    };
    Ok(TilingSearch { best, ranked: solutions, ties, certificate })
}

/// Outcome of evaluating the two cross-instability inequalities at one angle.
///
/// `margin` is `rhs - lhs`; the inequality holds when the margin is at least
/// `-margin_tol`. For strictly convex differentiable costs the pair
/// `(true, true)` cannot occur: summing both inequalities contradicts
/// `2 [phi(n1) + phi(n2)] > phi(n2 - n1) + phi(n1 + n2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossInstability {
    pub uno_holds: bool,
    pub due_holds: bool,
    pub uno_margin: f64,
    pub due_margin: f64,
}

/// Evaluates the two local-perturbation inequalities that a minimal cross
/// (degree-4 junction) would have to satisfy.
pub fn cross_instability_test(
    phi: &NormSpec,
    alpha: f64,
    margin_tol: f64,
) -> Result<CrossInstability> {
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid(format!("alpha must lie in (0, pi/2), got {alpha}")));
    }
    let two_a = 2.0 * alpha;
    let nu1 = Vec2::new(0.0, 1.0);
    let nu2 = Vec2::new(-two_a.sin(), two_a.cos());
    let tau1 = Vec2::new(1.0, 0.0);
    let tau2 = Vec2::new(two_a.cos(), two_a.sin());

    let phi1 = phi.eval(nu1)?;
    let phi2 = phi.eval(nu2)?;
    let grad_term = phi.gradient(nu1).dot(tau1) + phi.gradient(nu2).dot(tau2);

    let uno_lhs = 2.0 * alpha.cos().powi(2) * (phi1 + phi2);
    let uno_rhs = phi.eval(nu1 + nu2)? + two_a.sin() * grad_term;
    let due_lhs = 2.0 * alpha.sin().powi(2) * (phi1 + phi2);
    let due_rhs = phi.eval(nu2 - nu1)? - two_a.sin() * grad_term;

    let uno_margin = uno_rhs - uno_lhs;
    let due_margin = due_rhs - due_lhs;
    Ok(CrossInstability {
        uno_holds: uno_margin >= -margin_tol,
        due_holds: due_margin >= -margin_tol,
        uno_margin,
        due_margin,
    })
}
