//! Numerical machinery for isoperimetric fundamental domains of the
//! integer-translation lattice acting on the plane.
//!
//! Two routes are implemented side by side:
//!
//! * an exact polygonal solver for local (anisotropic) perimeters, which
//!   searches centrally symmetric hexagons and parallelograms over
//!   unimodular lattice bases ([`tiling`]), backed by the norm/dual-norm/
//!   Wulff-shape toolkit in [`anisotropy`];
//! * a pixel-set evaluator for the fractional s-perimeter ([`fractional`]),
//!   its periodic lattice-summed variant on offset maps ([`torus`]), and a
//!   seeded stochastic local search over those maps ([`optimizer`]).
//!
//! Fractional energies are returned as certified intervals (value plus
//! rigorous radius); identities such as submodularity are checked against
//! the brackets, never against bare points.

pub mod anisotropy;
pub mod error;
pub mod fractional;
pub mod geometry;
pub mod interval;
pub mod optimizer;
pub mod svg;
pub mod tiling;
pub mod torus;

pub use error::{Error, Result};
pub use geometry::{Polygon, Vec2};
pub use interval::Interval;
