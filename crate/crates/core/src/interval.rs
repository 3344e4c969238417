//! Value-plus-radius intervals for certified energy accounting.
//!
//! Every fractional-perimeter quantity is reported as an [`Interval`]:
//! the midpoint quadrature value together with a rigorous radius bounding
//! discretization and truncation error. Comparisons in tests go through
//! the brackets, not the bare values.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub value: f64,
    pub radius: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { value: 0.0, radius: 0.0 };

    pub fn new(value: f64, radius: f64) -> Interval {
        debug_assert!(radius >= 0.0);
        Interval { value, radius }
    }

    /// An exact value (radius zero).
    pub fn exact(value: f64) -> Interval {
        Interval { value, radius: 0.0 }
    }

    /// The interval `[lo, hi]` written as midpoint and radius.
    pub fn from_bounds(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi);
        Interval { value: 0.5 * (lo + hi), radius: 0.5 * (hi - lo) }
    }

    pub fn lo(self) -> f64 {
        self.value - self.radius
    }

    pub fn hi(self) -> f64 {
        self.value + self.radius
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo() <= x && x <= self.hi()
    }

    pub fn overlaps(self, other: Interval) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }

    /// Widens the radius, keeping the value.
    pub fn pad(self, extra: f64) -> Interval {
        Interval { value: self.value, radius: self.radius + extra }
    }

    pub fn scale(self, t: f64) -> Interval {
        Interval { value: self.value * t, radius: self.radius * t.abs() }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval { value: self.value + rhs.value, radius: self.radius + rhs.radius }
    }
}

impl AddAssign for Interval {
    fn add_assign(&mut self, rhs: Interval) {
        self.value += rhs.value;
        self.radius += rhs.radius;
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval { value: self.value - rhs.value, radius: self.radius + rhs.radius }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { value: -self.value, radius: self.radius }
    }
}

impl std::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + b)
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ± {}", self.value, self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_round_trip() {
        let iv = Interval::from_bounds(1.0, 3.0);
        assert_eq!(iv.value, 2.0);
        assert_eq!(iv.radius, 1.0);
        assert!(iv.contains(1.0) && iv.contains(3.0) && !iv.contains(3.0001));
    }

    #[test]
    fn arithmetic_widens() {
        let a = Interval::new(1.0, 0.1);
        let b = Interval::new(2.0, 0.2);
        let s = a + b;
        assert_eq!(s.value, 3.0);
        assert!((s.radius - 0.3).abs() < 1e-15);
        let d = a - b;
        assert_eq!(d.value, -1.0);
        assert!((d.radius - 0.3).abs() < 1e-15);
    }
}
