//! Closed intervals with outward rounding.
//!
//! Every operation widens its result by one ulp on each side, so an
//! interval computed from enclosures of the inputs encloses the exact
//! result. Adding or multiplying by an exact zero is exact and does not
//! widen. Only the operations the bound pipeline needs are provided.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// `[value - radius, value + radius]`, rounded outward.
    pub fn with_radius(value: f64, radius: f64) -> Self {
        assert!(radius >= 0.0, "negative radius {radius}");
        Self {
            lo: (value - radius).next_down(),
            hi: (value + radius).next_up(),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Half-width, rounded up so that `mid ± radius` still covers the interval.
    pub fn radius(&self) -> f64 {
        let m = self.mid();
        (self.hi - m).max(m - self.lo).next_up()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    fn outward(lo: f64, hi: f64) -> Self {
        Self {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn powi(self, n: u32) -> Self {
        (0..n).fold(Interval::point(1.0), |acc, _| acc * self)
    }

    pub fn scale(self, k: f64) -> Self {
        self * Interval::point(k)
    }

    /// Hull of two intervals.
    pub fn hull(self, other: Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Self) -> Self {
        if rhs == Interval::point(0.0) {
            return self;
        }
        if self == Interval::point(0.0) {
            return rhs;
        }
        Interval::outward(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Self) -> Self {
        if rhs == Interval::point(0.0) {
            return self;
        }
        Interval::outward(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Self) -> Self {
        // A point zero annihilates exactly; keep it from widening.
        if self == Interval::point(0.0) || rhs == Interval::point(0.0) {
            return Interval::point(0.0);
        }
        let c = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::outward(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Self) -> Self {
        assert!(
            rhs.lo > 0.0 || rhs.hi < 0.0,
            "division by an interval containing zero: {rhs}"
        );
        self * Interval::outward(1.0 / rhs.hi, 1.0 / rhs.lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arithmetic_encloses_point_values() {
        let a = Interval::with_radius(1.5, 0.1);
        let b = Interval::with_radius(0.25, 0.05);
        assert!((a + b).contains(1.75));
        assert!((a - b).contains(1.25));
        assert!((a * b).contains(0.375));
        assert!((a / b).contains(6.0));
        assert!((b - a).hi() < 0.0);
    }

    #[test]
    #[should_panic]
    fn division_through_zero_panics() {
        let _ = Interval::point(1.0) / Interval::new(-1.0, 1.0);
    }

    proptest! {
        #[test]
        fn enclosure_is_preserved(
            x in 0.1f64..10.0, y in 0.1f64..10.0,
            rx in 0.0f64..0.05, ry in 0.0f64..0.05,
            tx in -1.0f64..=1.0, ty in -1.0f64..=1.0,
        ) {
            let a = Interval::with_radius(x, rx);
            let b = Interval::with_radius(y, ry);
            let (px, py) = (x + tx * rx, y + ty * ry);
            prop_assert!((a + b).contains(px + py));
            prop_assert!((a - b).contains(px - py));
            prop_assert!((a * b).contains(px * py));
            prop_assert!((a / b).contains(px / py));
            prop_assert!(a.powi(3).contains(px * px * px));
            let r = (a * b).radius();
            let m = (a * b).mid();
            prop_assert!(m - r <= (a * b).lo() && (a * b).hi() <= m + r);
        }
    }
}
