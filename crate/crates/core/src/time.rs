//! Dyadic time points `numerator · 2^(-level)` on a two-sided axis.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A point on the dyadic time grid, kept in canonical form
/// (odd numerator, or level zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicTime {
    numerator: i64,
    level: u32,
}

impl DyadicTime {
    pub const ZERO: DyadicTime = DyadicTime { numerator: 0, level: 0 };

    pub fn new(numerator: i64, level: u32) -> Self {
        let mut t = DyadicTime { numerator, level };
        t.canonicalize();
        t
    }

    pub fn from_int(n: i64) -> Self {
        DyadicTime { numerator: n, level: 0 }
    }

    /// The grid point `index · 2^(-level)`.
    pub fn from_grid(index: i64, level: u32) -> Self {
        Self::new(index, level)
    }

    fn canonicalize(&mut self) {
        if self.numerator == 0 {
            self.level = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().min(self.level);
        self.numerator >>= tz;
        self.level -= tz;
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Exact as long as the numerator fits in 53 bits.
    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 * (-(self.level as f64)).exp2()
    }

    /// Index of this time on the grid of spacing `2^(-level)`, if it lies on it.
    pub fn grid_index(&self, level: u32) -> Option<i64> {
        if self.level > level {
            return None;
        }
        self.numerator.checked_mul(1i64 << (level - self.level))
    }

    pub fn grid_index_checked(&self, level: u32) -> Result<i64> {
        self.grid_index(level).ok_or_else(|| {
            Error::Alignment(format!("time {self} is not on the level-{level} grid"))
        })
    }

    pub fn is_aligned(&self, level: u32) -> bool {
        self.level <= level
    }

    pub fn floor_int(&self) -> i64 {
        self.numerator >> self.level
    }

    pub fn ceil_int(&self) -> i64 {
        -((-self.numerator) >> self.level)
    }

    fn common(a: DyadicTime, b: DyadicTime) -> (i128, i128, u32) {
        let level = a.level.max(b.level);
        let an = (a.numerator as i128) << (level - a.level);
        let bn = (b.numerator as i128) << (level - b.level);
        (an, bn, level)
    }

    pub fn checked_add(self, other: DyadicTime) -> Option<DyadicTime> {
        let (a, b, level) = Self::common(self, other);
        i64::try_from(a + b).ok().map(|n| DyadicTime::new(n, level))
    }

    pub fn checked_sub(self, other: DyadicTime) -> Option<DyadicTime> {
        let (a, b, level) = Self::common(self, other);
        i64::try_from(a - b).ok().map(|n| DyadicTime::new(n, level))
    }

    /// `2^k` for `k ≥ 0`.
    pub fn pow2(k: u32) -> DyadicTime {
        DyadicTime::from_int(1i64 << k)
    }

    pub fn abs(self) -> DyadicTime {
        DyadicTime { numerator: self.numerator.abs(), level: self.level }
    }
}

impl std::ops::Add for DyadicTime {
    type Output = DyadicTime;
    fn add(self, rhs: DyadicTime) -> DyadicTime {
        self.checked_add(rhs).expect("dyadic time overflow")
    }
}

impl std::ops::Sub for DyadicTime {
    type Output = DyadicTime;
    fn sub(self, rhs: DyadicTime) -> DyadicTime {
        self.checked_sub(rhs).expect("dyadic time overflow")
    }
}

impl std::ops::Neg for DyadicTime {
    type Output = DyadicTime;
    fn neg(self) -> DyadicTime {
        DyadicTime { numerator: -self.numerator, level: self.level }
    }
}

impl Ord for DyadicTime {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Self::common(*self, *other);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.level)
        }
    }
}

impl From<i64> for DyadicTime {
    fn from(n: i64) -> Self {
        DyadicTime::from_int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let t = DyadicTime::new(12, 3);
        assert_eq!((t.numerator(), t.level()), (3, 1));
        assert_eq!(DyadicTime::new(0, 7), DyadicTime::ZERO);
        assert_eq!(DyadicTime::new(-8, 2), DyadicTime::from_int(-2));
    }

    #[test]
    fn arithmetic_and_order() {
        let a = DyadicTime::new(3, 2); // 0.75
        let b = DyadicTime::new(-1, 1); // -0.5
        assert_eq!((a + b).to_f64(), 0.25);
        assert_eq!((a - b).to_f64(), 1.25);
        assert!(b < a);
        assert!(DyadicTime::from_int(-3) < DyadicTime::new(-5, 1));
    }

    #[test]
    fn grid_alignment() {
        let t = DyadicTime::new(5, 3);
        assert_eq!(t.grid_index(3), Some(5));
        assert_eq!(t.grid_index(5), Some(20));
        assert_eq!(t.grid_index(2), None);
        assert!(t.grid_index_checked(1).is_err());
    }

    #[test]
    fn floor_and_ceil() {
        let t = DyadicTime::new(-5, 1); // -2.5
        assert_eq!(t.floor_int(), -3);
        assert_eq!(t.ceil_int(), -2);
        assert_eq!(DyadicTime::from_int(4).ceil_int(), 4);
    }
}
