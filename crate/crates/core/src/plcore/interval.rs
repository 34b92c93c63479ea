use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::degenerate(lo, hi))
        }
    }

    /// The unit interval `[0, 1]`.
    pub fn unit() -> Self {
        Self {
            lo: rational::int(0),
            hi: rational::int(1),
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn midpoint(&self) -> Rational {
        rational::midpoint(&self.lo, &self.hi)
    }

    pub(crate) fn check_contains(&self, x: &Rational) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::out_of_domain(x, &self.lo, &self.hi))
        }
    }

    /// The increasing affine bijection `self -> target`, as a closure-free
    /// pair `(scale, offset)` with `x -> scale * x + offset`.
    pub(crate) fn affine_to(&self, target: &Interval) -> (Rational, Rational) {
        let scale = target.len() / self.len();
        let offset = &target.lo - &scale * &self.lo;
        (scale, offset)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", rational::format(&self.lo), rational::format(&self.hi))
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [rational::format(&self.lo), rational::format(&self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let lo = rational::parse(&lo).map_err(serde::de::Error::custom)?;
        let hi = rational::parse(&hi).map_err(serde::de::Error::custom)?;
        Interval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}
