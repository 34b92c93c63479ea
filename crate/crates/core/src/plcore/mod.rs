//! Exact piecewise-linear maps with rational breakpoints and the group
//! operations on them.

mod function;
mod homeo;
mod interval;

pub use function::{Breakpoint, PlFunction};
pub use homeo::{PlHomeo, DEFAULT_BREAKPOINT_BUDGET};
pub use interval::Interval;
pub(crate) use function::merged_xs as merged_breakpoints;

use crate::error::Result;
use crate::rational::Rational;

/// Anything that can be evaluated exactly at rational points of an interval.
pub trait Oracle: Sync {
    fn domain(&self) -> Interval;
    fn eval(&self, x: &Rational) -> Result<Rational>;
}

/// An exactly evaluable increasing bijection with an exactly evaluable
/// inverse.
pub trait Homeomorphism: Oracle {
    fn codomain(&self) -> Interval;
    fn eval_inverse(&self, y: &Rational) -> Result<Rational>;

    /// Smallest fixed point `>= x` when it can be computed exactly, i.e. the
    /// supremum of the orbit of `x`.
    fn orbital_sup(&self, _x: &Rational) -> Option<Rational> {
        None
    }
}

impl Oracle for PlFunction {
    fn domain(&self) -> Interval {
        PlFunction::domain(self)
    }

    fn eval(&self, x: &Rational) -> Result<Rational> {
        PlFunction::eval(self, x)
    }
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn domain(&self) -> Interval {
        (**self).domain()
    }

    fn eval(&self, x: &Rational) -> Result<Rational> {
        (**self).eval(x)
    }
}

impl<T: Homeomorphism + ?Sized> Homeomorphism for &T {
    fn codomain(&self) -> Interval {
        (**self).codomain()
    }

    fn eval_inverse(&self, y: &Rational) -> Result<Rational> {
        (**self).eval_inverse(y)
    }

    fn orbital_sup(&self, x: &Rational) -> Option<Rational> {
        (**self).orbital_sup(x)
    }
}
