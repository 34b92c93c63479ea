//! Exact computations in the group of increasing homeomorphisms of an
//! interval whose derivative-level structure is absolutely continuous.
//!
//! Everything is carried by piecewise-linear maps with rational breakpoints
//! ([`plcore`]) and by lazily evaluated expressions over them
//! ([`orbitmaps`]), so identities such as `h ∘ f = g ∘ h` are checked as
//! exact equalities.

pub mod acmetric;
pub mod constructions;
pub mod densitysearch;
pub mod dynamics;
pub mod error;
pub mod orbitmaps;
pub mod plcore;
pub mod random;
pub mod rational;

pub use error::{Error, ErrorFamily, Result};
pub use plcore::{Homeomorphism, Interval, Oracle, PlFunction, PlHomeo};
pub use rational::Rational;
