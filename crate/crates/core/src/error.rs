use thiserror::Error;

use crate::rational::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad grouping of errors, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Parse,
    Input,
    Budget,
    Construction,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed rational or document: {0}")]
    Parse(String),

    #[error("a piecewise-linear map needs at least two breakpoints, got {0}")]
    TooFewPoints(usize),

    #[error("breakpoint coordinates are not strictly increasing at index {index}")]
    NonMonotone { index: usize },

    #[error("degenerate or inverted interval [{}, {}]", .bounds.0, .bounds.1)]
    DegenerateInterval { bounds: Box<(Rational, Rational)> },

    #[error("{x} lies outside [{}, {}]", .bounds.0, .bounds.1)]
    OutOfDomain {
        x: Rational,
        bounds: Box<(Rational, Rational)>,
    },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("breakpoint budget of {budget} exceeded")]
    BreakpointBudgetExceeded { budget: usize },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("{x} is not a fixed point of the map")]
    NotAFixedPoint { x: Rational },

    #[error("blow-up sites overlap, are unordered, or leave the domain: {0}")]
    OverlappingSites(String),

    #[error("the maps share the fixed point {x}")]
    SharedFixedPoint { x: Rational },

    #[error("evaluation needed more than {cap} atom applications")]
    IterationCapExceeded { cap: u64 },

    #[error("orbital parities differ")]
    ParityMismatch,

    #[error("map has an interior fixed point at {x}")]
    HasInteriorFixedPoint { x: Rational },

    #[error("orbital signatures differ: {0}")]
    OrbitalMismatch(String),

    #[error("push stalled at {stall} after {steps} moves (fixed by generators {fixed_by:?})")]
    BudgetExhausted {
        stall: Rational,
        reached: Box<Rational>,
        fixed_by: Vec<usize>,
        steps: usize,
    },

    #[error("could not push the base point high enough: {0}")]
    PushFailed(String),

    #[error("step {step} found no escape within {cap} iterations")]
    NoEscape { step: u8, cap: u64 },
}

impl Error {
    pub(crate) fn out_of_domain(x: &Rational, lo: &Rational, hi: &Rational) -> Error {
        Error::OutOfDomain {
            x: x.clone(),
            bounds: Box::new((lo.clone(), hi.clone())),
        }
    }

    pub(crate) fn degenerate(lo: Rational, hi: Rational) -> Error {
        Error::DegenerateInterval {
            bounds: Box::new((lo, hi)),
        }
    }

    pub fn family(&self) -> ErrorFamily {
        use Error::*;
        match self {
            Parse(_) => ErrorFamily::Parse,
            TooFewPoints(_)
            | NonMonotone { .. }
            | DegenerateInterval { .. }
            | OutOfDomain { .. }
            | DomainMismatch(_)
            | BadParameter(_) => ErrorFamily::Input,
            BreakpointBudgetExceeded { .. }
            | IterationCapExceeded { .. }
            | BudgetExhausted { .. }
            | NoEscape { .. } => ErrorFamily::Budget,
            NotAFixedPoint { .. }
            | OverlappingSites(_)
            | SharedFixedPoint { .. }
            | ParityMismatch
            | HasInteriorFixedPoint { .. }
            | OrbitalMismatch(_)
            | PushFailed(_) => ErrorFamily::Construction,
        }
    }
}
