use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::function::{canonicalize, interpolate, Breakpoint, PlFunction};
use super::{Homeomorphism, Interval, Oracle};
use crate::error::{Error, Result};
use crate::rational::{self, Fraction, Rational};

/// Breakpoint cap enforced by [`PlHomeo::power`].
pub const DEFAULT_BREAKPOINT_BUDGET: usize = 1_000_000;

/// A strictly increasing piecewise-linear bijection between two closed
/// intervals with rational breakpoints.
///
/// Equality is structural on the canonical breakpoint list, which makes it
/// equality of maps.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlHomeo {
    inner: PlFunction,
}

impl PlHomeo {
    /// Linear interpolation of the given pairs. Both coordinates must be
    /// strictly increasing.
    pub fn from_points(points: Vec<Breakpoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if let Some(i) = points
            .windows(2)
            .position(|w| w[0].0 >= w[1].0 || w[0].1 >= w[1].1)
        {
            return Err(Error::NonMonotone { index: i + 1 });
        }
        Ok(Self {
            inner: PlFunction::from_canonical(canonicalize(points)),
        })
    }

    /// Convenience constructor from small integer fractions `(xn, xd, yn, yd)`.
    pub fn from_fractions(points: &[(Fraction, Fraction)]) -> Result<Self> {
        Self::from_points(
            points
                .iter()
                .map(|&((a, b), (c, d))| (rational::rat(a, b), rational::rat(c, d)))
                .collect(),
        )
    }

    pub fn from_function(f: PlFunction) -> Result<Self> {
        if !f.is_strictly_increasing() {
            let i = f
                .points()
                .windows(2)
                .position(|w| w[0].1 >= w[1].1)
                .unwrap_or(0);
            return Err(Error::NonMonotone { index: i + 1 });
        }
        Ok(Self { inner: f })
    }

    pub(crate) fn from_canonical(points: Vec<Breakpoint>) -> Self {
        Self {
            inner: PlFunction::from_canonical(points),
        }
    }

    pub fn identity(interval: &Interval) -> Self {
        Self::from_canonical(vec![
            (interval.lo().clone(), interval.lo().clone()),
            (interval.hi().clone(), interval.hi().clone()),
        ])
    }

    /// The increasing affine bijection `from -> to`.
    pub fn affine(from: &Interval, to: &Interval) -> Self {
        Self::from_canonical(vec![
            (from.lo().clone(), to.lo().clone()),
            (from.hi().clone(), to.hi().clone()),
        ])
    }

    pub fn as_function(&self) -> &PlFunction {
        &self.inner
    }

    pub fn points(&self) -> &[Breakpoint] {
        self.inner.points()
    }

    pub fn breakpoint_count(&self) -> usize {
        self.inner.points().len()
    }

    pub fn domain(&self) -> Interval {
        self.inner.domain()
    }

    pub fn codomain(&self) -> Interval {
        Interval::new(self.inner.first().1.clone(), self.inner.last().1.clone())
            .expect("values are strictly increasing")
    }

    pub fn is_self_map(&self) -> bool {
        self.inner.first().0 == self.inner.first().1 && self.inner.last().0 == self.inner.last().1
    }

    pub fn is_identity(&self) -> bool {
        self.points().len() == 2 && self.is_self_map()
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        self.inner.eval(x)
    }

    /// `f^{-1}(y)` without building the inverse map.
    pub fn eval_inverse(&self, y: &Rational) -> Result<Rational> {
        let pts = self.points();
        let (lo, hi) = (&pts[0].1, &pts[pts.len() - 1].1);
        if y < lo || y > hi {
            return Err(Error::out_of_domain(y, lo, hi));
        }
        let idx = pts.partition_point(|p| &p.1 <= y);
        let i = idx.saturating_sub(1).min(pts.len() - 2);
        let swap = |p: &Breakpoint| (p.1.clone(), p.0.clone());
        Ok(interpolate(&swap(&pts[i]), &swap(&pts[i + 1]), y))
    }

    pub fn inverse(&self) -> PlHomeo {
        Self::from_canonical(
            self.points()
                .iter()
                .map(|(x, y)| (y.clone(), x.clone()))
                .collect(),
        )
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &PlHomeo) -> Result<PlHomeo> {
        if inner.codomain() != self.domain() {
            return Err(Error::DomainMismatch(format!(
                "cannot compose: inner codomain {} differs from outer domain {}",
                inner.codomain(),
                self.domain()
            )));
        }
        // Breakpoints of the composite sit at inner's breakpoints and at the
        // inner-preimages of outer's breakpoints; merge them in image order.
        let (ip, op) = (inner.points(), self.points());
        let mut pts: Vec<Breakpoint> = Vec::with_capacity(ip.len() + op.len());
        let (mut i, mut j) = (0, 0);
        while i < ip.len() || j < op.len() {
            let (x, mid) = match (ip.get(i), op.get(j)) {
                (Some(p), Some(q)) if p.1 == q.0 => {
                    i += 1;
                    j += 1;
                    (p.0.clone(), p.1.clone())
                }
                (Some(p), Some(q)) if p.1 < q.0 => {
                    i += 1;
                    (p.0.clone(), p.1.clone())
                }
                (_, Some(q)) => {
                    j += 1;
                    (inner.eval_inverse(&q.0)?, q.0.clone())
                }
                (Some(p), None) => {
                    i += 1;
                    (p.0.clone(), p.1.clone())
                }
                (None, None) => unreachable!(),
            };
            let y = self.eval(&mid)?;
            pts.push((x, y));
        }
        Ok(Self::from_canonical(canonicalize(pts)))
    }

    pub fn power(&self, n: i64) -> Result<PlHomeo> {
        self.power_with_budget(n, DEFAULT_BREAKPOINT_BUDGET)
    }

    /// `n`-fold composite (inverse powers for `n < 0`), failing once any
    /// intermediate map exceeds `budget` breakpoints.
    pub fn power_with_budget(&self, n: i64, budget: usize) -> Result<PlHomeo> {
        if !self.is_self_map() {
            return Err(Error::DomainMismatch(format!(
                "power needs a self-map, got {} -> {}",
                self.domain(),
                self.codomain()
            )));
        }
        let check = |h: PlHomeo| {
            if h.breakpoint_count() > budget {
                Err(Error::BreakpointBudgetExceeded { budget })
            } else {
                Ok(h)
            }
        };
        let mut base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = PlHomeo::identity(&self.domain());
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = check(acc.compose(&base)?)?;
            }
            e >>= 1;
            if e > 0 {
                base = check(base.compose(&base)?)?;
            }
        }
        Ok(acc)
    }

    /// `A ∘ self ∘ A^{-1}` for the increasing affine `A: domain -> target`.
    pub fn affine_conjugate(&self, target: &Interval) -> Result<PlHomeo> {
        if self.domain() != self.codomain() {
            return Err(Error::DomainMismatch(format!(
                "affine conjugation needs a self-map, got {} -> {}",
                self.domain(),
                self.codomain()
            )));
        }
        let (s, t) = self.domain().affine_to(target);
        Ok(Self::from_canonical(
            self.points()
                .iter()
                .map(|(x, y)| (&s * x + &t, &s * y + &t))
                .collect(),
        ))
    }

    /// Restriction to `[a, b]`, as a bijection onto `[f(a), f(b)]`.
    pub fn restrict(&self, a: &Rational, b: &Rational) -> Result<PlHomeo> {
        Ok(Self {
            inner: self.inner.restrict(a, b)?,
        })
    }

    /// Glue maps on abutting intervals into one map. Each piece's domain
    /// must start where the previous one ended, likewise for codomains.
    pub fn paste(pieces: &[PlHomeo]) -> Result<PlHomeo> {
        let mut pts: Vec<Breakpoint> = Vec::new();
        for piece in pieces {
            match pts.last() {
                None => pts.extend(piece.points().iter().cloned()),
                Some(last) => {
                    if last != &piece.points()[0] {
                        return Err(Error::DomainMismatch(format!(
                            "pieces do not abut at {}",
                            rational::format(&last.0)
                        )));
                    }
                    pts.extend(piece.points()[1..].iter().cloned());
                }
            }
        }
        Self::from_points(pts)
    }

    pub fn max_slope(&self) -> Rational {
        self.inner.max_slope()
    }

    /// Lipschitz constant of the inverse.
    pub fn min_slope(&self) -> Rational {
        self.inner.slopes().min().expect("at least one segment")
    }

    pub fn fixes_endpoints(&self) -> bool {
        self.is_self_map()
    }
}

impl AsRef<PlFunction> for PlHomeo {
    fn as_ref(&self) -> &PlFunction {
        &self.inner
    }
}

impl fmt::Display for PlHomeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .points()
            .iter()
            .map(|(x, y)| format!("({}, {})", rational::format(x), rational::format(y)))
            .collect();
        write!(f, "PL[{}]", parts.join(", "))
    }
}

impl Oracle for PlHomeo {
    fn domain(&self) -> Interval {
        PlHomeo::domain(self)
    }

    fn eval(&self, x: &Rational) -> Result<Rational> {
        PlHomeo::eval(self, x)
    }
}

impl Homeomorphism for PlHomeo {
    fn codomain(&self) -> Interval {
        PlHomeo::codomain(self)
    }

    fn eval_inverse(&self, y: &Rational) -> Result<Rational> {
        PlHomeo::eval_inverse(self, y)
    }

    fn orbital_sup(&self, x: &Rational) -> Option<Rational> {
        if !self.is_self_map() {
            return None;
        }
        let fixed = crate::dynamics::fixed_set(self).ok()?;
        fixed.next_at_or_above(x)
    }
}

#[derive(Serialize, Deserialize)]
struct RawPlHomeo {
    domain: Interval,
    codomain: Interval,
    points: Vec<[String; 2]>,
}

impl Serialize for PlHomeo {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawPlHomeo {
            domain: self.domain(),
            codomain: self.codomain(),
            points: self
                .points()
                .iter()
                .map(|(x, y)| [rational::format(x), rational::format(y)])
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlHomeo {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawPlHomeo::deserialize(d)?;
        let points = raw
            .points
            .iter()
            .map(|[x, y]| Ok((rational::parse(x)?, rational::parse(y)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let h = PlHomeo::from_points(points).map_err(D::Error::custom)?;
        if h.domain() != raw.domain || h.codomain() != raw.codomain {
            return Err(D::Error::custom(format!(
                "declared domain {} / codomain {} disagree with the breakpoints ({} -> {})",
                raw.domain,
                raw.codomain,
                h.domain(),
                h.codomain()
            )));
        }
        Ok(h)
    }
}
