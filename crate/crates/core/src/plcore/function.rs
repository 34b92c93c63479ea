use super::Interval;
use crate::error::{Error, Result};
use crate::rational::Rational;

pub type Breakpoint = (Rational, Rational);

/// A continuous piecewise-linear function on a closed interval, stored as
/// its canonical breakpoint list: x strictly increasing, no three
/// consecutive breakpoints collinear.
///
/// Values may repeat (slopes may be zero), so this also carries
/// non-injective maps such as Cantor staircase approximants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlFunction {
    points: Vec<Breakpoint>,
}

fn collinear(a: &Breakpoint, b: &Breakpoint, c: &Breakpoint) -> bool {
    (&b.1 - &a.1) * (&c.0 - &b.0) == (&c.1 - &b.1) * (&b.0 - &a.0)
}

/// Drop interior breakpoints that sit on the line through their neighbours.
pub(crate) fn canonicalize(points: Vec<Breakpoint>) -> Vec<Breakpoint> {
    let mut out: Vec<Breakpoint> = Vec::with_capacity(points.len());
    for p in points {
        while out.len() >= 2 && collinear(&out[out.len() - 2], &out[out.len() - 1], &p) {
            out.pop();
        }
        out.push(p);
    }
    out
}

impl PlFunction {
    pub fn new(points: Vec<Breakpoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if let Some(i) = points.windows(2).position(|w| w[0].0 >= w[1].0) {
            return Err(Error::NonMonotone { index: i + 1 });
        }
        Ok(Self {
            points: canonicalize(points),
        })
    }

    /// Caller guarantees x strictly increasing and canonical form.
    pub(crate) fn from_canonical(points: Vec<Breakpoint>) -> Self {
        debug_assert!(points.len() >= 2);
        debug_assert!(points.windows(2).all(|w| w[0].0 < w[1].0));
        Self { points }
    }

    pub fn points(&self) -> &[Breakpoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Breakpoint> {
        self.points
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.first().0.clone(), self.last().0.clone())
            .expect("breakpoints are strictly increasing")
    }

    pub(crate) fn first(&self) -> &Breakpoint {
        &self.points[0]
    }

    pub(crate) fn last(&self) -> &Breakpoint {
        &self.points[self.points.len() - 1]
    }

    pub fn breakpoint_xs(&self) -> impl Iterator<Item = &Rational> + '_ {
        self.points.iter().map(|p| &p.0)
    }

    /// Index `i` of the segment `[x_i, x_{i+1}]` containing `x`; breakpoints
    /// belong to the segment on their right, except the last one.
    pub(crate) fn segment_of(&self, x: &Rational) -> usize {
        let idx = self.points.partition_point(|p| &p.0 <= x);
        idx.saturating_sub(1).min(self.points.len() - 2)
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        if x < &self.first().0 || x > &self.last().0 {
            return Err(Error::out_of_domain(x, &self.first().0, &self.last().0));
        }
        let i = self.segment_of(x);
        Ok(interpolate(&self.points[i], &self.points[i + 1], x))
    }

    pub fn slope(&self, segment: usize) -> Rational {
        let (a, b) = (&self.points[segment], &self.points[segment + 1]);
        (&b.1 - &a.1) / (&b.0 - &a.0)
    }

    pub fn slopes(&self) -> impl Iterator<Item = Rational> + '_ {
        (0..self.points.len() - 1).map(|i| self.slope(i))
    }

    pub fn max_slope(&self) -> Rational {
        self.slopes().max().expect("at least one segment")
    }

    /// Restriction to `[a, b]`, which must lie inside the domain.
    pub fn restrict(&self, a: &Rational, b: &Rational) -> Result<PlFunction> {
        let dom = self.domain();
        dom.check_contains(a)?;
        dom.check_contains(b)?;
        if a >= b {
            return Err(Error::degenerate(a.clone(), b.clone()));
        }
        let mut pts = vec![(a.clone(), self.eval(a)?)];
        pts.extend(
            self.points
                .iter()
                .filter(|p| &p.0 > a && &p.0 < b)
                .cloned(),
        );
        pts.push((b.clone(), self.eval(b)?));
        Ok(Self::from_canonical(canonicalize(pts)))
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[0].1 < w[1].1)
    }

    /// Pointwise `(self + other) / 2` style combination `s*self + t*other`
    /// over a shared domain.
    pub fn linear_combination(
        &self,
        s: &Rational,
        other: &PlFunction,
        t: &Rational,
    ) -> Result<PlFunction> {
        if self.domain() != other.domain() {
            return Err(Error::DomainMismatch(format!(
                "{} vs {}",
                self.domain(),
                other.domain()
            )));
        }
        let xs = merged_xs(self, other);
        let pts = xs
            .into_iter()
            .map(|x| {
                let y = s * self.eval(&x)? + t * other.eval(&x)?;
                Ok((x, y))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_canonical(canonicalize(pts)))
    }
}

pub(crate) fn interpolate(a: &Breakpoint, b: &Breakpoint, x: &Rational) -> Rational {
    if x == &a.0 {
        return a.1.clone();
    }
    if x == &b.0 {
        return b.1.clone();
    }
    &a.1 + (&b.1 - &a.1) * (x - &a.0) / (&b.0 - &a.0)
}

/// Sorted union of the breakpoint abscissae of two functions.
pub(crate) fn merged_xs(f: &PlFunction, g: &PlFunction) -> Vec<Rational> {
    let (a, b) = (f.points(), g.points());
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => {
                if p.0 < q.0 {
                    i += 1;
                    &p.0
                } else if q.0 < p.0 {
                    j += 1;
                    &q.0
                } else {
                    i += 1;
                    j += 1;
                    &p.0
                }
            }
            (Some(p), None) => {
                i += 1;
                &p.0
            }
            (None, Some(q)) => {
                j += 1;
                &q.0
            }
            (None, None) => unreachable!(),
        };
        out.push(next.clone());
    }
    out
}

impl AsRef<PlFunction> for PlFunction {
    fn as_ref(&self) -> &PlFunction {
        self
    }
}
