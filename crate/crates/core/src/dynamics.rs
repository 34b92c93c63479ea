//! Fixed-point sets, orbitals and their parities, the three genericity
//! properties, and orbit-driven point pushing.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::plcore::{Homeomorphism, Interval, PlHomeo};
use crate::rational::{self, Rational};

/// Which side of the diagonal a map lies on at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Negative,
    Zero,
    Positive,
}

impl Parity {
    pub fn of(f_x: &Rational, x: &Rational) -> Parity {
        match f_x.cmp(x) {
            Ordering::Less => Parity::Negative,
            Ordering::Equal => Parity::Zero,
            Ordering::Greater => Parity::Positive,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Parity::Negative => -1,
            Parity::Zero => 0,
            Parity::Positive => 1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Parity> {
        match v {
            -1 => Some(Parity::Negative),
            0 => Some(Parity::Zero),
            1 => Some(Parity::Positive),
            _ => None,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Negative => "-1",
            Parity::Zero => "0",
            Parity::Positive => "+1",
        })
    }
}

impl Serialize for Parity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Parity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Parity::from_i8(v).ok_or_else(|| serde::de::Error::custom(format!("bad parity {v}")))
    }
}

/// One connected piece of a fixed-point set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixedPiece {
    Point(Rational),
    Interval(Interval),
}

impl FixedPiece {
    pub fn lo(&self) -> &Rational {
        match self {
            FixedPiece::Point(x) => x,
            FixedPiece::Interval(iv) => iv.lo(),
        }
    }

    pub fn hi(&self) -> &Rational {
        match self {
            FixedPiece::Point(x) => x,
            FixedPiece::Interval(iv) => iv.hi(),
        }
    }
}

/// `Fix(f)` for a piecewise-linear `f`: finitely many isolated points and
/// closed intervals, sorted and pairwise disjoint.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedSet {
    #[serde(with = "rational::vec_as_str")]
    points: Vec<Rational>,
    intervals: Vec<Interval>,
}

impl FixedSet {
    /// Build from closed pieces `[lo, hi]` (`lo == hi` for points) in any
    /// order; overlapping or touching pieces are merged.
    pub fn from_ranges(mut ranges: Vec<(Rational, Rational)>) -> FixedSet {
        ranges.sort();
        let mut merged: Vec<(Rational, Rational)> = Vec::new();
        for (lo, hi) in ranges {
            if let Some(last) = merged.last_mut() {
                if lo <= last.1 {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                    continue;
                }
            }
            merged.push((lo, hi));
        }
        let mut out = FixedSet::default();
        for (lo, hi) in merged {
            if lo == hi {
                out.points.push(lo);
            } else {
                out.intervals.push(Interval::new(lo, hi).expect("lo < hi"));
            }
        }
        out
    }

    pub fn points(&self) -> &[Rational] {
        &self.points
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }

    /// All pieces, sorted left to right.
    pub fn pieces(&self) -> Vec<FixedPiece> {
        let mut out: Vec<FixedPiece> = self
            .points
            .iter()
            .cloned()
            .map(FixedPiece::Point)
            .chain(self.intervals.iter().cloned().map(FixedPiece::Interval))
            .collect();
        out.sort_by(|a, b| a.lo().cmp(b.lo()));
        out
    }

    fn ranges(&self) -> Vec<(Rational, Rational)> {
        self.pieces()
            .into_iter()
            .map(|p| (p.lo().clone(), p.hi().clone()))
            .collect()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> Rational {
        self.intervals
            .iter()
            .fold(Rational::zero(), |acc, iv| acc + iv.len())
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.points.contains(x) || self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// Smallest member `>= x`, if any.
    pub fn next_at_or_above(&self, x: &Rational) -> Option<Rational> {
        if self.intervals.iter().any(|iv| iv.contains(x)) {
            return Some(x.clone());
        }
        self.pieces()
            .into_iter()
            .map(|p| p.lo().clone())
            .find(|lo| lo >= x)
    }

    pub fn intersect(&self, other: &FixedSet) -> FixedSet {
        let mut out = Vec::new();
        for (a_lo, a_hi) in self.ranges() {
            for (b_lo, b_hi) in other.ranges() {
                let lo = a_lo.clone().max(b_lo);
                let hi = a_hi.clone().min(b_hi);
                if lo <= hi {
                    out.push((lo, hi));
                }
            }
        }
        FixedSet::from_ranges(out)
    }

    /// Image under an increasing map.
    pub fn image(&self, h: &PlHomeo) -> Result<FixedSet> {
        let ranges = self
            .ranges()
            .into_iter()
            .map(|(lo, hi)| Ok((h.eval(&lo)?, h.eval(&hi)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FixedSet::from_ranges(ranges))
    }
}

/// A maximal open component of the complement of `Fix(f)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbital {
    pub span: Interval,
    pub parity: Parity,
}

impl Orbital {
    pub fn contains(&self, x: &Rational) -> bool {
        self.span.lo() < x && x < self.span.hi()
    }
}

fn require_self_map(f: &PlHomeo) -> Result<()> {
    if f.is_self_map() {
        Ok(())
    } else {
        Err(Error::DomainMismatch(format!(
            "expected a self-map of an interval, got {} -> {}",
            f.domain(),
            f.codomain()
        )))
    }
}

/// Exact fixed-point set, solving `f(x) = x` segment by segment.
pub fn fixed_set(f: &PlHomeo) -> Result<FixedSet> {
    require_self_map(f)?;
    let mut ranges = Vec::new();
    for w in f.points().windows(2) {
        let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
        let d0 = y0 - x0;
        let d1 = y1 - x1;
        match (d0.is_zero(), d1.is_zero()) {
            (true, true) => ranges.push((x0.clone(), x1.clone())),
            (true, false) => ranges.push((x0.clone(), x0.clone())),
            (false, true) => ranges.push((x1.clone(), x1.clone())),
            (false, false) => {
                if d0.is_positive() != d1.is_positive() {
                    let x = x0 + &d0 * (x1 - x0) / (&d0 - &d1);
                    ranges.push((x.clone(), x));
                }
            }
        }
    }
    Ok(FixedSet::from_ranges(ranges))
}

/// Nonzero-parity orbitals, left to right.
pub fn orbitals(f: &PlHomeo) -> Result<Vec<Orbital>> {
    let pieces = fixed_set(f)?.pieces();
    let mut out = Vec::new();
    for w in pieces.windows(2) {
        let (lo, hi) = (w[0].hi(), w[1].lo());
        if lo < hi {
            let span = Interval::new(lo.clone(), hi.clone())?;
            let mid = span.midpoint();
            let parity = Parity::of(&f.eval(&mid)?, &mid);
            out.push(Orbital { span, parity });
        }
    }
    Ok(out)
}

/// The orbital containing `x`, or `None` when `x` is fixed.
pub fn orbital_of(f: &PlHomeo, x: &Rational) -> Result<Option<Orbital>> {
    f.domain().check_contains(x)?;
    Ok(orbitals(f)?.into_iter().find(|o| o.contains(x)))
}

/// Outcome of the between-orbitals mixing test for one pair `q < r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetweenReport {
    pub holds: bool,
    /// True when the hypothesis fails (a point is fixed, or both share an orbital).
    pub vacuous: bool,
    #[serde(with = "rational::opt_as_str")]
    pub positive_witness: Option<Rational>,
    #[serde(with = "rational::opt_as_str")]
    pub negative_witness: Option<Rational>,
}


/// For `q < r` in distinct orbitals, checks that the orbitals strictly
/// between them include both parities.
pub fn check_between(f: &PlHomeo, q: &Rational, r: &Rational) -> Result<BetweenReport> {
    require_self_map(f)?;
    let dom = f.domain();
    dom.check_contains(q)?;
    dom.check_contains(r)?;
    if q >= r {
        return Err(Error::BadParameter(format!(
            "need q < r, got {} and {}",
            rational::format(q),
            rational::format(r)
        )));
    }
    let all = orbitals(f)?;
    let vacuous = BetweenReport {
        holds: true,
        vacuous: true,
        positive_witness: None,
        negative_witness: None,
    };
    let (Some(oq), Some(or)) = (
        all.iter().find(|o| o.contains(q)),
        all.iter().find(|o| o.contains(r)),
    ) else {
        return Ok(vacuous);
    };
    if oq == or {
        return Ok(vacuous);
    }
    let between = all
        .iter()
        .filter(|o| o.span.lo() >= oq.span.hi() && o.span.hi() <= or.span.lo());
    let mut positive_witness = None;
    let mut negative_witness = None;
    for o in between {
        match o.parity {
            Parity::Positive if positive_witness.is_none() => {
                positive_witness = Some(o.span.midpoint())
            }
            Parity::Negative if negative_witness.is_none() => {
                negative_witness = Some(o.span.midpoint())
            }
            _ => {}
        }
    }
    Ok(BetweenReport {
        holds: positive_witness.is_some() && negative_witness.is_some(),
        vacuous: false,
        positive_witness,
        negative_witness,
    })
}

/// Diagnostic attached to a failed genericity property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// An isolated fixed point; Fix is not perfect.
    IsolatedPoint {
        #[serde(with = "rational::as_str")]
        x: Rational,
    },
    /// A nondegenerate fixed interval; Fix is not totally disconnected.
    FixedInterval { span: Interval },
    /// Two orbitals with no orbital of the given parity between them.
    UnmixedGap {
        left: Interval,
        right: Interval,
        missing: Parity,
    },
}

/// The three properties characterizing generic elements: (i) Fix is a
/// Cantor set, (ii) both parities occur between any two orbitals,
/// (iii) Fix is Lebesgue-null.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub is_cantor: bool,
    pub mixing: bool,
    pub null_fixed: bool,
    #[serde(with = "rational::as_str")]
    pub fixed_measure: Rational,
    pub witnesses: Vec<Witness>,
}

pub fn genericity_report(f: &PlHomeo) -> Result<GenericityReport> {
    let fixed = fixed_set(f)?;
    let orbs = orbitals(f)?;
    let mut witnesses = Vec::new();

    // A finite union of points and intervals is perfect iff it has no
    // isolated points, and totally disconnected iff it has no intervals.
    for x in fixed.points() {
        witnesses.push(Witness::IsolatedPoint { x: x.clone() });
    }
    for iv in fixed.intervals() {
        witnesses.push(Witness::FixedInterval { span: iv.clone() });
    }
    let is_cantor = !fixed.is_empty() && fixed.points().is_empty() && fixed.intervals().is_empty();

    let mut mixing = true;
    for (i, left) in orbs.iter().enumerate() {
        for right in &orbs[i + 1..] {
            let inner = || {
                orbs.iter()
                    .filter(|o| o.span.lo() >= left.span.hi() && o.span.hi() <= right.span.lo())
            };
            for parity in [Parity::Positive, Parity::Negative] {
                if !inner().any(|o| o.parity == parity) {
                    mixing = false;
                    witnesses.push(Witness::UnmixedGap {
                        left: left.span.clone(),
                        right: right.span.clone(),
                        missing: parity,
                    });
                }
            }
        }
    }

    let fixed_measure = fixed.measure();
    Ok(GenericityReport {
        is_cantor,
        mixing,
        null_fixed: fixed_measure.is_zero(),
        fixed_measure,
        witnesses,
    })
}

/// One letter of a push word: generator index and direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub generator: usize,
    pub inverse: bool,
}

/// A successful push: `point` is the image of the start point under the
/// moves applied in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushOutcome {
    #[serde(with = "rational::as_str")]
    pub point: Rational,
    pub moves: Vec<Move>,
}

impl PushOutcome {
    /// Re-apply the recorded moves to `start`.
    pub fn replay<H: Homeomorphism>(&self, generators: &[H], start: &Rational) -> Result<Rational> {
        self.moves.iter().try_fold(start.clone(), |x, m| {
            let g = &generators[m.generator];
            if m.inverse {
                g.eval_inverse(&x)
            } else {
                g.eval(&x)
            }
        })
    }
}

/// Greedily push `start` above `target` with the generators and their
/// inverses, taking the largest image at every step.
///
/// Ties go to the lower generator index, and to the inverse before the
/// forward map. On failure the error names the point the ascent converges
/// to and which generators fix it; a point fixed by all generators bounds
/// the orbit of `start` under the whole group.
pub fn push_sup<H: Homeomorphism>(
    generators: &[H],
    start: &Rational,
    target: &Rational,
    budget: usize,
) -> Result<PushOutcome> {
    if generators.is_empty() {
        return Err(Error::BadParameter("no generators".into()));
    }
    let dom = generators[0].domain();
    for g in generators {
        if g.domain() != dom || g.codomain() != dom {
            return Err(Error::DomainMismatch(
                "generators must be self-maps of one interval".into(),
            ));
        }
    }
    dom.check_contains(start)?;

    let mut x = start.clone();
    let mut moves = Vec::new();
    let mut last_used: Option<usize> = None;
    while &x <= target {
        let mut best: Option<(Rational, Move)> = None;
        if moves.len() < budget {
            for (i, g) in generators.iter().enumerate() {
                for inverse in [true, false] {
                    let y = if inverse { g.eval_inverse(&x)? } else { g.eval(&x)? };
                    if y > x && best.as_ref().is_none_or(|(b, _)| &y > b) {
                        best = Some((y, Move { generator: i, inverse }));
                    }
                }
            }
        }
        let Some((y, m)) = best else {
            let stall = match last_used {
                Some(i) if moves.len() >= budget => {
                    generators[i].orbital_sup(&x).unwrap_or_else(|| x.clone())
                }
                _ => x.clone(),
            };
            let fixed_by = generators
                .iter()
                .enumerate()
                .filter(|(_, g)| g.eval(&stall).map(|v| v == stall).unwrap_or(false))
                .map(|(i, _)| i)
                .collect();
            return Err(Error::BudgetExhausted {
                stall,
                reached: Box::new(x),
                fixed_by,
                steps: moves.len(),
            });
        };
        x = y;
        last_used = Some(m.generator);
        moves.push(m);
    }
    Ok(PushOutcome { point: x, moves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{sawtooth, wobble};
    use crate::rational::{int, rat};

    fn w() -> PlHomeo {
        wobble(&int(0), &int(1)).unwrap()
    }

    #[test]
    fn fixed_set_examples() {
        let id = PlHomeo::identity(&Interval::unit());
        let fid = fixed_set(&id).unwrap();
        assert!(fid.points().is_empty());
        assert_eq!(fid.intervals(), &[Interval::unit()]);

        let s = fixed_set(&sawtooth(4).unwrap()).unwrap();
        assert_eq!(s.points(), &[int(0), rat(1, 4), rat(1, 2), rat(3, 4), int(1)]);
        assert!(s.intervals().is_empty());

        let fw = fixed_set(&w()).unwrap();
        assert_eq!(fw.points(), &[int(0), rat(4, 11), rat(2, 3), int(1)]);
        assert_eq!(fixed_set(&w().inverse()).unwrap(), fw);

        let not_self = PlHomeo::affine(&Interval::unit(), &Interval::new(int(0), int(2)).unwrap());
        assert!(matches!(fixed_set(&not_self), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn orbital_examples() {
        assert!(orbitals(&PlHomeo::identity(&Interval::unit())).unwrap().is_empty());
        let got: Vec<(Rational, Rational, i8)> = orbitals(&w())
            .unwrap()
            .into_iter()
            .map(|o| (o.span.lo().clone(), o.span.hi().clone(), o.parity.as_i8()))
            .collect();
        assert_eq!(
            got,
            vec![
                (int(0), rat(4, 11), 1),
                (rat(4, 11), rat(2, 3), -1),
                (rat(2, 3), int(1), 1),
            ]
        );
        assert_eq!(orbital_of(&w(), &rat(4, 11)).unwrap(), None);
    }

    #[test]
    fn between_examples() {
        let id = PlHomeo::identity(&Interval::unit());
        let r = check_between(&id, &rat(1, 3), &rat(2, 3)).unwrap();
        assert!(r.holds && r.vacuous);

        let r = check_between(&w(), &rat(1, 5), &rat(5, 6)).unwrap();
        assert!(!r.holds && !r.vacuous);
        assert_eq!(r.positive_witness, None);
        assert!(r.negative_witness.is_some());

        let r = check_between(&w(), &rat(1, 10), &rat(1, 5)).unwrap();
        assert!(r.holds && r.vacuous);
        assert!(check_between(&w(), &rat(1, 2), &rat(1, 3)).is_err());
    }

    #[test]
    fn genericity_examples() {
        let id = genericity_report(&PlHomeo::identity(&Interval::unit())).unwrap();
        assert!(!id.is_cantor && !id.null_fixed);
        assert_eq!(id.fixed_measure, int(1));

        let s = genericity_report(&sawtooth(4).unwrap()).unwrap();
        assert!(!s.is_cantor && s.null_fixed);
        assert!(!s.mixing);

        let text = serde_json::to_string(&genericity_report(&w()).unwrap()).unwrap();
        assert!(text.contains(r#""fixed_measure":"0""#));
        assert!(text.contains(r#"{"kind":"isolated_point","x":"4/11"}"#));
    }

    #[test]
    fn push_examples() {
        let gens = [w()];
        let out = push_sup(&gens, &rat(1, 2), &rat(3, 5), 64).unwrap();
        assert!(out.point > rat(3, 5));
        assert!(out.moves.iter().all(|m| m.inverse));
        assert_eq!(out.replay(&gens, &rat(1, 2)).unwrap(), out.point);

        match push_sup(&gens, &rat(1, 2), &rat(9, 10), 64) {
            Err(Error::BudgetExhausted { stall, fixed_by, .. }) => {
                assert_eq!(stall, rat(2, 3));
                assert_eq!(fixed_by, vec![0]);
            }
            other => panic!("expected a stall, got {other:?}"),
        }

        let out = push_sup(&gens, &rat(4, 5), &rat(1, 2), 0).unwrap();
        assert_eq!(out.point, rat(4, 5));
        assert!(out.moves.is_empty());
    }
}
