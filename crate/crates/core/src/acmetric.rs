//! The metric `ρ(f, g) = ∫|f' − g'|`, its endpoint bound, sampled lower
//! bounds for maps known only through evaluation, the uniform distance,
//! and a steep-cell detector for singular behaviour.

use std::io::Write;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plcore::{Interval, Oracle, PlFunction};
use crate::rational::{self, int, Rational};

/// Level of the default dyadic partition (`2^12` cells).
pub const DEFAULT_PARTITION_LEVEL: u32 = 12;

/// A finite partition `a = t_0 < t_1 < … < t_n = b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    #[serde(with = "rational::vec_as_str")]
    points: Vec<Rational>,
}

impl Partition {
    pub fn new(points: Vec<Rational>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotone { index: i + 1 });
        }
        Ok(Self { points })
    }

    /// `cells` equal cells.
    pub fn uniform(interval: &Interval, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::BadParameter("a partition needs at least one cell".into()));
        }
        let step = interval.len() / int(cells as i64);
        let points = (0..=cells)
            .map(|i| interval.lo() + &step * int(i as i64))
            .collect();
        Ok(Self { points })
    }

    /// `2^level` equal cells.
    pub fn dyadic(interval: &Interval, level: u32) -> Result<Self> {
        if level > 24 {
            return Err(Error::BadParameter(format!("dyadic level {level} is too fine")));
        }
        Self::uniform(interval, 1usize << level)
    }

    pub fn default_for(interval: &Interval) -> Self {
        Self::dyadic(interval, DEFAULT_PARTITION_LEVEL).expect("level within range")
    }

    /// The coarsest partition of `interval` containing every breakpoint of
    /// the given functions that falls inside it.
    pub fn refining(interval: &Interval, functions: &[&PlFunction]) -> Self {
        let mut points: Vec<Rational> = functions
            .iter()
            .flat_map(|f| f.breakpoint_xs())
            .filter(|x| interval.lo() < *x && *x < interval.hi())
            .cloned()
            .collect();
        points.push(interval.lo().clone());
        points.push(interval.hi().clone());
        points.sort();
        points.dedup();
        Self { points }
    }

    pub fn points(&self) -> &[Rational] {
        &self.points
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.points[0].clone(), self.points[self.points.len() - 1].clone())
            .expect("strictly increasing")
    }

    /// Insert every cell midpoint.
    pub fn refine(&self) -> Self {
        let mut points = Vec::with_capacity(2 * self.points.len() - 1);
        for w in self.points.windows(2) {
            points.push(w[0].clone());
            points.push(rational::midpoint(&w[0], &w[1]));
        }
        points.push(self.points[self.points.len() - 1].clone());
        Self { points }
    }

    /// Union with another partition of the same interval.
    pub fn merge(&self, other: &Partition) -> Result<Self> {
        if self.interval() != other.interval() {
            return Err(Error::DomainMismatch(format!(
                "partitions of {} and {}",
                self.interval(),
                other.interval()
            )));
        }
        let mut points: Vec<Rational> = self.points.iter().chain(&other.points).cloned().collect();
        points.sort();
        points.dedup();
        Ok(Self { points })
    }
}

fn check_window(f: &PlFunction, a: &Rational, b: &Rational) -> Result<()> {
    let dom = f.domain();
    if a > b || !dom.contains(a) || !dom.contains(b) {
        return Err(Error::DomainMismatch(format!(
            "[{}, {}] is not inside {}",
            rational::format(a),
            rational::format(b),
            dom
        )));
    }
    Ok(())
}

/// `ρ_a^b(f, g)`, exactly: the sum of `|slope_f − slope_g| · length` over
/// the common refinement of both breakpoint sets inside `[a, b]`.
pub fn rho_exact<F, G>(f: &F, g: &G, a: &Rational, b: &Rational) -> Result<Rational>
where
    F: AsRef<PlFunction> + ?Sized,
    G: AsRef<PlFunction> + ?Sized,
{
    let (f, g) = (f.as_ref(), g.as_ref());
    check_window(f, a, b)?;
    check_window(g, a, b)?;
    let mut total = Rational::zero();
    if a == b {
        return Ok(total);
    }
    let (fp, gp) = (f.points(), g.points());
    let (mut i, mut j) = (f.segment_of(a), g.segment_of(a));
    let mut left = a.clone();
    while &left < b {
        let right = [&fp[i + 1].0, &gp[j + 1].0, b]
            .into_iter()
            .min()
            .expect("three candidates")
            .clone();
        let diff = f.slope(i) - g.slope(j);
        total += diff.abs() * (&right - &left);
        if right == fp[i + 1].0 && i + 2 < fp.len() {
            i += 1;
        }
        if right == gp[j + 1].0 && j + 2 < gp.len() {
            j += 1;
        }
        left = right;
    }
    Ok(total)
}

/// `f(b) − f(a) + g(b) − g(a)`, an upper bound for `ρ_a^b(f, g)` whenever
/// both maps are nondecreasing.
pub fn rho_upper_bound<F, G>(f: &F, g: &G, a: &Rational, b: &Rational) -> Result<Rational>
where
    F: AsRef<PlFunction> + ?Sized,
    G: AsRef<PlFunction> + ?Sized,
{
    let (f, g) = (f.as_ref(), g.as_ref());
    check_window(f, a, b)?;
    check_window(g, a, b)?;
    Ok(f.eval(b)? - f.eval(a)? + g.eval(b)? - g.eval(a)?)
}

/// Values of an oracle at every partition point, evaluated in parallel.
pub fn sample<O: Oracle + ?Sized>(h: &O, partition: &Partition) -> Result<Vec<Rational>> {
    partition.points().par_iter().map(|t| h.eval(t)).collect()
}

/// Variation of `u − v` along paired samples.
pub fn variation_of_difference(u: &[Rational], v: &[Rational]) -> Rational {
    debug_assert_eq!(u.len(), v.len());
    let diffs: Vec<Rational> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    diffs
        .windows(2)
        .fold(Rational::zero(), |acc, w| acc + (&w[1] - &w[0]).abs())
}

/// `Σ |(f − g)(t_{i+1}) − (f − g)(t_i)|` over the partition.
///
/// For absolutely continuous `f` and `g` this never exceeds `ρ`, grows
/// under refinement, and equals `ρ` once the partition contains every
/// breakpoint of two piecewise-linear maps.
pub fn rho_sampled_lower<F, G>(f: &F, g: &G, partition: &Partition) -> Result<Rational>
where
    F: Oracle + ?Sized,
    G: Oracle + ?Sized,
{
    let (u, v) = rayon::join(|| sample(f, partition), || sample(g, partition));
    Ok(variation_of_difference(&u?, &v?))
}

/// `sup |f − g|`, attained at a breakpoint of one of the two maps.
pub fn uniform_dist<F, G>(f: &F, g: &G) -> Result<Rational>
where
    F: AsRef<PlFunction> + ?Sized,
    G: AsRef<PlFunction> + ?Sized,
{
    let (f, g) = (f.as_ref(), g.as_ref());
    if f.domain() != g.domain() {
        return Err(Error::DomainMismatch(format!(
            "{} vs {}",
            f.domain(),
            g.domain()
        )));
    }
    let mut best = Rational::zero();
    for x in crate::plcore::merged_breakpoints(f, g) {
        let d = (f.eval(&x)? - g.eval(&x)?).abs();
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

/// Total rise of `h` over mesh cells steeper than `slope_threshold`.
///
/// A heuristic witness for singular behaviour: zero for any
/// piecewise-linear map once the threshold exceeds its largest slope, and
/// bounded away from zero along Cantor-staircase approximants. It does not
/// decide absolute continuity.
pub fn singular_mass<H: Oracle + ?Sized>(
    h: &H,
    mesh: &Rational,
    slope_threshold: &Rational,
) -> Result<Rational> {
    let dom = h.domain();
    if !mesh.is_positive() {
        return Err(Error::BadParameter("mesh must be positive".into()));
    }
    let cells = dom.len() / mesh;
    if !cells.is_integer() {
        return Err(Error::BadParameter(format!(
            "mesh {} does not divide {}",
            rational::format(mesh),
            dom
        )));
    }
    let cells: usize = cells
        .to_integer()
        .try_into()
        .map_err(|_| Error::BadParameter("too many mesh cells".into()))?;
    let values = sample(h, &Partition::uniform(&dom, cells)?)?;
    let steep = slope_threshold * mesh;
    Ok(values
        .windows(2)
        .map(|w| &w[1] - &w[0])
        .filter(|rise| rise > &steep)
        .fold(Rational::zero(), |acc, r| acc + r))
}

/// One row of a parameter sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub n: u64,
    pub rho: Rational,
    pub uniform: Rational,
    pub bound: Rational,
}

/// Write sweep rows as CSV, each rational as `p/q` followed by its decimal
/// rendering.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Parse(format!("csv output failed: {e}"));
    w.write_record([
        "n",
        "rho",
        "rho_decimal",
        "uniform",
        "uniform_decimal",
        "bound",
        "bound_decimal",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            rational::format(&r.rho),
            rational::to_decimal(&r.rho),
            rational::format(&r.uniform),
            rational::to_decimal(&r.uniform),
            rational::format(&r.bound),
            rational::to_decimal(&r.bound),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Parse(format!("csv output failed: {e}")))?;
    Ok(())
}
