use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{fixed_set, Parity};
use crate::error::{Error, Result};
use crate::plcore::{Homeomorphism, Interval, Oracle, PlHomeo};
use crate::rational::{self, Rational};

/// Default cap on PL atom applications per evaluation (`2^16`).
pub const DEFAULT_ITERATION_CAP: u64 = 1 << 16;

/// The definition of a [`LazyHomeo`] node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Atom {
        map: PlHomeo,
    },
    Identity {
        domain: Interval,
    },
    /// `outer ∘ inner`.
    Compose {
        outer: LazyHomeo,
        inner: LazyHomeo,
    },
    Inverse {
        of: LazyHomeo,
    },
    Power {
        of: LazyHomeo,
        n: i64,
    },
    /// `outer` on `[x0, hi]`; below `x0` the tiles `[x_{n+1}, x_n]` with
    /// `x_n = shift^{-n}(x0)`, carrying `shift^{-n} ∘ tiles[n mod N] ∘ shift^n`.
    Tiled {
        shift: PlHomeo,
        tiles: Vec<PlHomeo>,
        outer: PlHomeo,
        #[serde(with = "rational::as_str")]
        x0: Rational,
    },
    /// `x ↦ g^n(h0(f^{-n}(x)))`, with `n` placing `f^{-n}(x)` in the
    /// fundamental domain `h0.domain()` (closed on the left, open on the right).
    OrbitExtension {
        f: PlHomeo,
        g: PlHomeo,
        h0: PlHomeo,
    },
    /// Maps on abutting intervals glued end to end.
    Pasted {
        pieces: Vec<LazyHomeo>,
    },
}

#[derive(Debug, PartialEq, Eq)]
struct Node {
    domain: Interval,
    codomain: Interval,
    expr: Expr,
}

/// An exactly evaluable increasing bijection given by an expression over
/// piecewise-linear atoms. Cheap to clone; subtrees are shared.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "Expr", try_from = "Expr")]
pub struct LazyHomeo(Arc<Node>);

impl PartialEq for LazyHomeo {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for LazyHomeo {}

impl From<LazyHomeo> for Expr {
    fn from(h: LazyHomeo) -> Expr {
        h.0.expr.clone()
    }
}

impl TryFrom<Expr> for LazyHomeo {
    type Error = Error;

    fn try_from(expr: Expr) -> Result<Self> {
        LazyHomeo::from_expr(expr)
    }
}

impl From<PlHomeo> for LazyHomeo {
    fn from(map: PlHomeo) -> Self {
        LazyHomeo::atom(map)
    }
}

fn self_map(domain: &Interval, codomain: &Interval, what: &str) -> Result<()> {
    if domain != codomain {
        return Err(Error::DomainMismatch(format!(
            "{what} needs a self-map, got {domain} -> {codomain}"
        )));
    }
    Ok(())
}

/// Fundamental domain `[x0, f(x0)]` or `[f(x0), x0]` of a bump.
pub(crate) fn fundamental_domain(f: &PlHomeo, x0: &Rational) -> Result<(Interval, Parity)> {
    let fx = f.eval(x0)?;
    let parity = Parity::of(&fx, x0);
    let span = match parity {
        Parity::Positive => Interval::new(x0.clone(), fx)?,
        Parity::Negative => Interval::new(fx, x0.clone())?,
        Parity::Zero => return Err(Error::HasInteriorFixedPoint { x: x0.clone() }),
    };
    Ok((span, parity))
}

/// Parity of a map with no fixed points besides its endpoints.
pub(crate) fn bump_parity(f: &PlHomeo) -> Result<Parity> {
    self_map(&f.domain(), &f.codomain(), "a bump")?;
    let dom = f.domain();
    let fixed = fixed_set(f)?;
    if let Some(x) = fixed
        .pieces()
        .iter()
        .map(|p| p.hi())
        .find(|x| dom.lo() < *x && *x < dom.hi())
    {
        return Err(Error::HasInteriorFixedPoint { x: x.clone() });
    }
    if let Some(iv) = fixed.intervals().first() {
        // a fixed interval always has an interior point
        return Err(Error::HasInteriorFixedPoint { x: iv.midpoint() });
    }
    let mid = dom.midpoint();
    Ok(Parity::of(&f.eval(&mid)?, &mid))
}

impl LazyHomeo {
    /// Validating constructor for every node kind.
    pub fn from_expr(expr: Expr) -> Result<Self> {
        let (domain, codomain) = match &expr {
            Expr::Atom { map } => (map.domain(), map.codomain()),
            Expr::Identity { domain } => (domain.clone(), domain.clone()),
            Expr::Compose { outer, inner } => {
                if inner.codomain() != outer.domain() {
                    return Err(Error::DomainMismatch(format!(
                        "cannot compose: inner codomain {} differs from outer domain {}",
                        inner.codomain(),
                        outer.domain()
                    )));
                }
                (inner.domain().clone(), outer.codomain().clone())
            }
            Expr::Inverse { of } => (of.codomain().clone(), of.domain().clone()),
            Expr::Power { of, .. } => {
                self_map(of.domain(), of.codomain(), "power")?;
                (of.domain().clone(), of.domain().clone())
            }
            Expr::Tiled {
                shift,
                tiles,
                outer,
                x0,
            } => {
                let dom = shift.domain();
                self_map(&dom, &shift.codomain(), "the tile shift")?;
                if !(dom.lo() < x0 && x0 < dom.hi()) {
                    return Err(Error::BadParameter(format!(
                        "x0 = {} must lie inside {}",
                        rational::format(x0),
                        dom
                    )));
                }
                let fixed = fixed_set(shift)?;
                let below = fixed
                    .pieces()
                    .iter()
                    .any(|p| p.hi() > dom.lo() && p.lo() <= x0);
                if below || shift.eval(x0)? <= *x0 {
                    return Err(Error::BadParameter(
                        "the tile shift must push every point of (lo, x0] upward".into(),
                    ));
                }
                let x1 = shift.eval_inverse(x0)?;
                let tile_dom = Interval::new(x1, x0.clone())?;
                if tiles.is_empty() {
                    return Err(Error::BadParameter("at least one tile map is needed".into()));
                }
                for t in tiles {
                    if t.domain() != tile_dom || t.codomain() != tile_dom {
                        return Err(Error::DomainMismatch(format!(
                            "tile maps must be self-maps of {tile_dom}, got {} -> {}",
                            t.domain(),
                            t.codomain()
                        )));
                    }
                }
                let outer_dom = Interval::new(x0.clone(), dom.hi().clone())?;
                if outer.domain() != outer_dom || outer.codomain() != outer_dom {
                    return Err(Error::DomainMismatch(format!(
                        "the outer map must be a self-map of {outer_dom}"
                    )));
                }
                (dom.clone(), dom)
            }
            Expr::OrbitExtension { f, g, h0 } => {
                let pf = bump_parity(f)?;
                let pg = bump_parity(g)?;
                if pf != pg {
                    return Err(Error::ParityMismatch);
                }
                let x0 = match pf {
                    Parity::Positive => h0.domain().lo().clone(),
                    _ => h0.domain().hi().clone(),
                };
                let y0 = match pf {
                    Parity::Positive => h0.codomain().lo().clone(),
                    _ => h0.codomain().hi().clone(),
                };
                let (df, _) = fundamental_domain(f, &x0)?;
                let (dg, _) = fundamental_domain(g, &y0)?;
                if h0.domain() != df || h0.codomain() != dg {
                    return Err(Error::DomainMismatch(format!(
                        "h0 must map {df} onto {dg}, got {} -> {}",
                        h0.domain(),
                        h0.codomain()
                    )));
                }
                (f.domain(), g.domain())
            }
            Expr::Pasted { pieces } => {
                let (first, last) = match (pieces.first(), pieces.last()) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::TooFewPoints(0)),
                };
                for w in pieces.windows(2) {
                    if w[0].domain().hi() != w[1].domain().lo()
                        || w[0].codomain().hi() != w[1].codomain().lo()
                    {
                        return Err(Error::DomainMismatch(format!(
                            "pieces {} -> {} and {} -> {} do not abut",
                            w[0].domain(),
                            w[0].codomain(),
                            w[1].domain(),
                            w[1].codomain()
                        )));
                    }
                }
                (
                    Interval::new(first.domain().lo().clone(), last.domain().hi().clone())?,
                    Interval::new(first.codomain().lo().clone(), last.codomain().hi().clone())?,
                )
            }
        };
        Ok(Self(Arc::new(Node {
            domain,
            codomain,
            expr,
        })))
    }

    pub fn atom(map: PlHomeo) -> Self {
        Self::from_expr(Expr::Atom { map }).expect("atoms are always valid")
    }

    pub fn identity(domain: &Interval) -> Self {
        Self::from_expr(Expr::Identity {
            domain: domain.clone(),
        })
        .expect("identity is always valid")
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LazyHomeo) -> Result<Self> {
        Self::from_expr(Expr::Compose {
            outer: self.clone(),
            inner: inner.clone(),
        })
    }

    pub fn inverse(&self) -> Self {
        if let Expr::Inverse { of } = &self.0.expr {
            return of.clone();
        }
        Self::from_expr(Expr::Inverse { of: self.clone() }).expect("inverse is always valid")
    }

    pub fn power(&self, n: i64) -> Result<Self> {
        Self::from_expr(Expr::Power {
            of: self.clone(),
            n,
        })
    }

    pub fn tiled(shift: PlHomeo, tiles: Vec<PlHomeo>, outer: PlHomeo, x0: Rational) -> Result<Self> {
        Self::from_expr(Expr::Tiled {
            shift,
            tiles,
            outer,
            x0,
        })
    }

    pub fn pasted(pieces: Vec<LazyHomeo>) -> Result<Self> {
        Self::from_expr(Expr::Pasted { pieces })
    }

    pub fn domain(&self) -> &Interval {
        &self.0.domain
    }

    pub fn codomain(&self) -> &Interval {
        &self.0.codomain
    }

    pub fn expr(&self) -> &Expr {
        &self.0.expr
    }

    /// The underlying map when this node is a single atom.
    pub fn as_atom(&self) -> Option<&PlHomeo> {
        match &self.0.expr {
            Expr::Atom { map } => Some(map),
            _ => None,
        }
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        self.eval_with_cap(x, DEFAULT_ITERATION_CAP)
    }

    pub fn eval_inverse(&self, y: &Rational) -> Result<Rational> {
        self.eval_inverse_with_cap(y, DEFAULT_ITERATION_CAP)
    }

    pub fn eval_with_cap(&self, x: &Rational, cap: u64) -> Result<Rational> {
        Ok(lazy_eval(self, x, cap)?.value)
    }

    pub fn eval_inverse_with_cap(&self, y: &Rational, cap: u64) -> Result<Rational> {
        let mut meter = Meter { used: 0, cap };
        self.run(y, true, &mut meter)
    }

    /// View that evaluates with a non-default iteration cap.
    pub fn with_cap(&self, cap: u64) -> Capped<'_> {
        Capped { map: self, cap }
    }

    fn run(&self, x: &Rational, inverse: bool, meter: &mut Meter) -> Result<Rational> {
        let source = if inverse { self.codomain() } else { self.domain() };
        source.check_contains(x)?;
        match &self.0.expr {
            Expr::Atom { map } => {
                meter.tick()?;
                if inverse {
                    map.eval_inverse(x)
                } else {
                    map.eval(x)
                }
            }
            Expr::Identity { .. } => Ok(x.clone()),
            Expr::Compose { outer, inner } => {
                if inverse {
                    let y = outer.run(x, true, meter)?;
                    inner.run(&y, true, meter)
                } else {
                    let y = inner.run(x, false, meter)?;
                    outer.run(&y, false, meter)
                }
            }
            Expr::Inverse { of } => of.run(x, !inverse, meter),
            Expr::Power { of, n } => {
                let backwards = inverse != (*n < 0);
                let mut y = x.clone();
                for _ in 0..n.unsigned_abs() {
                    y = of.run(&y, backwards, meter)?;
                }
                Ok(y)
            }
            Expr::Tiled {
                shift,
                tiles,
                outer,
                x0,
            } => {
                let lo = self.domain().lo();
                if x == lo {
                    return Ok(x.clone());
                }
                let apply = |m: &PlHomeo, v: &Rational, inv: bool, meter: &mut Meter| {
                    meter.tick()?;
                    if inv {
                        m.eval_inverse(v)
                    } else {
                        m.eval(v)
                    }
                };
                if x >= x0 {
                    return apply(outer, x, inverse, meter);
                }
                let x1 = tiles[0].domain().lo().clone();
                let mut y = x.clone();
                let mut n = 0usize;
                while y < x1 {
                    y = apply(shift, &y, false, meter)?;
                    n += 1;
                }
                let mut v = apply(&tiles[n % tiles.len()], &y, inverse, meter)?;
                for _ in 0..n {
                    v = apply(shift, &v, true, meter)?;
                }
                Ok(v)
            }
            Expr::OrbitExtension { f, g, h0 } => {
                let (src, dst, h0_inv) = if inverse { (g, f, true) } else { (f, g, false) };
                let (src_dom, dst_dom) = (src.domain(), dst.domain());
                if x == src_dom.lo() {
                    return Ok(dst_dom.lo().clone());
                }
                if x == src_dom.hi() {
                    return Ok(dst_dom.hi().clone());
                }
                let fd = if inverse { h0.codomain() } else { h0.domain() };
                let positive = src.eval(&src_dom.midpoint())? > src_dom.midpoint();
                // z = src^{-n}(x)
                let mut z = x.clone();
                let mut n: i64 = 0;
                while &z >= fd.hi() {
                    meter.tick()?;
                    if positive {
                        z = src.eval_inverse(&z)?;
                        n += 1;
                    } else {
                        z = src.eval(&z)?;
                        n -= 1;
                    }
                }
                while &z < fd.lo() {
                    meter.tick()?;
                    if positive {
                        z = src.eval(&z)?;
                        n -= 1;
                    } else {
                        z = src.eval_inverse(&z)?;
                        n += 1;
                    }
                }
                meter.tick()?;
                let mut w = if h0_inv { h0.eval_inverse(&z)? } else { h0.eval(&z)? };
                for _ in 0..n.unsigned_abs() {
                    meter.tick()?;
                    w = if n > 0 { dst.eval(&w)? } else { dst.eval_inverse(&w)? };
                }
                Ok(w)
            }
            Expr::Pasted { pieces } => {
                let key = |p: &LazyHomeo| {
                    if inverse {
                        p.codomain().hi().clone()
                    } else {
                        p.domain().hi().clone()
                    }
                };
                let i = pieces
                    .partition_point(|p| &key(p) < x)
                    .min(pieces.len() - 1);
                pieces[i].run(x, inverse, meter)
            }
        }
    }
}

struct Meter {
    used: u64,
    cap: u64,
}

impl Meter {
    fn tick(&mut self) -> Result<()> {
        if self.used >= self.cap {
            return Err(Error::IterationCapExceeded { cap: self.cap });
        }
        self.used += 1;
        Ok(())
    }
}

/// A lazily computed value together with the number of PL atom
/// applications it took.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LazyValue {
    pub value: Rational,
    pub applications: u64,
}

/// Evaluate `h` at `x`, failing once more than `cap` atom applications
/// would be needed.
pub fn lazy_eval(h: &LazyHomeo, x: &Rational, cap: u64) -> Result<LazyValue> {
    let mut meter = Meter { used: 0, cap };
    let value = h.run(x, false, &mut meter)?;
    Ok(LazyValue {
        value,
        applications: meter.used,
    })
}

/// A [`LazyHomeo`] bound to an iteration cap.
#[derive(Clone, Copy, Debug)]
pub struct Capped<'a> {
    pub map: &'a LazyHomeo,
    pub cap: u64,
}

impl Oracle for Capped<'_> {
    fn domain(&self) -> Interval {
        self.map.domain().clone()
    }

    fn eval(&self, x: &Rational) -> Result<Rational> {
        self.map.eval_with_cap(x, self.cap)
    }
}

impl Homeomorphism for Capped<'_> {
    fn codomain(&self) -> Interval {
        self.map.codomain().clone()
    }

    fn eval_inverse(&self, y: &Rational) -> Result<Rational> {
        self.map.eval_inverse_with_cap(y, self.cap)
    }
}

impl Oracle for LazyHomeo {
    fn domain(&self) -> Interval {
        LazyHomeo::domain(self).clone()
    }

    fn eval(&self, x: &Rational) -> Result<Rational> {
        LazyHomeo::eval(self, x)
    }
}

impl Homeomorphism for LazyHomeo {
    fn codomain(&self) -> Interval {
        LazyHomeo::codomain(self).clone()
    }

    fn eval_inverse(&self, y: &Rational) -> Result<Rational> {
        LazyHomeo::eval_inverse(self, y)
    }

    fn orbital_sup(&self, x: &Rational) -> Option<Rational> {
        self.as_atom().and_then(|m| m.orbital_sup(x))
    }
}

impl fmt::Display for LazyHomeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.expr {
            Expr::Atom { map } => write!(f, "{map}"),
            Expr::Identity { domain } => write!(f, "id{domain}"),
            Expr::Compose { outer, inner } => write!(f, "({outer} ∘ {inner})"),
            Expr::Inverse { of } => write!(f, "({of})^-1"),
            Expr::Power { of, n } => write!(f, "({of})^{n}"),
            Expr::Tiled { tiles, x0, .. } => write!(
                f,
                "tiled[{} tiles below {}]",
                tiles.len(),
                rational::format(x0)
            ),
            Expr::OrbitExtension { f: a, g: b, .. } => {
                write!(f, "extend[{} -> {}]", a.domain(), b.domain())
            }
            Expr::Pasted { pieces } => write!(f, "pasted[{} pieces]", pieces.len()),
        }
    }
}
