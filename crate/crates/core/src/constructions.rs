//! Explicit families and operators: sawtooth maps, the three-orbital
//! wobble, blow-ups of fixed points into fixed intervals, Cantor staircase
//! approximants, and the generator pair whose lower tiles carry a chosen
//! family of maps.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::acmetric::rho_exact;
use crate::dynamics::{fixed_set, FixedSet};
use crate::error::{Error, Result};
use crate::orbitmaps::LazyHomeo;
use crate::plcore::{Interval, PlFunction, PlHomeo};
use crate::rational::{self, int, rat, Rational};

/// Largest `k` accepted by [`cantor_stair`] (`2^{k+1}` breakpoints).
pub const MAX_CANTOR_STAGE: u32 = 20;

/// The map through `(i/n, i/n)` and `(i/n + 1/n², (i+1)/n − 1/n²)`.
pub fn sawtooth(n: u32) -> Result<PlHomeo> {
    if n < 2 {
        return Err(Error::BadParameter(format!("sawtooth needs n >= 2, got {n}")));
    }
    let n_r = int(n as i64);
    let sq = &n_r * &n_r;
    let mut pts = Vec::with_capacity(2 * n as usize + 1);
    for i in 0..n as i64 {
        let left = int(i) / &n_r;
        let right = int(i + 1) / &n_r;
        pts.push((left.clone(), left.clone()));
        pts.push((&left + sq.recip(), &right - sq.recip()));
    }
    pts.push((Rational::one(), Rational::one()));
    PlHomeo::from_points(pts)
}

/// The five-point map on `[a, b]` above, below, then above the diagonal.
pub fn wobble(a: &Rational, b: &Rational) -> Result<PlHomeo> {
    if a >= b {
        return Err(Error::BadParameter(format!(
            "wobble needs a < b, got {} and {}",
            rational::format(a),
            rational::format(b)
        )));
    }
    let comb = |p: i64, q: i64, d: i64| (int(p) * a + int(q) * b) / int(d);
    PlHomeo::from_points(vec![
        (a.clone(), a.clone()),
        (comb(3, 1, 4), comb(2, 1, 3)),
        (comb(1, 1, 2), comb(3, 2, 5)),
        (comb(1, 3, 4), comb(1, 4, 5)),
        (b.clone(), b.clone()),
    ])
}

/// A fixed point `x` to be blown up to the interval `[a, b]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    #[serde(with = "rational::as_str")]
    pub a: Rational,
    #[serde(with = "rational::as_str")]
    pub x: Rational,
    #[serde(with = "rational::as_str")]
    pub b: Rational,
}

impl Site {
    pub fn new(a: Rational, x: Rational, b: Rational) -> Self {
        Self { a, x, b }
    }

    /// `[x − r, x + r]`.
    pub fn around(x: &Rational, radius: &Rational) -> Self {
        Self::new(x - radius, x.clone(), x + radius)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowUpSpec {
    pub map: PlHomeo,
    pub sites: Vec<Site>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowUp {
    pub psi: PlHomeo,
    /// Upper bound for `ρ(map, psi)`.
    #[serde(with = "rational::as_str")]
    pub bound: Rational,
}

/// The identity on every site, and on each gap `[u, v]` between sites the
/// copy `u + (v − u)·(φ(x) − φ(u)) / (φ(v) − φ(u))` of the map.
pub fn blow_up(spec: &BlowUpSpec) -> Result<BlowUp> {
    let phi = &spec.map;
    let dom = phi.domain();
    if phi.codomain() != dom {
        return Err(Error::DomainMismatch(format!(
            "blow-up needs a self-map, got {} -> {}",
            dom,
            phi.codomain()
        )));
    }
    let mut prev_b: Option<&Rational> = None;
    for s in &spec.sites {
        if !(s.a <= s.x && s.x <= s.b) || &s.a < dom.lo() || &s.b > dom.hi() {
            return Err(Error::OverlappingSites(format!(
                "site [{}, {}] around {} is malformed or leaves {}",
                rational::format(&s.a),
                rational::format(&s.b),
                rational::format(&s.x),
                dom
            )));
        }
        if prev_b.is_some_and(|b| b >= &s.a) {
            return Err(Error::OverlappingSites(format!(
                "site starting at {} meets its predecessor",
                rational::format(&s.a)
            )));
        }
        if phi.eval(&s.x)? != s.x {
            return Err(Error::NotAFixedPoint { x: s.x.clone() });
        }
        prev_b = Some(&s.b);
    }

    let mut pts: Vec<(Rational, Rational)> = Vec::new();
    let mut push = |x: Rational, y: Rational| {
        if pts.last().is_none_or(|p| p.0 < x) {
            pts.push((x, y));
        }
    };
    let gap = |u: &Rational, v: &Rational, push: &mut dyn FnMut(Rational, Rational)| -> Result<()> {
        if u >= v {
            return Ok(());
        }
        let (pu, pv) = (phi.eval(u)?, phi.eval(v)?);
        let scale = (v - u) / (&pv - &pu);
        let y = |px: &Rational| u + &scale * (px - &pu);
        push(u.clone(), u.clone());
        for (x, px) in phi.points().iter().filter(|p| &p.0 > u && &p.0 < v) {
            push(x.clone(), y(px));
        }
        push(v.clone(), v.clone());
        Ok(())
    };
    let mut u = dom.lo().clone();
    let mut bound = Rational::zero();
    for s in &spec.sites {
        gap(&u, &s.a, &mut push)?;
        push(s.a.clone(), s.a.clone());
        push(s.b.clone(), s.b.clone());
        let (pa, pb) = (phi.eval(&s.a)?, phi.eval(&s.b)?);
        bound += (&s.a - &pa).abs() + (&pb - &s.b).abs() + (&s.b - &s.a) + (&pb - &pa);
        u = s.b.clone();
    }
    gap(&u, dom.hi(), &mut push)?;
    Ok(BlowUp {
        psi: PlHomeo::from_points(pts)?,
        bound,
    })
}

/// Stage-`k` middle-thirds staircase: slope `(3/2)^k` on the `2^k` kept
/// intervals, flat on the removed ones.
pub fn cantor_stair(k: u32) -> Result<PlFunction> {
    if k > MAX_CANTOR_STAGE {
        return Err(Error::BadParameter(format!(
            "cantor stage {k} exceeds {MAX_CANTOR_STAGE}"
        )));
    }
    let mut pts = vec![(int(0), int(0)), (int(1), int(1))];
    let (third, half) = (rat(1, 3), rat(1, 2));
    for _ in 0..k {
        let left = pts.iter().map(|(x, y)| (x * &third, y * &half));
        let right = pts
            .iter()
            .map(|(x, y)| ((x + int(2)) * &third, (y + int(1)) * &half));
        pts = left.chain(right).collect();
    }
    PlFunction::new(pts)
}

/// `x ↦ (cantor_stair(k)(x) + x) / 2`.
pub fn mix(k: u32) -> Result<PlHomeo> {
    let cs = cantor_stair(k)?;
    let id = PlHomeo::identity(&Interval::unit());
    let half = rat(1, 2);
    PlHomeo::from_function(cs.linear_combination(&half, id.as_function(), &half)?)
}

/// Inputs for [`generator_pair`]; unset fields take their defaults.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorPairSpec {
    pub f: PlHomeo,
    pub g: PlHomeo,
    #[serde(with = "rational::as_str")]
    pub delta: Rational,
    #[serde(default, with = "rational::opt_as_str", skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Rational>,
    #[serde(default, with = "rational::opt_as_str", skip_serializing_if = "Option::is_none")]
    pub x0: Option<Rational>,
    /// Tile maps, given on any interval and rescaled to `[x1, x0]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phis: Option<Vec<PlHomeo>>,
}

impl GeneratorPairSpec {
    pub fn new(f: PlHomeo, g: PlHomeo, delta: Rational) -> Self {
        Self {
            f,
            g,
            delta,
            alpha: None,
            x0: None,
            phis: None,
        }
    }
}


/// A pair `(f̃, g̃)` close to `(f, g)` whose tiles `[x_{n+1}, x_n]` below
/// `x0` carry conjugated copies of the maps in `phis`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorPair {
    pub f: PlHomeo,
    pub g: PlHomeo,
    #[serde(with = "rational::as_str")]
    pub delta: Rational,
    #[serde(with = "rational::as_str")]
    pub alpha: Rational,
    #[serde(with = "rational::as_str")]
    pub y0: Rational,
    #[serde(with = "rational::as_str")]
    pub x0: Rational,
    #[serde(with = "rational::as_str")]
    pub x1: Rational,
    pub g_tilde: PlHomeo,
    /// `f̃` on `[x0, α]`.
    pub interpolant: PlHomeo,
    pub phis: Vec<PlHomeo>,
    pub f_tilde: LazyHomeo,
}

fn default_alpha(f: &PlHomeo, g: &PlHomeo, delta: &Rational) -> Result<Rational> {
    let half = delta / int(2);
    let reach = |h: &PlHomeo| -> Result<Rational> {
        if half >= Rational::one() {
            Ok(Rational::one())
        } else {
            h.eval_inverse(&half)
        }
    };
    let t = reach(f)?.min(reach(g)?);
    // coarsest dyadic grid below t, then its last point strictly below t
    let mut p = 0u32;
    while rational::dyadic(p) >= t {
        p += 1;
    }
    let scale = rational::pow(&int(2), p);
    let steps = (&t * &scale).ceil() - int(1);
    Ok(steps / scale)
}

fn default_phis(tile: &Interval) -> Result<Vec<PlHomeo>> {
    let up = PlHomeo::from_fractions(&[((0, 1), (0, 1)), ((1, 4), (1, 2)), ((1, 1), (1, 1))])?;
    let down = PlHomeo::from_fractions(&[((0, 1), (0, 1)), ((1, 2), (1, 3)), ((1, 1), (1, 1))])?;
    Ok(vec![up.affine_conjugate(tile)?, down.affine_conjugate(tile)?])
}

/// Three-point map from `(x0, x0)` to `(α, f(α))` through a middle point
/// strictly on one side of the diagonal.
fn default_interpolant(x0: &Rational, alpha: &Rational, f_alpha: &Rational) -> Result<PlHomeo> {
    let m = rational::midpoint(x0, alpha);
    let q = if f_alpha >= alpha {
        rational::midpoint(&m, f_alpha)
    } else {
        rational::midpoint(x0, (&m).min(f_alpha))
    };
    PlHomeo::from_points(vec![
        (x0.clone(), x0.clone()),
        (m, q),
        (alpha.clone(), f_alpha.clone()),
    ])
}

fn first_interior(set: &FixedSet) -> Option<Rational> {
    set.pieces()
        .iter()
        .flat_map(|p| [p.lo().clone(), p.hi().clone()])
        .find(|x| x > &Rational::zero() && x < &Rational::one())
}

pub fn generator_pair(spec: &GeneratorPairSpec) -> Result<GeneratorPair> {
    let unit = Interval::unit();
    for (name, h) in [("f", &spec.f), ("g", &spec.g)] {
        if h.domain() != unit || h.codomain() != unit {
            return Err(Error::DomainMismatch(format!(
                "{name} must be a self-map of [0, 1]"
            )));
        }
    }
    let delta = &spec.delta;
    if !delta.is_positive() {
        return Err(Error::BadParameter("delta must be positive".into()));
    }
    let (f, g) = (&spec.f, &spec.g);
    let alpha = match &spec.alpha {
        Some(a) => a.clone(),
        None => default_alpha(f, g, delta)?,
    };
    let half = delta / int(2);
    if !(alpha.is_positive() && alpha < Rational::one()) {
        return Err(Error::BadParameter("alpha must lie in (0, 1)".into()));
    }
    let (f_alpha, g_alpha) = (f.eval(&alpha)?, g.eval(&alpha)?);
    if f_alpha >= half || g_alpha >= half {
        return Err(Error::BadParameter(format!(
            "alpha = {} needs f(alpha), g(alpha) < delta/2",
            rational::format(&alpha)
        )));
    }
    let y0 = (&alpha).min(&g_alpha).min(&f_alpha).clone() / int(2);

    let mut g_pts = vec![
        (int(0), int(0)),
        (&y0 / int(3), &y0 * rat(2, 3)),
        (y0.clone(), y0.clone()),
        (alpha.clone(), g_alpha.clone()),
    ];
    g_pts.extend(g.points().iter().filter(|p| p.0 > alpha).cloned());
    let g_tilde = PlHomeo::from_points(g_pts)?;

    let x0 = match &spec.x0 {
        Some(x) => x.clone(),
        None => &y0 / int(2),
    };
    if !(x0.is_positive() && x0 < y0) {
        return Err(Error::BadParameter(format!(
            "x0 = {} must lie in (0, y0 = {})",
            rational::format(&x0),
            rational::format(&y0)
        )));
    }
    let x1 = g_tilde.eval_inverse(&x0)?;
    let tile = Interval::new(x1.clone(), x0.clone())?;

    let interpolant = default_interpolant(&x0, &alpha, &f_alpha)?;
    let outer = PlHomeo::paste(&[interpolant.clone(), f.restrict(&alpha, &int(1))?])?;
    let shared = fixed_set(&outer)?.intersect(&fixed_set(&g_tilde)?);
    if let Some(x) = first_interior(&shared) {
        return Err(Error::SharedFixedPoint { x });
    }

    let phis = match &spec.phis {
        None => default_phis(&tile)?,
        Some(list) => list
            .iter()
            .map(|p| p.affine_conjugate(&tile))
            .collect::<Result<Vec<_>>>()?,
    };
    let f_tilde = LazyHomeo::tiled(g_tilde.clone(), phis.clone(), outer, x0.clone())?;
    Ok(GeneratorPair {
        f: f.clone(),
        g: g.clone(),
        delta: delta.clone(),
        alpha,
        y0,
        x0,
        x1,
        g_tilde,
        interpolant,
        phis,
        f_tilde,
    })
}

impl GeneratorPair {
    /// `x_n = g̃^{-n}(x0)`.
    pub fn x(&self, n: usize) -> Result<Rational> {
        let mut x = self.x0.clone();
        for _ in 0..n {
            x = self.g_tilde.eval_inverse(&x)?;
        }
        Ok(x)
    }

    /// The first `count` points `x_0 > x_1 > …`.
    pub fn xs(&self, count: usize) -> Result<Vec<Rational>> {
        let mut out = Vec::with_capacity(count);
        let mut x = self.x0.clone();
        for _ in 0..count {
            let next = self.g_tilde.eval_inverse(&x)?;
            out.push(std::mem::replace(&mut x, next));
        }
        Ok(out)
    }

    /// `f̃` on `[x_{m+1}, x_m]` as an exact PL map,
    /// `g̃^{-m} ∘ φ_{m mod N} ∘ g̃^m`.
    pub fn tile_map(&self, m: usize) -> Result<PlHomeo> {
        let xs = self.xs(m + 2)?;
        // g̃^m restricted to [x_{m+1}, x_m], landing on [x_1, x_0]
        let mut lift = PlHomeo::identity(&Interval::new(xs[m + 1].clone(), xs[m].clone())?);
        for j in (1..=m).rev() {
            let step = self.g_tilde.restrict(&xs[j + 1], &xs[j])?;
            lift = step.compose(&lift)?;
        }
        let phi = &self.phis[m % self.phis.len()];
        lift.inverse().compose(&phi.compose(&lift)?)
    }

    /// Fails with the first common fixed point of `f̃` and `g̃` in `(0, 1)`,
    /// checking `[x0, 1]` and the tiles `m < depth`.
    pub fn check_no_shared_fixed_points(&self, depth: usize) -> Result<()> {
        let g_fixed = fixed_set(&self.g_tilde)?;
        let outer = PlHomeo::paste(&[
            self.interpolant.clone(),
            self.f.restrict(&self.alpha, &int(1))?,
        ])?;
        if let Some(x) = first_interior(&fixed_set(&outer)?.intersect(&g_fixed)) {
            return Err(Error::SharedFixedPoint { x });
        }
        for m in 0..depth {
            let tile = self.tile_map(m)?;
            if let Some(x) = first_interior(&fixed_set(&tile)?.intersect(&g_fixed)) {
                return Err(Error::SharedFixedPoint { x });
            }
        }
        Ok(())
    }

    /// Exact `ρ(g, g̃)`.
    pub fn rho_g(&self) -> Result<Rational> {
        rho_exact(&self.g, &self.g_tilde, &int(0), &int(1))
    }

    /// `2 g(α)`, bounding `ρ(g, g̃)`.
    pub fn g_bound(&self) -> Result<Rational> {
        Ok(self.g.eval(&self.alpha)? * int(2))
    }

    /// `2 f(α)`, bounding `ρ(f, f̃)`.
    pub fn f_bound(&self) -> Result<Rational> {
        Ok(self.f.eval(&self.alpha)? * int(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acmetric::uniform_dist;

    #[test]
    fn sawtooth_examples() {
        assert!(sawtooth(2).unwrap().is_identity());
        let s4 = sawtooth(4).unwrap();
        assert_eq!(s4.eval(&rat(1, 16)).unwrap(), rat(3, 16));
        assert_eq!(rho_exact(&s4, &PlHomeo::identity(&Interval::unit()), &int(0), &int(1)).unwrap(), int(1));
        assert_eq!(uniform_dist(&s4, &PlHomeo::identity(&Interval::unit())).unwrap(), rat(1, 8));
        assert!(matches!(sawtooth(1), Err(Error::BadParameter(_))));
    }

    #[test]
    fn wobble_examples() {
        let w = wobble(&int(0), &int(1)).unwrap();
        let expected = PlHomeo::from_fractions(&[
            ((0, 1), (0, 1)),
            ((1, 4), (1, 3)),
            ((1, 2), (2, 5)),
            ((3, 4), (4, 5)),
            ((1, 1), (1, 1)),
        ])
        .unwrap();
        assert_eq!(w, expected);
        let j = Interval::new(rat(1, 5), rat(7, 9)).unwrap();
        assert_eq!(
            wobble(j.lo(), j.hi()).unwrap(),
            w.affine_conjugate(&j).unwrap()
        );
        assert!(wobble(&int(1), &int(1)).is_err());
    }

    #[test]
    fn blow_up_examples() {
        let id = PlHomeo::identity(&Interval::unit());
        let out = blow_up(&BlowUpSpec {
            map: id.clone(),
            sites: vec![Site::new(rat(1, 4), rat(1, 3), rat(1, 2))],
        })
        .unwrap();
        assert_eq!(out.psi, id);
        assert_eq!(out.bound, rat(1, 2));

        let w = wobble(&int(0), &int(1)).unwrap();
        let degenerate = blow_up(&BlowUpSpec {
            map: w.clone(),
            sites: vec![Site::new(rat(4, 11), rat(4, 11), rat(4, 11))],
        })
        .unwrap();
        assert_eq!(degenerate.psi, w);
        assert_eq!(degenerate.bound, int(0));

        let site = blow_up(&BlowUpSpec {
            map: w.clone(),
            sites: vec![Site::new(rat(7, 20), rat(4, 11), rat(2, 5))],
        })
        .unwrap();
        let rho = rho_exact(&w, &site.psi, &int(0), &int(1)).unwrap();
        assert!(rho <= site.bound);
        assert_eq!(site.psi.eval(&rat(3, 8)).unwrap(), rat(3, 8));

        assert!(matches!(
            blow_up(&BlowUpSpec {
                map: w.clone(),
                sites: vec![Site::new(rat(1, 4), rat(1, 3), rat(1, 2))],
            }),
            Err(Error::NotAFixedPoint { .. })
        ));
        assert!(matches!(
            blow_up(&BlowUpSpec {
                map: w,
                sites: vec![
                    Site::new(int(0), int(0), rat(1, 2)),
                    Site::new(rat(1, 2), int(1), int(1)),
                ],
            }),
            Err(Error::OverlappingSites(_))
        ));
    }

    #[test]
    fn cantor_examples() {
        assert_eq!(cantor_stair(0).unwrap().points(), &[(int(0), int(0)), (int(1), int(1))]);
        for k in 1..6 {
            let cs = cantor_stair(k).unwrap();
            assert_eq!(cs.eval(&rat(1, 3)).unwrap(), rat(1, 2));
            assert_eq!(cs.max_slope(), rational::pow(&rat(3, 2), k));
        }
        assert!(mix(0).unwrap().is_identity());
        assert!(cantor_stair(MAX_CANTOR_STAGE + 1).is_err());
    }

    fn sample_pair() -> GeneratorPair {
        let f = wobble(&int(0), &int(1)).unwrap();
        let g = PlHomeo::from_fractions(&[((0, 1), (0, 1)), ((1, 2), (1, 4)), ((1, 1), (1, 1))])
            .unwrap();
        generator_pair(&GeneratorPairSpec::new(f, g, rat(1, 10))).unwrap()
    }

    #[test]
    fn generator_pair_defining_points() {
        let p = sample_pair();
        assert_eq!(p.g_tilde.eval(&p.y0).unwrap(), p.y0);
        assert_eq!(p.g_tilde.eval(&(&p.y0 / int(3))).unwrap(), &p.y0 * rat(2, 3));
        assert!(p.f.eval(&p.alpha).unwrap() < rat(1, 20));
        assert!(p.g.eval(&p.alpha).unwrap() < rat(1, 20));
        assert_eq!(p.f_tilde.eval(&p.x0).unwrap(), p.x0);
        let xs = p.xs(6).unwrap();
        assert!(xs.windows(2).all(|w| w[0] > w[1]));
        for (m, x) in xs.iter().enumerate() {
            assert_eq!(p.f_tilde.eval(x).unwrap(), *x, "x_{m} is fixed");
        }
        p.check_no_shared_fixed_points(20).unwrap();
        assert!(p.rho_g().unwrap() <= p.g_bound().unwrap());
        assert!(p.g_bound().unwrap() < p.delta);
        assert!(p.f_bound().unwrap() < p.delta);
    }

    #[test]
    fn shared_fixed_point_is_rejected() {
        let f = wobble(&int(0), &int(1)).unwrap();
        assert!(matches!(
            generator_pair(&GeneratorPairSpec::new(f.clone(), f, rat(1, 10))),
            Err(Error::SharedFixedPoint { .. })
        ));
    }
}
