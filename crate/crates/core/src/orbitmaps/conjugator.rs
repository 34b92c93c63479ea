use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::lazy::{fundamental_domain, Expr, LazyHomeo};
use crate::dynamics::{fixed_set, orbitals, FixedPiece, Parity};
use crate::error::{Error, Result};
use crate::plcore::PlHomeo;
use crate::rational::{self, Rational};

/// Conjugator `h: [a, b] -> [c, d]` with `h ∘ f = g ∘ h`, for bumps `f` on
/// `[a, b]` and `g` on `[c, d]` of equal parity, extending `h0` from the
/// fundamental domain of `f` at `x0` to the one of `g` at `y0` along orbits.
pub fn bump_conjugator(
    f: &PlHomeo,
    g: &PlHomeo,
    x0: &Rational,
    y0: &Rational,
    h0: &PlHomeo,
) -> Result<LazyHomeo> {
    check_base_point(f, x0)?;
    check_base_point(g, y0)?;
    let (df, pf) = fundamental_domain(f, x0)?;
    let (dg, pg) = fundamental_domain(g, y0)?;
    if pf != pg {
        return Err(Error::ParityMismatch);
    }
    if h0.domain() != df || h0.codomain() != dg {
        return Err(Error::DomainMismatch(format!(
            "h0 must map {df} onto {dg}, got {} -> {}",
            h0.domain(),
            h0.codomain()
        )));
    }
    LazyHomeo::from_expr(Expr::OrbitExtension {
        f: f.clone(),
        g: g.clone(),
        h0: h0.clone(),
    })
}

/// [`bump_conjugator`] with `h0` the affine map between fundamental domains.
pub fn bump_conjugator_affine(
    f: &PlHomeo,
    g: &PlHomeo,
    x0: &Rational,
    y0: &Rational,
) -> Result<LazyHomeo> {
    check_base_point(f, x0)?;
    check_base_point(g, y0)?;
    let (df, pf) = fundamental_domain(f, x0)?;
    let (dg, pg) = fundamental_domain(g, y0)?;
    if pf != pg {
        return Err(Error::ParityMismatch);
    }
    bump_conjugator(f, g, x0, y0, &PlHomeo::affine(&df, &dg))
}

fn check_base_point(f: &PlHomeo, x0: &Rational) -> Result<()> {
    let dom = f.domain();
    if dom.lo() < x0 && x0 < dom.hi() {
        Ok(())
    } else {
        Err(Error::BadParameter(format!(
            "base point {} must lie inside {}",
            rational::format(x0),
            dom
        )))
    }
}

/// One token of an orbital signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignatureToken {
    Point,
    FixedInterval,
    Orbital(Parity),
}

impl fmt::Display for SignatureToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignatureToken::Point => f.write_str("pt"),
            SignatureToken::FixedInterval => f.write_str("iv"),
            SignatureToken::Orbital(p) => write!(f, "{p}"),
        }
    }
}

impl std::str::FromStr for SignatureToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pt" => Ok(SignatureToken::Point),
            "iv" => Ok(SignatureToken::FixedInterval),
            "+1" => Ok(SignatureToken::Orbital(Parity::Positive)),
            "-1" => Ok(SignatureToken::Orbital(Parity::Negative)),
            _ => Err(Error::Parse(format!("unknown signature token {s:?}"))),
        }
    }
}

impl Serialize for SignatureToken {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SignatureToken {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Left-to-right structure of `Fix(f)` and its complement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrbitalSignature(pub Vec<SignatureToken>);

impl fmt::Display for OrbitalSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

enum Part {
    Fixed(FixedPiece),
    Orbital(crate::dynamics::Orbital),
}

fn decompose(f: &PlHomeo) -> Result<Vec<Part>> {
    let pieces = fixed_set(f)?.pieces();
    let mut orbs = orbitals(f)?.into_iter();
    let mut parts = Vec::new();
    for (i, piece) in pieces.iter().enumerate() {
        parts.push(Part::Fixed(piece.clone()));
        if i + 1 < pieces.len() {
            parts.push(Part::Orbital(orbs.next().expect("one orbital per gap")));
        }
    }
    Ok(parts)
}

pub fn orbital_signature(f: &PlHomeo) -> Result<OrbitalSignature> {
    Ok(OrbitalSignature(
        decompose(f)?
            .iter()
            .map(|p| match p {
                Part::Fixed(FixedPiece::Point(_)) => SignatureToken::Point,
                Part::Fixed(FixedPiece::Interval(_)) => SignatureToken::FixedInterval,
                Part::Orbital(o) => SignatureToken::Orbital(o.parity),
            })
            .collect(),
    ))
}

/// A conjugator `h` with `h ∘ f = g ∘ h` for two self-maps with equal
/// orbital signatures: affine on matching fixed intervals and an orbit
/// extension on each matching pair of orbitals, based at the midpoints.
pub fn global_conjugator(f: &PlHomeo, g: &PlHomeo) -> Result<LazyHomeo> {
    let (sf, sg) = (orbital_signature(f)?, orbital_signature(g)?);
    if sf != sg {
        return Err(Error::OrbitalMismatch(format!("{sf} vs {sg}")));
    }
    let mut pieces = Vec::new();
    for (pf, pg) in decompose(f)?.into_iter().zip(decompose(g)?) {
        match (pf, pg) {
            (Part::Fixed(FixedPiece::Interval(a)), Part::Fixed(FixedPiece::Interval(b))) => {
                pieces.push(LazyHomeo::atom(PlHomeo::affine(&a, &b)));
            }
            (Part::Fixed(_), Part::Fixed(_)) => {}
            (Part::Orbital(a), Part::Orbital(b)) => {
                let fa = f.restrict(a.span.lo(), a.span.hi())?;
                let gb = g.restrict(b.span.lo(), b.span.hi())?;
                pieces.push(bump_conjugator_affine(
                    &fa,
                    &gb,
                    &a.span.midpoint(),
                    &b.span.midpoint(),
                )?);
            }
            _ => unreachable!("equal signatures align parts"),
        }
    }
    LazyHomeo::pasted(pieces)
}
