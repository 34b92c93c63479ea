//! Lazily evaluated homeomorphisms and conjugators built by extending a
//! map from a fundamental domain along orbits.

mod conjugator;
mod lazy;

pub use conjugator::{
    bump_conjugator, bump_conjugator_affine, global_conjugator, orbital_signature,
    OrbitalSignature, SignatureToken,
};
pub use lazy::{lazy_eval, Capped, Expr, LazyHomeo, LazyValue, DEFAULT_ITERATION_CAP};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::plcore::{Interval, PlHomeo};
    use crate::rational::{int, rat, Fraction, Rational};

    fn pl(pts: &[(Fraction, Fraction)]) -> PlHomeo {
        PlHomeo::from_fractions(pts).unwrap()
    }

    fn up() -> PlHomeo {
        pl(&[((0, 1), (0, 1)), ((1, 2), (3, 4)), ((1, 1), (1, 1))])
    }

    fn up2() -> PlHomeo {
        pl(&[((0, 1), (0, 1)), ((1, 4), (1, 2)), ((1, 1), (1, 1))])
    }

    fn wobble() -> PlHomeo {
        pl(&[
            ((0, 1), (0, 1)),
            ((1, 4), (1, 3)),
            ((1, 2), (2, 5)),
            ((3, 4), (4, 5)),
            ((1, 1), (1, 1)),
        ])
    }

    fn samples() -> Vec<Rational> {
        (1..40).map(|i| rat(i, 40)).chain([rat(1, 1000), rat(999, 1000)]).collect()
    }

    #[test]
    fn atoms_and_inverses() {
        let f = LazyHomeo::atom(up());
        for x in samples() {
            assert_eq!(f.eval(&x).unwrap(), up().eval(&x).unwrap());
            let y = f.eval(&x).unwrap();
            assert_eq!(f.inverse().eval(&y).unwrap(), x);
        }
        let v = lazy_eval(&f.power(3).unwrap(), &rat(1, 2), 10).unwrap();
        assert_eq!(v.applications, 3);
        assert_eq!(v.value, up().power(3).unwrap().eval(&rat(1, 2)).unwrap());
        assert!(matches!(
            lazy_eval(&f.power(3).unwrap(), &rat(1, 2), 2),
            Err(Error::IterationCapExceeded { cap: 2 })
        ));
        assert!(matches!(f.eval(&int(2)), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn bump_conjugator_example() {
        let h = bump_conjugator_affine(&up(), &up2(), &rat(1, 2), &rat(1, 4)).unwrap();
        assert_eq!(h.eval(&rat(1, 2)).unwrap(), rat(1, 4));
        assert_eq!(h.eval(&rat(3, 4)).unwrap(), rat(1, 2));
        assert_eq!(h.eval(&int(0)).unwrap(), int(0));
        assert_eq!(h.eval(&int(1)).unwrap(), int(1));
        for x in samples() {
            let lhs = h.eval(&up().eval(&x).unwrap()).unwrap();
            let rhs = up2().eval(&h.eval(&x).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            assert_eq!(h.eval_inverse(&h.eval(&x).unwrap()).unwrap(), x);
        }
    }

    #[test]
    fn self_conjugator_is_identity() {
        let h = bump_conjugator_affine(&up(), &up(), &rat(1, 3), &rat(1, 3)).unwrap();
        for x in samples() {
            assert_eq!(h.eval(&x).unwrap(), x);
        }
        let w = global_conjugator(&wobble(), &wobble()).unwrap();
        for x in samples() {
            assert_eq!(w.eval(&x).unwrap(), x);
        }
    }

    #[test]
    fn conjugator_errors() {
        let down = up().inverse();
        assert!(matches!(
            bump_conjugator_affine(&up(), &down, &rat(1, 2), &rat(1, 2)),
            Err(Error::ParityMismatch)
        ));
        assert!(matches!(
            bump_conjugator_affine(&wobble(), &up(), &rat(1, 8), &rat(1, 2)),
            Err(Error::HasInteriorFixedPoint { .. })
        ));
        let bad_h0 = PlHomeo::identity(&Interval::unit());
        assert!(matches!(
            bump_conjugator(&up(), &up2(), &rat(1, 2), &rat(1, 4), &bad_h0),
            Err(Error::DomainMismatch(_))
        ));
        assert!(matches!(
            global_conjugator(&wobble(), &up()),
            Err(Error::OrbitalMismatch(_))
        ));
    }

    #[test]
    fn signatures() {
        let id = PlHomeo::identity(&Interval::unit());
        assert_eq!(orbital_signature(&id).unwrap().to_string(), "[iv]");
        assert_eq!(
            orbital_signature(&wobble()).unwrap().to_string(),
            "[pt, +1, pt, -1, pt, +1, pt]"
        );
        let text = serde_json::to_string(&orbital_signature(&wobble()).unwrap()).unwrap();
        assert_eq!(text, r#"["pt","+1","pt","-1","pt","+1","pt"]"#);
    }

    #[test]
    fn lazy_json_round_trip() {
        let h = global_conjugator(&wobble(), &wobble().compose(&wobble()).unwrap()).unwrap();
        let text = serde_json::to_string(&h).unwrap();
        let back: LazyHomeo = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h);
        for x in samples() {
            assert_eq!(back.eval(&x).unwrap(), h.eval(&x).unwrap());
        }
        let bad = r#"{"op":"power","of":{"op":"atom","map":{"domain":["0","1"],"codomain":["0","2"],"points":[["0","0"],["1","2"]]}},"n":2}"#;
        assert!(serde_json::from_str::<LazyHomeo>(bad).is_err());
    }
}
