//! Seeded random instances. Every generator takes the RNG explicitly, so a
//! seed fixes the whole instance stream.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::Parity;
use crate::error::Result;
use crate::orbitmaps::bump_conjugator_affine;
use crate::plcore::{Interval, PlHomeo};
use crate::rational::{int, rat, Rational};

/// Grid used for breakpoint coordinates.
pub const GRID: i64 = 64;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grid_points<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<i64> {
    let mut v: Vec<i64> = sample(rng, (GRID - 1) as usize, count)
        .into_iter()
        .map(|i| i as i64 + 1)
        .collect();
    v.sort_unstable();
    v
}

/// Endpoint-fixing map of `[0, 1]` with `interior` breakpoints on the
/// `1/64` grid in both coordinates.
pub fn random_homeo<R: Rng + ?Sized>(rng: &mut R, interior: usize) -> PlHomeo {
    let interior = interior.min((GRID - 1) as usize);
    let xs = grid_points(rng, interior);
    let ys = grid_points(rng, interior);
    let mut pts = vec![(int(0), int(0))];
    pts.extend(xs.into_iter().zip(ys).map(|(x, y)| (rat(x, GRID), rat(y, GRID))));
    pts.push((int(1), int(1)));
    PlHomeo::from_points(pts).expect("grid points are strictly increasing")
}

/// Endpoint-fixing map of `domain` whose slopes all lie in `[4/9, 9/4]`.
pub fn random_tame_homeo<R: Rng + ?Sized>(rng: &mut R, interior: usize, domain: &Interval) -> PlHomeo {
    let pieces = interior + 1;
    let widths: Vec<i64> = (0..pieces).map(|_| rng.random_range(1..=8)).collect();
    // slopes in [2/3, 3/2] before normalization
    let slopes: Vec<Rational> = (0..pieces).map(|_| rat(rng.random_range(8..=18), 12)).collect();
    let total_x: i64 = widths.iter().sum();
    let rises: Vec<Rational> = widths
        .iter()
        .zip(&slopes)
        .map(|(w, s)| s * int(*w))
        .collect();
    let total_y: Rational = rises.iter().sum();
    let (mut x, mut y) = (int(0), int(0));
    let mut pts = vec![(x.clone(), y.clone())];
    for (w, r) in widths.iter().zip(&rises) {
        x += rat(*w, total_x);
        y += r / &total_y;
        pts.push((x.clone(), y.clone()));
    }
    PlHomeo::from_points(pts)
        .expect("positive increments")
        .affine_conjugate(domain)
        .expect("unit self-map")
}

/// Map of `[0, 1]` fixing only the endpoints, with the given nonzero
/// parity and endpoint slopes at least `5/4` away from 1.
pub fn random_bump<R: Rng + ?Sized>(rng: &mut R, parity: Parity, interior: usize) -> PlHomeo {
    assert!(parity != Parity::Zero, "a bump has nonzero parity");
    let interior = interior.max(1);
    loop {
        let h = random_homeo(rng, interior);
        let pts = h.points();
        let above = |p: &(Rational, Rational)| Parity::of(&p.1, &p.0) == parity;
        if !pts[1..pts.len() - 1].iter().all(above) {
            continue;
        }
        let (s0, s1) = (h.as_function().slope(0), h.as_function().slope(pts.len() - 2));
        let steep = |s: &Rational| s >= &rat(5, 4) || s <= &rat(4, 5);
        if steep(&s0) && steep(&s1) {
            return h;
        }
    }
}

/// Nonzero parities of the given length.
pub fn random_parities<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Parity> {
    (0..len)
        .map(|_| {
            if rng.random_bool(0.5) {
                Parity::Positive
            } else {
                Parity::Negative
            }
        })
        .collect()
}

/// Self-map of `[0, 1]` with finitely many isolated fixed points whose
/// orbitals carry the given parities from left to right.
pub fn random_signature_map<R: Rng + ?Sized>(rng: &mut R, parities: &[Parity]) -> PlHomeo {
    let cuts = grid_points(rng, parities.len().saturating_sub(1));
    let mut ends: Vec<Rational> = vec![int(0)];
    ends.extend(cuts.into_iter().map(|c| rat(c, GRID)));
    ends.push(int(1));
    let pieces: Vec<PlHomeo> = parities
        .iter()
        .zip(ends.windows(2))
        .map(|(p, w)| {
            let span = Interval::new(w[0].clone(), w[1].clone()).expect("sorted grid points");
            let interior = rng.random_range(1..=3);
            random_bump(rng, *p, interior)
                .affine_conjugate(&span)
                .expect("unit self-map")
        })
        .collect();
    PlHomeo::paste(&pieces).expect("pieces abut")
}

/// `k ∘ f ∘ k^{-1}`.
pub fn conjugate_by(f: &PlHomeo, k: &PlHomeo) -> Result<PlHomeo> {
    k.compose(&f.compose(&k.inverse())?)
}

/// Points of `interval` with random denominators up to 1000.
pub fn random_points<R: Rng + ?Sized>(rng: &mut R, interval: &Interval, count: usize) -> Vec<Rational> {
    (0..count)
        .map(|_| {
            let d: i64 = rng.random_range(2..=1000);
            let n: i64 = rng.random_range(0..=d);
            interval.lo() + interval.len() * rat(n, d)
        })
        .collect()
}

/// A bump pair of equal parity on `[0, 1]` together with its affine-based
/// conjugator, as used by the conjugacy experiments.
pub fn random_bump_instance<R: Rng + ?Sized>(
    rng: &mut R,
) -> Result<(PlHomeo, PlHomeo, crate::orbitmaps::LazyHomeo)> {
    let parity = random_parities(rng, 1)[0];
    let (nf, ng) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let f = random_bump(rng, parity, nf);
    let g = random_bump(rng, parity, ng);
    let x0 = rat(rng.random_range(1..GRID), GRID);
    let y0 = rat(rng.random_range(1..GRID), GRID);
    let h = bump_conjugator_affine(&f, &g, &x0, &y0)?;
    Ok((f, g, h))
}
