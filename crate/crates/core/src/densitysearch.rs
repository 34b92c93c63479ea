//! Reduced words over a few generators, brute-force best approximation of
//! a target map in the sampled ρ metric, and the step-by-step approximation
//! scheme driven by a generator pair.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::acmetric::{variation_of_difference, Partition};
use crate::constructions::{blow_up, BlowUpSpec, GeneratorPair, Site};
use crate::dynamics::push_sup;
use crate::error::{Error, Result};
use crate::orbitmaps::{LazyHomeo, DEFAULT_ITERATION_CAP};
use crate::plcore::{Interval, PlHomeo};
use crate::rational::{self, int, Rational};

/// A generator or its inverse. Ordered generator first, forward before
/// inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(gen: usize, inverse: bool) -> Self {
        Self { gen, inverse }
    }

    pub fn inv(self) -> Self {
        Self {
            gen: self.gen,
            inverse: !self.inverse,
        }
    }

    /// All letters over `gens` generators in order.
    pub fn alphabet(gens: usize) -> Vec<Letter> {
        (0..gens)
            .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
            .collect()
    }
}

/// Generators print as `F`, `G`, `H`, …; inverses in lower case.
pub const MAX_GENERATORS: usize = 21;

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = (b'F' + self.gen as u8) as char;
        if self.inverse {
            write!(f, "{}", c.to_ascii_lowercase())
        } else {
            write!(f, "{c}")
        }
    }
}

/// A freely reduced word; the leftmost letter is applied last.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self(out)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Self(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    /// `self · other`, reduced.
    pub fn concat(&self, other: &Word) -> Word {
        Word::reduce(self.0.iter().chain(&other.0).copied())
    }

    /// `letter^n`, with negative `n` meaning the inverse letter.
    pub fn power(gen: usize, n: i64) -> Word {
        Self(vec![Letter::new(gen, n < 0); n.unsigned_abs() as usize])
    }

    /// Replace generator `i` by `images[i]`.
    pub fn substitute(&self, images: &[Word]) -> Word {
        Word::reduce(self.0.iter().flat_map(|l| {
            let w = &images[l.gen];
            if l.inverse {
                w.inverse().0
            } else {
                w.0.clone()
            }
        }))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "1" {
            return Ok(Word::empty());
        }
        let letters = s
            .chars()
            .map(|c| {
                let up = c.to_ascii_uppercase();
                if !up.is_ascii_uppercase() || up < 'F' {
                    return Err(Error::Parse(format!("bad letter {c:?} in word {s:?}")));
                }
                Ok(Letter::new((up as u8 - b'F') as usize, c.is_ascii_lowercase()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word::reduce(letters))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Reduced words over `gens` generators, level by level in length-then-
/// lexicographic order.
pub struct WordStream {
    alphabet: Vec<Letter>,
    level: Vec<Word>,
    pos: usize,
    len: usize,
    max_len: usize,
}

impl Iterator for WordStream {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.pos == self.level.len() {
            if self.len >= self.max_len {
                return None;
            }
            self.level = extend_level(&self.level, &self.alphabet);
            self.len += 1;
            self.pos = 0;
        }
        self.pos += 1;
        self.level.get(self.pos - 1).cloned()
    }
}

fn extend_level(level: &[Word], alphabet: &[Letter]) -> Vec<Word> {
    let mut next = Vec::with_capacity(level.len() * 3);
    for w in level {
        for l in alphabet {
            if w.0.last() != Some(&l.inv()) {
                let mut v = w.0.clone();
                v.push(*l);
                next.push(Word(v));
            }
        }
    }
    next
}

/// All reduced words over two generators of length at most `max_len`.
pub fn enumerate_words(max_len: usize) -> WordStream {
    enumerate_words_over(2, max_len)
}

pub fn enumerate_words_over(gens: usize, max_len: usize) -> WordStream {
    WordStream {
        alphabet: Letter::alphabet(gens),
        level: vec![Word::empty()],
        pos: 0,
        len: 0,
        max_len,
    }
}

fn letter_map(gens: &[LazyHomeo], l: &Letter) -> Result<LazyHomeo> {
    let g = gens.get(l.gen).ok_or_else(|| {
        Error::BadParameter(format!("word uses generator {} of {}", l.gen, gens.len()))
    })?;
    Ok(if l.inverse { g.inverse() } else { g.clone() })
}

/// The composite named by `w`; the empty word is the identity.
pub fn apply_word(w: &Word, gens: &[LazyHomeo]) -> Result<LazyHomeo> {
    let first = gens
        .first()
        .ok_or_else(|| Error::BadParameter("no generators".into()))?;
    let mut letters = w.0.iter().rev();
    let Some(last) = letters.next() else {
        return Ok(LazyHomeo::identity(first.domain()));
    };
    let mut acc = letter_map(gens, last)?;
    for l in letters {
        acc = letter_map(gens, l)?.compose(&acc)?;
    }
    Ok(acc)
}

/// Best distance among words of length at most `length`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracePoint {
    pub length: usize,
    #[serde(with = "rational::as_str")]
    pub best: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    pub best_word: Word,
    /// Sampled ρ between the best word and the target; a lower bound on
    /// their true distance.
    #[serde(with = "rational::as_str")]
    pub lower: Rational,
    /// Largest sampled `|W − target|`.
    #[serde(with = "rational::as_str")]
    pub uniform: Rational,
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
    pub skipped: u64,
}

/// Search all reduced words up to `max_len` for the one minimizing the
/// sampled ρ to `target` on `partition`.
///
/// Each word's samples come from its suffix's samples with one more
/// generator applied, so every candidate costs one generator evaluation per
/// partition point. Words whose evaluation exceeds `cap` are skipped along
/// with their extensions.
pub fn best_approx(
    gens: &[LazyHomeo],
    target: &PlHomeo,
    max_len: usize,
    partition: &Partition,
    cap: u64,
) -> Result<SearchReport> {
    if gens.is_empty() || gens.len() > MAX_GENERATORS {
        return Err(Error::BadParameter(format!(
            "need 1 to {MAX_GENERATORS} generators, got {}",
            gens.len()
        )));
    }
    let span = partition.interval();
    if !target.domain().contains_interval(&span) {
        return Err(Error::DomainMismatch(format!(
            "partition of {span} is not inside the target's domain {}",
            target.domain()
        )));
    }
    let target_vals: Vec<Rational> = partition
        .points()
        .iter()
        .map(|t| target.eval(t))
        .collect::<Result<_>>()?;
    let alphabet = Letter::alphabet(gens.len());
    let inverses: Vec<LazyHomeo> = gens.iter().map(|g| g.inverse()).collect();

    let score = |vals: &[Rational]| variation_of_difference(vals, &target_vals);
    let mut level: Vec<(Word, Option<Vec<Rational>>)> =
        vec![(Word::empty(), Some(partition.points().to_vec()))];
    let mut best_word = Word::empty();
    let mut best_vals = partition.points().to_vec();
    let mut best = score(&best_vals);
    let mut trace = vec![TracePoint {
        length: 0,
        best: best.clone(),
    }];
    let (mut evaluations, mut skipped) = (1u64, 0u64);

    for length in 1..=max_len {
        let candidates: Vec<(Letter, usize)> = alphabet
            .iter()
            .flat_map(|l| {
                level
                    .iter()
                    .enumerate()
                    .filter(move |(_, (w, _))| w.0.first() != Some(&l.inv()))
                    .map(move |(i, _)| (*l, i))
            })
            .collect();
        let next: Vec<(Word, Option<Vec<Rational>>, Option<Rational>)> = candidates
            .par_iter()
            .map(|(l, i)| {
                let (suffix, vals) = &level[*i];
                let mut letters = Vec::with_capacity(suffix.len() + 1);
                letters.push(*l);
                letters.extend_from_slice(&suffix.0);
                let word = Word(letters);
                let map = if l.inverse { &inverses[l.gen] } else { &gens[l.gen] };
                let vals = vals.as_ref().and_then(|vs| {
                    vs.iter()
                        .map(|v| map.eval_with_cap(v, cap))
                        .collect::<Result<Vec<_>>>()
                        .ok()
                });
                let dist = vals.as_deref().map(score);
                (word, vals, dist)
            })
            .collect();
        for (word, vals, dist) in &next {
            evaluations += 1;
            match dist {
                Some(d) if d < &best => {
                    best = d.clone();
                    best_word = word.clone();
                    best_vals = vals.clone().expect("scored words have samples");
                }
                Some(_) => {}
                None => skipped += 1,
            }
        }
        trace.push(TracePoint {
            length,
            best: best.clone(),
        });
        level = next.into_iter().map(|(w, v, _)| (w, v)).collect();
    }

    let uniform = best_vals
        .iter()
        .zip(&target_vals)
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(Rational::zero);
    Ok(SearchReport {
        best_word,
        lower: best,
        uniform,
        trace,
        evaluations,
        skipped,
    })
}

/// Write `length,best_distance,best_distance_decimal` rows.
pub fn write_trace_csv<W: Write>(report: &SearchReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Parse(format!("csv output failed: {e}"));
    w.write_record(["length", "best_distance", "best_distance_decimal"])
        .map_err(io)?;
    for t in &report.trace {
        w.write_record([
            t.length.to_string(),
            rational::format(&t.best),
            rational::to_decimal(&t.best),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Parse(format!("csv output failed: {e}")))?;
    Ok(())
}

/// Knobs for [`proof_guided_approx`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofParams {
    pub push_budget: usize,
    pub n_cap: u64,
    pub m_cap: u64,
    pub inner_max_len: usize,
    pub inner_cells: usize,
    pub iteration_cap: u64,
}

impl Default for ProofParams {
    fn default() -> Self {
        Self {
            push_budget: 256,
            n_cap: 64,
            m_cap: 1 << 10,
            inner_max_len: 3,
            inner_cells: 32,
            iteration_cap: DEFAULT_ITERATION_CAP,
        }
    }
}

/// Intermediate data of a run that got past the identity shortcut.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofSteps {
    #[serde(with = "rational::as_str")]
    pub gamma: Rational,
    /// `h` with `h(y0) > 1 − γ`.
    pub h_word: Word,
    pub n: u64,
    pub m: i64,
    /// `Φ = h g̃^{-(n+1)} f̃^m g̃^{n+1} h^{-1}`.
    pub phi_word: Word,
    pub phi_fixes_a: bool,
    #[serde(with = "rational::as_str")]
    pub a: Rational,
    #[serde(with = "rational::as_str")]
    pub b: Rational,
    /// Target with `[0, a]` and `[b, 1]` blown up to fixed intervals.
    pub psi: PlHomeo,
    /// Search over the conjugated tile generators on `[a, b]`.
    pub inner: SearchReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofReport {
    /// The approximating word in `F = f̃`, `G = g̃`.
    pub word: Word,
    /// Exact `ρ(target, ψ)`.
    #[serde(with = "rational::as_str")]
    pub rho_target_psi: Rational,
    /// Exact `2(a + 1 − b)`, bounding `ρ` of the word and `ψ` off `[a, b]`.
    #[serde(with = "rational::as_str")]
    pub outer_budget: Rational,
    /// True when `outer_budget < 4γ ≤ ε/3` holds exactly.
    pub outer_certified: bool,
    /// Sampled `ρ_a^b(word, ψ)`.
    #[serde(with = "rational::as_str")]
    pub middle: Rational,
    /// The middle estimate is at least `ε/3`.
    pub shortfall: bool,
    pub steps: Option<ProofSteps>,
}

/// Smallest `γ = min(1/2, ε/12) / 2^j` whose blow-up estimate
/// `2(γ + φ(γ)) + 2(γ + 1 − φ(1 − γ))` is below `ε/3`.
pub fn choose_gamma(target: &PlHomeo, epsilon: &Rational) -> Result<Rational> {
    let third = epsilon / int(3);
    let mut gamma = (epsilon / int(12)).min(Rational::new(1.into(), 2.into())) / int(2);
    for _ in 0..256 {
        let left = &gamma + target.eval(&gamma)?;
        let right = &gamma + int(1) - target.eval(&(int(1) - &gamma))?;
        if (left + right) * int(2) < third {
            return Ok(gamma);
        }
        gamma /= int(2);
    }
    Err(Error::NoEscape { step: 1, cap: 256 })
}

/// Approximate `target` by a word in `f̃, g̃` following the reduction to
/// the tile generators: pick `γ`, push `y0` above `1 − γ`, localize with
/// `Φ`, then search words in the conjugated tile maps on `[a, b]`.
pub fn proof_guided_approx(
    pair: &GeneratorPair,
    target: &PlHomeo,
    epsilon: &Rational,
    params: &ProofParams,
) -> Result<ProofReport> {
    if !epsilon.is_positive() {
        return Err(Error::BadParameter("epsilon must be positive".into()));
    }
    if target.domain() != Interval::unit() || !target.is_self_map() {
        return Err(Error::DomainMismatch("target must be a self-map of [0, 1]".into()));
    }
    let third = epsilon / int(3);
    if target.is_identity() {
        return Ok(ProofReport {
            word: Word::empty(),
            rho_target_psi: Rational::zero(),
            outer_budget: Rational::zero(),
            outer_certified: true,
            middle: Rational::zero(),
            shortfall: false,
            steps: None,
        });
    }
    let cap = params.iteration_cap;
    let gens = [pair.f_tilde.clone(), LazyHomeo::atom(pair.g_tilde.clone())];

    let gamma = choose_gamma(target, epsilon)?;

    let capped = [gens[0].with_cap(cap), gens[1].with_cap(cap)];
    let push = push_sup(&capped, &pair.y0, &(int(1) - &gamma), params.push_budget)
        .map_err(|e| match e {
            Error::BudgetExhausted { .. } => Error::PushFailed(e.to_string()),
            other => other,
        })?;
    let h_word = Word::reduce(
        push.moves
            .iter()
            .rev()
            .map(|m| Letter::new(m.generator, m.inverse)),
    );
    let h = apply_word(&h_word, &gens)?;

    let mut n = 0u64;
    let mut x_n = pair.x0.clone();
    let mut x_next = pair.g_tilde.eval_inverse(&x_n)?;
    while h.eval_with_cap(&x_next, cap)? >= gamma {
        n += 1;
        if n > params.n_cap {
            return Err(Error::NoEscape {
                step: 3,
                cap: params.n_cap,
            });
        }
        x_n = x_next;
        x_next = pair.g_tilde.eval_inverse(&x_n)?;
    }

    let start = pair.g_tilde.eval(&pair.x0)?;
    let ascend = pair.f_tilde.eval_with_cap(&start, cap)? > start;
    let mut z = start;
    let mut steps = 0u64;
    while z <= pair.y0 {
        steps += 1;
        if steps > params.m_cap {
            return Err(Error::NoEscape {
                step: 4,
                cap: params.m_cap,
            });
        }
        z = if ascend {
            pair.f_tilde.eval_with_cap(&z, cap)?
        } else {
            pair.f_tilde.eval_inverse_with_cap(&z, cap)?
        };
    }
    let m = if ascend { steps as i64 } else { -(steps as i64) };

    let lift = (n + 1) as i64;
    let core = Word::power(1, -lift)
        .concat(&Word::power(0, m))
        .concat(&Word::power(1, lift));
    let phi_word = h_word.concat(&core).concat(&h_word.inverse());
    let phi = apply_word(&phi_word, &gens)?;
    let a = h.eval_with_cap(&x_next, cap)?;
    let phi_fixes_a = phi.eval_with_cap(&a, cap)? == a;
    let b = phi.eval_with_cap(&h.eval_with_cap(&x_n, cap)?, cap)?;

    let psi = blow_up(&BlowUpSpec {
        map: target.clone(),
        sites: vec![
            Site::new(int(0), int(0), a.clone()),
            Site::new(b.clone(), int(1), int(1)),
        ],
    })?
    .psi;
    let rho_target_psi = crate::acmetric::rho_exact(target, &psi, &int(0), &int(1))?;

    let conj = phi_word.concat(&h_word);
    let tile_words: Vec<Word> = (0..pair.phis.len() as i64)
        .map(|i| {
            conj.concat(&Word::power(1, i))
                .concat(&Word::power(0, 1))
                .concat(&Word::power(1, -i))
                .concat(&conj.inverse())
        })
        .collect();
    let tile_gens = tile_words
        .iter()
        .map(|w| apply_word(w, &gens))
        .collect::<Result<Vec<_>>>()?;
    let window = Interval::new(a.clone(), b.clone())?;
    let inner = best_approx(
        &tile_gens,
        &psi.restrict(&a, &b)?,
        params.inner_max_len,
        &Partition::uniform(&window, params.inner_cells)?,
        cap,
    )?;

    let word = inner.best_word.substitute(&tile_words);
    let outer_budget = (&a + int(1) - &b) * int(2);
    let outer_certified = outer_budget < &gamma * int(4) && &gamma * int(4) <= third;
    let middle = inner.lower.clone();
    Ok(ProofReport {
        word,
        rho_target_psi,
        outer_budget,
        outer_certified,
        shortfall: middle >= third,
        middle,
        steps: Some(ProofSteps {
            gamma,
            h_word,
            n,
            m,
            phi_word,
            phi_fixes_a,
            a,
            b,
            psi,
            inner,
        }),
    })
}

impl ProofReport {
    /// `true` when the certified parts and the sampled middle term together
    /// stay below `epsilon`.
    pub fn within(&self, epsilon: &Rational) -> bool {
        &self.rho_target_psi + &self.outer_budget + &self.middle < *epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{generator_pair, wobble, GeneratorPairSpec};
    use crate::rational::rat;

    #[test]
    fn word_counts() {
        let words: Vec<Word> = enumerate_words(3).collect();
        assert_eq!(words[0], Word::empty());
        for (len, count) in [(0, 1), (1, 4), (2, 12), (3, 36)] {
            assert_eq!(words.iter().filter(|w| w.len() == len).count(), count);
        }
        assert_eq!(enumerate_words(0).count(), 1);
        let order: Vec<String> = words[1..5].iter().map(|w| w.to_string()).collect();
        assert_eq!(order, ["F", "f", "G", "g"]);
        assert!(words.windows(2).all(|w| (w[0].len(), &w[0]) < (w[1].len(), &w[1])));
    }

    #[test]
    fn word_text_and_reduction() {
        let w: Word = "FGgf".parse().unwrap();
        assert!(w.is_empty());
        let w: Word = "FGh".parse().unwrap();
        assert_eq!(w.to_string(), "FGh");
        assert_eq!(w.inverse().to_string(), "Hgf");
        assert!("F2".parse::<Word>().is_err());
        assert_eq!(Word::power(1, -2).to_string(), "gg");
    }

    fn gens() -> Vec<LazyHomeo> {
        let f = wobble(&int(0), &int(1)).unwrap();
        let g = PlHomeo::from_fractions(&[((0, 1), (0, 1)), ((1, 2), (1, 4)), ((1, 1), (1, 1))])
            .unwrap();
        vec![LazyHomeo::atom(f), LazyHomeo::atom(g)]
    }

    #[test]
    fn apply_word_semantics() {
        let g = gens();
        let x = rat(3, 7);
        let fg = apply_word(&"FG".parse().unwrap(), &g).unwrap();
        assert_eq!(fg.eval(&x).unwrap(), g[0].eval(&g[1].eval(&x).unwrap()).unwrap());
        assert_eq!(apply_word(&Word::empty(), &g).unwrap().eval(&x).unwrap(), x);
    }

    #[test]
    fn search_on_identity_target() {
        let p = Partition::uniform(&Interval::unit(), 8).unwrap();
        let id = PlHomeo::identity(&Interval::unit());
        let r = best_approx(&gens(), &id, 3, &p, DEFAULT_ITERATION_CAP).unwrap();
        assert!(r.best_word.is_empty());
        assert_eq!(r.lower, int(0));
        assert_eq!(r.trace.len(), 4);
        assert_eq!(r.evaluations, 1 + 4 + 12 + 36);
    }

    #[test]
    fn search_finds_a_generator() {
        let p = Partition::uniform(&Interval::unit(), 16).unwrap();
        let target = gens()[1].as_atom().unwrap().inverse();
        let r = best_approx(&gens(), &target, 2, &p, DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(r.best_word.to_string(), "g");
        assert_eq!(r.lower, int(0));
        assert!(r.trace.windows(2).all(|t| t[1].best <= t[0].best));
    }

    #[test]
    fn proof_guided_identity_shortcut() {
        let f = wobble(&int(0), &int(1)).unwrap();
        let g = gens()[1].as_atom().unwrap().clone();
        let pair = generator_pair(&GeneratorPairSpec::new(f, g, rat(1, 10))).unwrap();
        let r = proof_guided_approx(
            &pair,
            &PlHomeo::identity(&Interval::unit()),
            &rat(1, 2),
            &ProofParams::default(),
        )
        .unwrap();
        assert!(r.word.is_empty());
        assert_eq!(r.outer_budget, int(0));
        assert_eq!(r.middle, int(0));
    }
}
