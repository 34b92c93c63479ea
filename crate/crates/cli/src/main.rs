mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use ac_homeo::acmetric::{
    rho_exact, rho_upper_bound, singular_mass, uniform_dist, write_sweep_csv, SweepRow,
};
use ac_homeo::constructions::{
    blow_up, cantor_stair, generator_pair, mix, sawtooth, wobble, BlowUpSpec, GeneratorPair,
    GeneratorPairSpec,
};
use ac_homeo::densitysearch::{
    best_approx, proof_guided_approx, write_trace_csv, ProofParams,
};
use ac_homeo::dynamics::{fixed_set, genericity_report, orbitals, FixedSet, Orbital};
use ac_homeo::orbitmaps::{
    bump_conjugator_affine, global_conjugator, orbital_signature, LazyHomeo, OrbitalSignature,
    DEFAULT_ITERATION_CAP,
};
use ac_homeo::random::{random_homeo, random_parities, random_points, random_signature_map, seeded};
use ac_homeo::rational::{self, int, Rational};
use ac_homeo::{Error, Interval, PlHomeo};
use clap::{Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::io::{context, load, load_pl, parse_rational, AnyMap, CliError, CliResult, Sink};

/// Exact computations with piecewise-linear interval homeomorphisms.
///
/// Maps are read as JSON, either inline or from a file path. Rationals are
/// written as "p/q" strings with a decimal companion field.
#[derive(Parser)]
#[command(name = "achomeo", version)]
struct Cli {
    /// Cap on generator applications per lazy evaluation.
    #[arg(long, global = true, env = "ACHOMEO_ITERATION_CAP", default_value_t = DEFAULT_ITERATION_CAP)]
    iteration_cap: u64,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact ρ distance between two maps, with the uniform distance.
    Rho {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        /// Left end of the window (defaults to the domain's).
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
    },
    /// Fixed-point set.
    Fix {
        #[arg(long)]
        f: String,
    },
    /// Orbitals with parities and the orbital signature.
    Orbitals {
        #[arg(long)]
        f: String,
    },
    /// The three genericity properties with witnesses.
    GenericCheck {
        #[arg(long)]
        f: String,
    },
    /// CSV of ρ(sawtooth(n), id) against 2 − 4/n.
    SawtoothSweep {
        #[arg(long, default_value_t = 2)]
        n_min: u32,
        #[arg(long)]
        n_max: u32,
    },
    /// The four-breakpoint map with parities +, −, + on [a, b].
    Wobble {
        #[arg(long, default_value = "0")]
        a: String,
        #[arg(long, default_value = "1")]
        b: String,
    },
    /// Blow fixed points up to fixed intervals.
    Blowup {
        /// JSON object with `map` and `sites`.
        #[arg(long)]
        spec: String,
    },
    /// CSV of ρ(mix(k), mix(k+1)) and the uniform distance, column n is k.
    CantorSweep {
        #[arg(long, default_value_t = 0)]
        k_min: u32,
        #[arg(long)]
        k_max: u32,
    },
    /// Conjugator between two maps with equal orbital signatures.
    Conjugate {
        /// Omit both maps to draw a random matched pair from the seed.
        #[arg(long, requires = "g")]
        f: Option<String>,
        #[arg(long, requires = "f")]
        g: Option<String>,
        /// Treat f and g as bumps and extend the affine map between the
        /// fundamental domains at these base points.
        #[arg(long, requires = "y0")]
        x0: Option<String>,
        #[arg(long, requires = "x0")]
        y0: Option<String>,
        /// Points at which to report h and check h∘f = g∘h.
        #[arg(long, value_delimiter = ',')]
        at: Vec<String>,
        /// Additional random check points.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Orbital count of a random pair.
        #[arg(long, default_value_t = 3)]
        orbitals: usize,
    },
    /// Build the approximating generator pair (f̃, g̃).
    Generators {
        /// JSON object with `f`, `g`, `delta` and optional overrides.
        #[arg(long, conflicts_with = "seed")]
        spec: Option<String>,
        /// Draw f and g from this seed instead.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "1/10")]
        delta: String,
        /// Tiles checked for common fixed points.
        #[arg(long, default_value_t = 20)]
        depth: usize,
    },
    /// Brute-force best word in f̃, g̃ for a target in sampled ρ.
    Search {
        /// Generator pair JSON, as written by `generators`.
        #[arg(long)]
        pair: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 4)]
        max_word_len: usize,
        /// Uniform search partition cells.
        #[arg(long, default_value_t = 16)]
        cells: usize,
        #[arg(long)]
        trace_csv: Option<PathBuf>,
    },
    /// Approximate a target following the generator-pair reduction.
    ProofApprox {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = ProofParams::default().inner_max_len)]
        max_word_len: usize,
        #[arg(long, default_value_t = ProofParams::default().inner_cells)]
        cells: usize,
        #[arg(long, default_value_t = ProofParams::default().push_budget)]
        push_budget: usize,
        #[arg(long, default_value_t = ProofParams::default().n_cap)]
        n_cap: u64,
        #[arg(long, default_value_t = ProofParams::default().m_cap)]
        m_cap: u64,
    },
    /// Rise over mesh cells steeper than a threshold.
    SingularMass {
        /// A piecewise-linear or lazy map.
        #[arg(long, required_unless_present = "cantor")]
        f: Option<String>,
        /// Use the stage-k Cantor staircase instead.
        #[arg(long, conflicts_with = "f")]
        cantor: Option<u32>,
        #[arg(long)]
        mesh: String,
        #[arg(long, default_value = "64")]
        threshold: String,
    },
}

#[derive(Serialize)]
struct RhoOut {
    #[serde(with = "rational::as_str")]
    a: Rational,
    #[serde(with = "rational::as_str")]
    b: Rational,
    #[serde(with = "rational::as_str")]
    rho: Rational,
    #[serde(with = "rational::as_str")]
    upper_bound: Rational,
    #[serde(with = "rational::as_str")]
    uniform: Rational,
}

#[derive(Serialize)]
struct FixOut {
    fixed_set: FixedSet,
    #[serde(with = "rational::as_str")]
    measure: Rational,
}

#[derive(Serialize)]
struct OrbitalsOut {
    signature: OrbitalSignature,
    orbitals: Vec<Orbital>,
}

#[derive(Serialize)]
struct BlowupOut {
    psi: PlHomeo,
    #[serde(with = "rational::as_str")]
    bound: Rational,
    #[serde(with = "rational::as_str")]
    rho: Rational,
}

#[derive(Serialize)]
struct CheckPoint {
    #[serde(with = "rational::as_str")]
    x: Rational,
    #[serde(with = "rational::as_str")]
    h: Rational,
    holds: bool,
}

#[derive(Serialize)]
struct ConjugateOut {
    f: PlHomeo,
    g: PlHomeo,
    signature: OrbitalSignature,
    conjugator: LazyHomeo,
    checks: Vec<CheckPoint>,
    identity_holds: bool,
}

#[derive(Serialize)]
struct GeneratorsOut {
    pair: GeneratorPair,
    #[serde(with = "rational::as_str")]
    rho_g: Rational,
    #[serde(with = "rational::as_str")]
    g_bound: Rational,
    #[serde(with = "rational::as_str")]
    f_bound: Rational,
    checked_depth: usize,
}

#[derive(Serialize)]
struct MassOut {
    #[serde(with = "rational::as_str")]
    mesh: Rational,
    #[serde(with = "rational::as_str")]
    threshold: Rational,
    #[serde(with = "rational::as_str")]
    mass: Rational,
}

fn unit_window(f: &PlHomeo, a: Option<String>, b: Option<String>) -> CliResult<(Rational, Rational)> {
    let dom = f.domain();
    let a = a.map(|t| parse_rational(&t, "--a")).transpose()?;
    let b = b.map(|t| parse_rational(&t, "--b")).transpose()?;
    Ok((a.unwrap_or_else(|| dom.lo().clone()), b.unwrap_or_else(|| dom.hi().clone())))
}

/// Accepts a bare generator pair or the object written by `generators`.
fn load_pair(arg: &str) -> CliResult<GeneratorPair> {
    let mut value: Value = load(arg, "generator pair")?;
    if let Some(inner) = value.get_mut("pair") {
        value = inner.take();
    }
    serde_json::from_value(value)
        .map_err(|e| CliError::Core(Error::Parse(format!("generator pair: {e}"))))
}

fn seeded_pair(seed: u64, delta: &Rational) -> CliResult<GeneratorPair> {
    let mut rng = seeded(seed);
    for _ in 0..100 {
        let (nf, ng) = (rng.random_range(2..=5), rng.random_range(2..=5));
        let (f, g) = (random_homeo(&mut rng, nf), random_homeo(&mut rng, ng));
        match generator_pair(&GeneratorPairSpec::new(f, g, delta.clone())) {
            Err(Error::SharedFixedPoint { .. }) => continue,
            other => return Ok(other?),
        }
    }
    Err(CliError::Core(Error::BadParameter(format!(
        "seed {seed} gave no usable pair in 100 draws"
    ))))
}

fn sweep(sink: &Sink, rows: CliResult<Vec<SweepRow>>) -> CliResult<()> {
    let rows = rows?;
    write_sweep_csv(&rows, sink.writer()?)?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let cap = cli.iteration_cap;
    let sink = Sink::new(cli.out);
    match cli.command {
        Command::Rho { f, g, a, b } => {
            let (f, g) = (load_pl(&f, "--f")?, load_pl(&g, "--g")?);
            let (a, b) = unit_window(&f, a, b)?;
            sink.json(&RhoOut {
                rho: rho_exact(&f, &g, &a, &b)?,
                upper_bound: rho_upper_bound(&f, &g, &a, &b)?,
                uniform: uniform_dist(&f, &g)?,
                a,
                b,
            })
        }
        Command::Fix { f } => {
            let fixed = fixed_set(&load_pl(&f, "--f")?)?;
            sink.json(&FixOut {
                measure: fixed.measure(),
                fixed_set: fixed,
            })
        }
        Command::Orbitals { f } => {
            let f = load_pl(&f, "--f")?;
            sink.json(&OrbitalsOut {
                signature: orbital_signature(&f)?,
                orbitals: orbitals(&f)?,
            })
        }
        Command::GenericCheck { f } => sink.json(&genericity_report(&load_pl(&f, "--f")?)?),
        Command::SawtoothSweep { n_min, n_max } => {
            let id = PlHomeo::identity(&Interval::unit());
            let rows = (n_min.max(1)..=n_max)
                .into_par_iter()
                .map(|n| {
                    let s = sawtooth(n)?;
                    Ok(SweepRow {
                        n: n as u64,
                        rho: rho_exact(&s, &id, &int(0), &int(1))?,
                        uniform: uniform_dist(&s, &id)?,
                        bound: int(2) - Rational::new(4.into(), n.into()),
                    })
                })
                .collect::<ac_homeo::Result<Vec<_>>>();
            sweep(&sink, rows.map_err(CliError::from))
        }
        Command::Wobble { a, b } => {
            sink.json(&wobble(&parse_rational(&a, "--a")?, &parse_rational(&b, "--b")?)?)
        }
        Command::Blowup { spec } => {
            let spec: BlowUpSpec = load(&spec, "--spec")?;
            let up = blow_up(&spec)?;
            let dom = spec.map.domain();
            sink.json(&BlowupOut {
                rho: rho_exact(&spec.map, &up.psi, dom.lo(), dom.hi())?,
                psi: up.psi,
                bound: up.bound,
            })
        }
        Command::CantorSweep { k_min, k_max } => {
            let rows = (k_min..=k_max)
                .into_par_iter()
                .map(|k| {
                    let (a, b) = (mix(k)?, mix(k + 1)?);
                    Ok(SweepRow {
                        n: k as u64,
                        rho: rho_exact(&a, &b, &int(0), &int(1))?,
                        uniform: uniform_dist(&a, &b)?,
                        bound: rational::dyadic(k),
                    })
                })
                .collect::<ac_homeo::Result<Vec<_>>>();
            sweep(&sink, rows.map_err(CliError::from))
        }
        Command::Conjugate { f, g, x0, y0, at, samples, seed, orbitals } => {
            let mut rng = seeded(seed);
            let (f, g) = match (f, g) {
                (Some(f), Some(g)) => (load_pl(&f, "--f")?, load_pl(&g, "--g")?),
                _ => {
                    let parities = random_parities(&mut rng, orbitals.max(1));
                    let f = random_signature_map(&mut rng, &parities);
                    (f, random_signature_map(&mut rng, &parities))
                }
            };
            let h = match (x0, y0) {
                (Some(x0), Some(y0)) => bump_conjugator_affine(
                    &f,
                    &g,
                    &parse_rational(&x0, "--x0")?,
                    &parse_rational(&y0, "--y0")?,
                )?,
                _ => global_conjugator(&f, &g)?,
            };
            let mut xs = at
                .iter()
                .map(|t| parse_rational(t, "--at"))
                .collect::<CliResult<Vec<_>>>()?;
            xs.extend(random_points(&mut rng, &f.domain(), samples));
            let checks = xs
                .into_par_iter()
                .map(|x| {
                    let hx = h.eval_with_cap(&x, cap)?;
                    let holds = h.eval_with_cap(&f.eval(&x)?, cap)? == g.eval(&hx)?;
                    Ok(CheckPoint { x, h: hx, holds })
                })
                .collect::<ac_homeo::Result<Vec<_>>>()?;
            sink.json(&ConjugateOut {
                signature: orbital_signature(&f)?,
                identity_holds: checks.iter().all(|c| c.holds),
                f,
                g,
                conjugator: h,
                checks,
            })
        }
        Command::Generators { spec, seed, delta, depth } => {
            let pair = match (spec, seed) {
                (Some(spec), _) => generator_pair(&load::<GeneratorPairSpec>(&spec, "--spec")?)?,
                (None, Some(seed)) => seeded_pair(seed, &parse_rational(&delta, "--delta")?)?,
                (None, None) => {
                    return Err(CliError::Core(Error::BadParameter(
                        "give --spec or --seed".into(),
                    )))
                }
            };
            pair.check_no_shared_fixed_points(depth)?;
            sink.json(&GeneratorsOut {
                rho_g: pair.rho_g()?,
                g_bound: pair.g_bound()?,
                f_bound: pair.f_bound()?,
                checked_depth: depth,
                pair,
            })
        }
        Command::Search { pair, target, max_word_len, cells, trace_csv } => {
            let pair = load_pair(&pair)?;
            let target = load_pl(&target, "--target")?;
            let gens = [pair.f_tilde.clone(), LazyHomeo::atom(pair.g_tilde.clone())];
            let grid = context(
                ac_homeo::acmetric::Partition::uniform(&target.domain(), cells),
                "--cells",
            )?;
            let report = best_approx(&gens, &target, max_word_len, &grid, cap)?;
            if let Some(path) = trace_csv {
                write_trace_csv(&report, io::create(&path)?)?;
            }
            sink.json(&report)
        }
        Command::ProofApprox { pair, target, epsilon, max_word_len, cells, push_budget, n_cap, m_cap } => {
            let pair = load_pair(&pair)?;
            let target = load_pl(&target, "--target")?;
            let params = ProofParams {
                push_budget,
                n_cap,
                m_cap,
                inner_max_len: max_word_len,
                inner_cells: cells,
                iteration_cap: cap,
            };
            let eps = parse_rational(&epsilon, "--epsilon")?;
            let report = proof_guided_approx(&pair, &target, &eps, &params)?;
            if report.shortfall {
                eprintln!("inner search shortfall: middle estimate is not below epsilon/3");
            }
            sink.json(&report)
        }
        Command::SingularMass { f, cantor, mesh, threshold } => {
            let mesh = parse_rational(&mesh, "--mesh")?;
            let threshold = parse_rational(&threshold, "--threshold")?;
            let mass = match (f, cantor) {
                (_, Some(k)) => singular_mass(&cantor_stair(k)?, &mesh, &threshold)?,
                (Some(f), None) => {
                    let map = AnyMap::load(&f, "--f")?;
                    singular_mass(&map.capped(cap), &mesh, &threshold)?
                }
                (None, None) => unreachable!("clap requires one of --f and --cantor"),
            };
            sink.json(&MassOut { mesh, threshold, mass })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
