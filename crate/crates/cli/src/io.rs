use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ac_homeo::orbitmaps::LazyHomeo;
use ac_homeo::rational::{self, Rational};
use ac_homeo::{Error, ErrorFamily, Interval, Oracle, PlHomeo};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.family() {
                ErrorFamily::Parse => 3,
                ErrorFamily::Input => 4,
                ErrorFamily::Budget => 5,
                ErrorFamily::Construction => 6,
            },
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attach a location to an error message without changing its family.
pub fn context<T>(r: ac_homeo::Result<T>, what: &str) -> CliResult<T> {
    r.map_err(|e| {
        CliError::Core(match e {
            Error::Parse(m) => Error::Parse(format!("{what}: {m}")),
            Error::BadParameter(m) => Error::BadParameter(format!("{what}: {m}")),
            Error::DomainMismatch(m) => Error::DomainMismatch(format!("{what}: {m}")),
            other => other,
        })
    })
}

/// The argument itself when it looks like inline JSON, otherwise the
/// contents of the file it names.
fn source_text(arg: &str) -> CliResult<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') || t.starts_with('"') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(arg).map_err(|e| CliError::Io(format!("cannot read {arg}: {e}")))
}

pub fn load<T: DeserializeOwned>(arg: &str, what: &str) -> CliResult<T> {
    let text = source_text(arg)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Core(Error::Parse(format!("{what} ({arg}): {e}"))))
}

pub fn parse_rational(text: &str, what: &str) -> CliResult<Rational> {
    context(rational::parse(text), what)
}

/// A map given either as piecewise-linear breakpoints or as a lazy
/// expression.
#[derive(Clone, Debug)]
pub enum AnyMap {
    Pl(PlHomeo),
    Lazy(LazyHomeo),
}

impl AnyMap {
    pub fn load(arg: &str, what: &str) -> CliResult<Self> {
        let value: Value = load(arg, what)?;
        if value.get("op").is_some() {
            serde_json::from_value(value)
                .map(AnyMap::Lazy)
                .map_err(|e| CliError::Core(Error::Parse(format!("{what}: {e}"))))
        } else {
            serde_json::from_value(value)
                .map(AnyMap::Pl)
                .map_err(|e| CliError::Core(Error::Parse(format!("{what}: {e}"))))
        }
    }

    pub fn capped(&self, cap: u64) -> CappedMap<'_> {
        CappedMap { map: self, cap }
    }
}

pub struct CappedMap<'a> {
    map: &'a AnyMap,
    cap: u64,
}

impl Oracle for CappedMap<'_> {
    fn domain(&self) -> Interval {
        match self.map {
            AnyMap::Pl(f) => f.domain(),
            AnyMap::Lazy(h) => h.domain().clone(),
        }
    }

    fn eval(&self, x: &Rational) -> ac_homeo::Result<Rational> {
        match self.map {
            AnyMap::Pl(f) => f.eval(x),
            AnyMap::Lazy(h) => h.eval_with_cap(x, self.cap),
        }
    }
}

pub fn load_pl(arg: &str, what: &str) -> CliResult<PlHomeo> {
    load(arg, what)
}

fn is_rational_text(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let mut parts = body.splitn(2, '/');
    let num = parts.next().unwrap_or("");
    let den = parts.next();
    !num.is_empty()
        && num.bytes().all(|b| b.is_ascii_digit())
        && den.is_none_or(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Add a `<key>_decimal` sibling to every object field holding a rational.
/// Words are left alone since the empty word prints as `1`.
pub fn annotate(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                let v = annotate(v);
                let decimal = match &v {
                    Value::String(s) if !k.ends_with("word") && is_rational_text(s) => {
                        rational::parse(s).ok().map(|r| rational::to_decimal(&r))
                    }
                    _ => None,
                };
                let key = k.clone();
                out.insert(k, v);
                if let Some(d) = decimal {
                    out.insert(format!("{key}_decimal"), Value::String(d));
                }
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(annotate).collect()),
        other => other,
    }
}

/// Where results go: a file when `--out` is given, stdout otherwise.
pub struct Sink(Option<PathBuf>);

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Sink(path)
    }

    pub fn writer(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.0 {
            Some(p) => Box::new(create(p)?),
            None => Box::new(io::stdout().lock()),
        })
    }

    pub fn json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        let v = serde_json::to_value(value)
            .map_err(|e| CliError::Io(format!("cannot encode output: {e}")))?;
        let mut text = serde_json::to_string_pretty(&annotate(v))
            .map_err(|e| CliError::Io(format!("cannot encode output: {e}")))?;
        text.push('\n');
        let mut w = self.writer()?;
        w.write_all(text.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Io(format!("cannot write output: {e}")))
    }
}

pub fn create(path: &Path) -> CliResult<io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(io::BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}
