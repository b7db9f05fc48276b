//! Command-line options, the `key = value` config file, and their resolution
//! into a validated [`RunConfig`]. Precedence: flags, then file, then defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffmoments_core::complexmoments::DEFAULT_N;
use ffmoments_core::ffpoly::{prime_power, MAX_FIELD_SIZE};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::HarnessError;

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "FFMOMENTS_CACHE_DIR";

/// Largest `q^n` a family enumeration may touch.
pub const MAX_FAMILY_SPACE: f64 = 5e7;

#[derive(Parser, Debug)]
#[command(
    name = "ffmoments",
    version,
    about = "Moments of quadratic Dirichlet L-functions over F_q[T]"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count (and optionally list) monic irreducibles of each degree.
    Primes(Options),
    /// L-polynomials and class numbers for one prime or whole families.
    Lfunc(Options),
    /// Integer moments of L(1, chi_P) and of class numbers (odd degree).
    Moments(Options),
    /// Moments of h_P R_P over even-degree families.
    Even(Options),
    /// Complex moments through the truncated Euler product.
    Complex(Options),
    /// The random Euler product model: moments, CDF, characteristic function.
    Random(Options),
    /// Family distribution of L(1, chi_P) against the model (KS distance).
    Distribution(Options),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Primes(_) => CommandKind::Primes,
            Command::Lfunc(_) => CommandKind::Lfunc,
            Command::Moments(_) => CommandKind::Moments,
            Command::Even(_) => CommandKind::Even,
            Command::Complex(_) => CommandKind::Complex,
            Command::Random(_) => CommandKind::Random,
            Command::Distribution(_) => CommandKind::Distribution,
        }
    }

    pub fn options(&self) -> &Options {
        match self {
            Command::Primes(o)
            | Command::Lfunc(o)
            | Command::Moments(o)
            | Command::Even(o)
            | Command::Complex(o)
            | Command::Random(o)
            | Command::Distribution(o) => o,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Primes,
    Lfunc,
    Moments,
    Even,
    Complex,
    Random,
    Distribution,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Primes => "primes",
            CommandKind::Lfunc => "lfunc",
            CommandKind::Moments => "moments",
            CommandKind::Even => "even",
            CommandKind::Complex => "complex",
            CommandKind::Random => "random",
            CommandKind::Distribution => "distribution",
        }
    }
}

/// Every flag is optional so that the config file can supply it.
#[derive(Args, Debug, Clone, Default)]
pub struct Options {
    /// Field size (odd prime power).
    #[arg(long)]
    pub q: Option<u64>,
    /// Degrees, comma-separated.
    #[arg(long)]
    pub n: Option<String>,
    /// Integer exponents, comma-separated.
    #[arg(long)]
    pub k: Option<String>,
    /// Complex exponent, e.g. 0.5+0.5i.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Truncation constant N of the complex-moment Euler product.
    #[arg(long = "N")]
    pub big_n: Option<f64>,
    /// A prime as comma-separated coefficients, highest degree first.
    #[arg(long)]
    pub poly: Option<String>,
    /// Model truncation degree M.
    #[arg(long = "model-M", alias = "M")]
    pub model_m: Option<u32>,
    /// Model sample count S.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for cached family tables (default: $FFMOMENTS_CACHE_DIR).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Directory for JSON reports and CSV tables.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// `key = value` config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Treat a cache version mismatch as an error instead of recomputing.
    #[arg(long)]
    pub strict_cache: bool,
    /// Run complex moments outside the admissible |z| range (exploratory).
    #[arg(long)]
    pub allow_out_of_range: bool,
    /// Also run the class-number sweep in `moments`.
    #[arg(long)]
    pub class_number: bool,
    /// List every prime / record instead of a summary.
    #[arg(long)]
    pub list: bool,
    /// Write every model sample to samples.csv (`random`).
    #[arg(long)]
    pub dump_samples: bool,
}

/// A fully resolved, validated run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub q: u64,
    pub degrees: Vec<usize>,
    pub ks: Vec<u32>,
    /// Unset means the command default (see [`RunConfig::z_or_default`]).
    #[serde(serialize_with = "serialize_complex")]
    pub z: Option<Complex64>,
    pub big_n: f64,
    pub poly: Option<Vec<u32>>,
    pub model_m: u32,
    pub samples: u64,
    pub seed: u64,
    pub class_number: bool,
    pub list: bool,
    pub dump_samples: bool,
    pub allow_out_of_range: bool,
    // run plumbing: excluded from the report so payloads stay comparable
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub strict_cache: bool,
}

fn serialize_complex<S: serde::Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    match z {
        Some(z) => s.serialize_str(&ffmoments_core::moments::format_complex(*z)),
        None => s.serialize_none(),
    }
}

/// Parses `a+bi`, `a-bi`, `a`, `bi`, `i`, `-i`.
pub fn parse_complex(text: &str) -> Result<Complex64, HarnessError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || HarnessError::Config(format!("cannot parse complex number '{text}'"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return s.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, HarnessError> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| HarnessError::Config(format!("bad {what} '{s}' in '{text}'")))
        })
        .collect()
}

/// Reads a config file of `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(HarnessError::Config(format!(
                "config line {}: unknown key '{key}'",
                lineno + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: &[&str] = &[
    "q",
    "n",
    "k",
    "z",
    "N",
    "poly",
    "model_M",
    "M",
    "samples",
    "seed",
    "cache_dir",
    "out_dir",
    "threads",
    "strict_cache",
    "allow_out_of_range",
    "class_number",
    "list",
    "dump_samples",
];

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(HarnessError::Config(format!(
            "{key}: expected true/false, got '{value}'"
        ))),
    }
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("{key}: cannot parse '{value}'")))
}

/// Merges flags over file entries (file entries fill unset flags only).
pub fn merge(mut opts: Options, file: &BTreeMap<String, String>) -> Result<Options, HarnessError> {
    for (key, value) in file {
        match key.as_str() {
            "q" if opts.q.is_none() => opts.q = Some(parse_scalar(key, value)?),
            "n" if opts.n.is_none() => opts.n = Some(value.clone()),
            "k" if opts.k.is_none() => opts.k = Some(value.clone()),
            "z" if opts.z.is_none() => opts.z = Some(value.clone()),
            "N" if opts.big_n.is_none() => opts.big_n = Some(parse_scalar(key, value)?),
            "poly" if opts.poly.is_none() => opts.poly = Some(value.clone()),
            "model_M" | "M" if opts.model_m.is_none() => opts.model_m = Some(parse_scalar(key, value)?),
            "samples" if opts.samples.is_none() => opts.samples = Some(parse_scalar(key, value)?),
            "seed" if opts.seed.is_none() => opts.seed = Some(parse_scalar(key, value)?),
            "cache_dir" if opts.cache_dir.is_none() => opts.cache_dir = Some(PathBuf::from(value)),
            "out_dir" if opts.out_dir.is_none() => opts.out_dir = Some(PathBuf::from(value)),
            "threads" if opts.threads.is_none() => opts.threads = Some(parse_scalar(key, value)?),
            "strict_cache" => opts.strict_cache |= parse_bool(key, value)?,
            "allow_out_of_range" => opts.allow_out_of_range |= parse_bool(key, value)?,
            "class_number" => opts.class_number |= parse_bool(key, value)?,
            "list" => opts.list |= parse_bool(key, value)?,
            "dump_samples" => opts.dump_samples |= parse_bool(key, value)?,
            _ => {}
        }
    }
    Ok(opts)
}

fn default_degrees(command: CommandKind) -> Vec<usize> {
    match command {
        CommandKind::Primes | CommandKind::Lfunc => vec![3],
        CommandKind::Moments => vec![3, 5, 7],
        CommandKind::Even => vec![4, 6],
        CommandKind::Complex => vec![5],
        CommandKind::Random | CommandKind::Distribution => vec![7],
    }
}

fn default_z(command: CommandKind) -> Complex64 {
    match command {
        CommandKind::Complex => Complex64::new(0.5, 0.5),
        _ => Complex64::new(1.0, 0.0),
    }
}

fn default_model_m(command: CommandKind) -> u32 {
    match command {
        CommandKind::Distribution => 8,
        _ => 6,
    }
}

impl RunConfig {
    /// Resolves flags, an optional config file, the environment and defaults.
    pub fn resolve(command: CommandKind, opts: &Options, env_cache: Option<PathBuf>) -> Result<Self, HarnessError> {
        let file = match &opts.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let o = merge(opts.clone(), &file)?;
        let q =
            o.q.ok_or_else(|| HarnessError::Config("missing --q (field size)".into()))?;
        let degrees = match &o.n {
            Some(text) => parse_list(text, "degree")?,
            None => default_degrees(command),
        };
        let ks = match &o.k {
            Some(text) => parse_list(text, "exponent")?,
            None => vec![1, 2],
        };
        let z = o.z.as_deref().map(parse_complex).transpose()?;
        let poly = o
            .poly
            .as_deref()
            .map(|text| parse_list::<u32>(text, "coefficient"))
            .transpose()?;
        let config = RunConfig {
            command,
            q,
            degrees,
            ks,
            z,
            big_n: o.big_n.unwrap_or(DEFAULT_N),
            poly,
            model_m: o.model_m.unwrap_or_else(|| default_model_m(command)),
            samples: o.samples.unwrap_or(100_000),
            seed: o.seed.unwrap_or(42),
            class_number: o.class_number,
            list: o.list,
            dump_samples: o.dump_samples,
            allow_out_of_range: o.allow_out_of_range,
            cache_dir: o.cache_dir.or(env_cache),
            out_dir: o.out_dir,
            threads: o.threads,
            strict_cache: o.strict_cache,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn z_or_default(&self) -> Complex64 {
        self.z.unwrap_or_else(|| default_z(self.command))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        let q = self.q;
        if q.is_multiple_of(2) {
            return err(format!("q = {q} has even characteristic; q must be odd"));
        }
        if prime_power(q).is_none() {
            return err(format!("q = {q} is not a prime power"));
        }
        if q > MAX_FIELD_SIZE as u64 {
            return err(format!("q = {q} exceeds the supported field size {MAX_FIELD_SIZE}"));
        }
        if self.degrees.is_empty() {
            return err("no degrees given".into());
        }
        for &n in &self.degrees {
            if n == 0 {
                return err("degree n must be at least 1".into());
            }
            if (q as f64).powi(n as i32) > MAX_FAMILY_SPACE {
                return err(format!(
                    "q^n = {q}^{n} is beyond desk scale (limit {MAX_FAMILY_SPACE:e})"
                ));
            }
            match self.command {
                CommandKind::Moments if n % 2 == 0 => return err(format!("moments needs odd degrees, got {n}")),
                CommandKind::Even if n % 2 == 1 => return err(format!("even needs even degrees, got {n}")),
                _ => {}
            }
        }
        if self.command == CommandKind::Moments && self.ks.contains(&0) {
            return err("exponents k must be at least 1".into());
        }
        if self.ks.is_empty() {
            return err("no exponents given".into());
        }
        let z = self.z_or_default();
        if !(z.re.is_finite() && z.im.is_finite()) {
            return err("z must be finite".into());
        }
        if matches!(self.command, CommandKind::Random | CommandKind::Distribution) {
            if self.samples == 0 {
                return err("samples must be at least 1".into());
            }
            if (q as f64).powi(self.model_m as i32) > 1e10 {
                return err(format!(
                    "model truncation M = {} is too large for q = {q}",
                    self.model_m
                ));
            }
        }
        if self.command == CommandKind::Complex && self.big_n <= 4.0 {
            return err(format!("N = {} must exceed 4", self.big_n));
        }
        if self.threads == Some(0) {
            return err("threads must be at least 1".into());
        }
        if let Some(coeffs) = &self.poly {
            if coeffs.first() != Some(&1) || coeffs.len() < 2 {
                return err("--poly must be monic of degree >= 1 (leading coefficient 1)".into());
            }
            if coeffs.iter().any(|&c| c as u64 >= q) {
                return err(format!("--poly coefficients must be below q = {q}"));
            }
        }
        Ok(())
    }
}
