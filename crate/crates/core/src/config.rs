//! Flat `key = value` experiment configs and the model-spec mini-language.
//!
//! ```text
//! kind         = aep-convergence
//! source       = iid:bernoulli:0.3       # iid:<dist> | markov:<p_stay> | markov:<order>:<row;row..>
//!                                        # gaussian:<mean>,<var> | field:<dim>:<dist>
//! reproduction = uniform:2               # uniform:k | bernoulli:p | point:k:i | p1,p2,..
//! distortion   = hamming:2               # hamming:k | matrix:r00,r01;r10,r11
//! grid         = 1                       # value grid of a matrix distortion
//! d            = 1/4                     # list of p/q or decimals
//! n            = 2^6..2^12               # list, a..b, or 2^a..2^b
//! replicas     = 20
//! seed         = 7
//! out          = aep.csv
//! ```
//!
//! Keys other than the ones above are kept verbatim for kind-specific use.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::codec::Rational;
use crate::error::{Error, Result};
use crate::model::{DistortionMeasure, FiniteDistribution, MarkovChain, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    AepConvergence,
    MismatchCurve,
    Redundancy,
    WaitClt,
    MatchLln,
    Duality,
    FieldWait,
    DensitiesVsBalls,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::AepConvergence,
        Self::MismatchCurve,
        Self::Redundancy,
        Self::WaitClt,
        Self::MatchLln,
        Self::Duality,
        Self::FieldWait,
        Self::DensitiesVsBalls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::AepConvergence => "aep-convergence",
            Self::MismatchCurve => "mismatch-curve",
            Self::Redundancy => "redundancy",
            Self::WaitClt => "wait-clt",
            Self::MatchLln => "match-lln",
            Self::Duality => "duality",
            Self::FieldWait => "field-wait",
            Self::DensitiesVsBalls => "densities-vs-balls",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub source: Option<SourceModel>,
    pub reproduction: Option<FiniteDistribution>,
    pub distortion: Option<DistortionMeasure>,
    pub d_grid: Vec<Rational>,
    /// Block lengths n (or database sizes m).
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Remaining keys, verbatim.
    pub params: BTreeMap<String, String>,
}

const CORE_KEYS: [&str; 10] = ["kind", "source", "reproduction", "distortion", "grid", "d", "n", "replicas", "seed", "out"];

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| map.get(k).map(String::as_str);
        let kind: ExperimentKind = get("kind").ok_or_else(|| Error::Config("missing key `kind`".into()))?.parse()?;
        let grid = get("grid").map(parse_f64).transpose()?;
        let source = get("source").map(parse_source).transpose()?;
        let reproduction = get("reproduction").map(parse_distribution).transpose()?;
        let distortion = get("distortion").map(|s| parse_distortion(s, grid)).transpose()?;
        let d_grid = get("d").map(|s| s.split(',').map(Rational::parse).collect::<Result<Vec<_>>>()).transpose()?.unwrap_or_default();
        let n_grid = get("n").map(parse_usize_grid).transpose()?.unwrap_or_default();
        let replicas = get("replicas").map(|s| parse_num::<usize>(s, "replicas")).transpose()?.unwrap_or(1);
        let seed = get("seed").map(|s| parse_num::<u64>(s, "seed")).transpose()?.unwrap_or(0);
        let out = get("out").map(PathBuf::from);
        let params = map.into_iter().filter(|(k, _)| !CORE_KEYS.contains(&k.as_str())).collect();
        if replicas == 0 {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        Ok(Self { kind, source, reproduction, distortion, d_grid, n_grid, replicas, seed, out, params })
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn param_f64(&self, key: &str, default: f64) -> Result<f64> {
        self.param(key).map(parse_f64).transpose().map(|v| v.unwrap_or(default))
    }

    pub fn param_u64(&self, key: &str, default: u64) -> Result<u64> {
        self.param(key).map(|s| parse_num::<u64>(s, key)).transpose().map(|v| v.unwrap_or(default))
    }

    pub fn require_source(&self) -> Result<&SourceModel> {
        self.source.as_ref().ok_or_else(|| Error::Config(format!("{} needs `source`", self.kind)))
    }

    pub fn require_reproduction(&self) -> Result<&FiniteDistribution> {
        self.reproduction.as_ref().ok_or_else(|| Error::Config(format!("{} needs `reproduction`", self.kind)))
    }

    pub fn require_distortion(&self) -> Result<&DistortionMeasure> {
        self.distortion.as_ref().ok_or_else(|| Error::Config(format!("{} needs `distortion`", self.kind)))
    }

    pub fn require_d_grid(&self) -> Result<&[Rational]> {
        if self.d_grid.is_empty() {
            return Err(Error::Config(format!("{} needs a nonempty `d`", self.kind)));
        }
        Ok(&self.d_grid)
    }

    pub fn require_n_grid(&self) -> Result<&[usize]> {
        if self.n_grid.is_empty() {
            return Err(Error::Config(format!("{} needs a nonempty `n`", self.kind)));
        }
        Ok(&self.n_grid)
    }
}

/// `key = value` lines; `#` starts a comment; later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::Config(format!("line {}: empty key or value", i + 1)));
        }
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("bad {what}: {s:?}")))
}

/// A decimal or a `p/q` fraction.
pub fn parse_f64(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = parse_num(a, "numerator")?;
        let b: f64 = parse_num(b, "denominator")?;
        if b == 0.0 {
            return Err(Error::Config(format!("zero denominator in {s:?}")));
        }
        return Ok(a / b);
    }
    parse_num(s, "number")
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

/// `lo:hi:step` inclusive of both ends (up to rounding), or a plain list.
pub fn parse_f64_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return parse_f64_list(s);
    }
    let (lo, hi, step) = (parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?);
    if !(step > 0.0) || hi < lo {
        return Err(Error::Config(format!("bad range {s:?}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| lo + i as f64 * step).collect())
}

/// `a,b,c`, `a..b`, or `2^a..2^b`.
pub fn parse_usize_grid(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.trim(), b.trim());
        if let (Some(ea), Some(eb)) = (a.strip_prefix("2^"), b.strip_prefix("2^")) {
            let (ea, eb): (u32, u32) = (parse_num(ea, "exponent")?, parse_num(eb, "exponent")?);
            if eb < ea || eb > 40 {
                return Err(Error::Config(format!("bad power range {s:?}")));
            }
            return Ok((ea..=eb).map(|e| 1usize << e).collect());
        }
        let (a, b): (usize, usize) = (parse_num(a, "range start")?, parse_num(b, "range end")?);
        if b < a {
            return Err(Error::Config(format!("empty range {s:?}")));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| match t.trim().strip_prefix("2^") {
            Some(e) => parse_num::<u32>(e, "exponent").map(|e| 1usize << e),
            None => parse_num(t, "integer"),
        })
        .collect()
}

pub fn parse_distribution(s: &str) -> Result<FiniteDistribution> {
    let s = s.trim();
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    match head {
        "uniform" => FiniteDistribution::uniform(parse_num(rest, "alphabet size")?),
        "bernoulli" => FiniteDistribution::bernoulli(parse_f64(rest)?),
        "point" => {
            let (k, i) = rest.split_once(':').ok_or_else(|| Error::Config(format!("expected point:k:i, got {s:?}")))?;
            FiniteDistribution::point_mass(parse_num(k, "alphabet size")?, parse_num(i, "index")?)
        }
        "probs" => FiniteDistribution::from_probs(parse_f64_list(rest)?),
        _ => FiniteDistribution::from_probs(parse_f64_list(s)?),
    }
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(parse_f64_list).collect()
}

pub fn parse_source(s: &str) -> Result<SourceModel> {
    let s = s.trim();
    let (head, rest) = s.split_once(':').ok_or_else(|| Error::Config(format!("source {s:?} needs a `kind:` prefix")))?;
    match head {
        "iid" => Ok(SourceModel::iid(parse_distribution(rest)?)),
        "markov" => match rest.split_once(':') {
            None => Ok(SourceModel::markov(MarkovChain::two_state(parse_f64(rest)?)?)),
            Some((order, rows)) => {
                let rows = parse_matrix(rows)?;
                let k = rows.first().map(Vec::len).unwrap_or(0);
                let symbols = (0..k).map(|i| i.to_string()).collect();
                Ok(SourceModel::markov(MarkovChain::new(symbols, parse_num(order, "order")?, rows)?))
            }
        },
        "gaussian" => {
            let v = parse_f64_list(rest)?;
            match v.as_slice() {
                [mean, var] => SourceModel::gaussian(*mean, *var),
                _ => Err(Error::Config(format!("expected gaussian:mean,var, got {s:?}"))),
            }
        }
        "field" => {
            let (dim, dist) = rest.split_once(':').ok_or_else(|| Error::Config(format!("expected field:dim:dist, got {s:?}")))?;
            SourceModel::field(parse_distribution(dist)?, parse_num(dim, "dimension")?)
        }
        _ => Err(Error::Config(format!("unknown source kind {head:?}"))),
    }
}

pub fn parse_distortion(s: &str, grid: Option<f64>) -> Result<DistortionMeasure> {
    let s = s.trim();
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    match head {
        "hamming" => Ok(DistortionMeasure::hamming(parse_num(rest, "alphabet size")?)),
        "matrix" => DistortionMeasure::new(parse_matrix(rest)?, grid),
        _ => Err(Error::Config(format!("unknown distortion {s:?}"))),
    }
}

/// Reads a distortion matrix: one row per line, entries separated by
/// whitespace or commas; an optional `grid = <step>` line sets the value grid.
pub fn read_matrix_file(path: &Path) -> Result<DistortionMeasure> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut grid = None;
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            if k.trim() != "grid" {
                return Err(Error::Config(format!("unknown key {:?} in matrix file", k.trim())));
            }
            grid = Some(parse_f64(v)?);
            continue;
        }
        rows.push(line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(parse_f64).collect::<Result<Vec<_>>>()?);
    }
    DistortionMeasure::new(rows, grid)
}
