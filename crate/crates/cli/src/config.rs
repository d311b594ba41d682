//! Experiment configuration: a flat `key = value` document (config file and
//! flags merged, flags last) parsed into a typed [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use proxlb::dynamic_sim::{DEFAULT_JOINT_PAIRS, DEFAULT_WARMUP_FRACTION};
use proxlb::static_sim::ArrivalModel;
use proxlb::{PolicyKind, TopologySpec};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const KEYS: &[&str] = &[
    "topology",
    "n",
    "m",
    "policy",
    "k",
    "lambda",
    "mu",
    "arrivals",
    "seeds",
    "seed",
    "out",
    "alpha",
    "beta",
    "gamma",
    "r",
    "l_max",
    "radius",
    "arrival_model",
    "warmup",
    "pairs",
];

/// Keys that do not change results and are left out of the config hash.
const UNHASHED: &[&str] = &["out"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("field `{field}`: cannot use `{value}`: {msg}")]
    Invalid {
        field: &'static str,
        value: String,
        msg: String,
    },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

fn invalid(field: &'static str, value: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        value: value.to_string(),
        msg: msg.into(),
    }
}

fn normalise_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

/// Raw string settings, ordered by key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = normalise_key(key);
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line: i + 1, key });
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("empty value for `{key}`"),
                });
            }
            map.insert(key, value.to_string());
        }
        Ok(Self(map))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalise_key(key), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Canonical `key=value` lines of the result-relevant settings.
    pub fn canonical(&self) -> String {
        self.iter()
            .filter(|(k, _)| !UNHASHED.contains(k))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Static,
    Dynamic,
    GraphStats,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Dynamic => "dynamic",
            Mode::GraphStats => "graph-stats",
            Mode::Sweep => "sweep",
        }
    }
}

/// A hop limit as written by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSpec {
    Literal(u32),
    /// max(1, round(ln n)).
    LogN,
    /// The server count itself.
    N,
}

impl std::str::FromStr for KSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "logn" | "log n" => Ok(KSpec::LogN),
            "n" => Ok(KSpec::N),
            other => other
                .parse::<u32>()
                .map(KSpec::Literal)
                .map_err(|_| "expected an integer, `logn` or `n`".to_string()),
        }
    }
}

/// Resolves a hop limit against the server count.
pub fn resolve_k(k: KSpec, n: usize) -> Result<u32, ConfigError> {
    match k {
        KSpec::Literal(0) => Err(invalid("k", "0", "hop limit must be at least 1")),
        KSpec::Literal(k) => Ok(k),
        KSpec::LogN => Ok(((n as f64).ln().round() as u32).max(1)),
        KSpec::N => Ok(n as u32),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    Pot,
    Unif,
    InvSq,
}

impl std::str::FromStr for PolicyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pot" => Ok(PolicyChoice::Pot),
            "unif" | "unif-pot" => Ok(PolicyChoice::Unif),
            "invsq" | "invsq-pot" => Ok(PolicyChoice::InvSq),
            _ => Err("expected pot, unif or invsq".into()),
        }
    }
}

/// Concrete policies for every (choice, k) combination at size `n`. POT
/// appears at most once since it has no hop limit.
pub fn expand_policies(choices: &[PolicyChoice], ks: &[KSpec], n: usize) -> Result<Vec<PolicyKind>, ConfigError> {
    let mut out = Vec::new();
    for &c in choices {
        let kinds: Vec<PolicyKind> = match c {
            PolicyChoice::Pot => vec![PolicyKind::Pot],
            PolicyChoice::Unif => ks
                .iter()
                .map(|&k| resolve_k(k, n).map(|k| PolicyKind::UnifPot { k }))
                .collect::<Result<_, _>>()?,
            PolicyChoice::InvSq => ks
                .iter()
                .map(|&k| resolve_k(k, n).map(|k| PolicyKind::InvSqPot { k }))
                .collect::<Result<_, _>>()?,
        };
        for kind in kinds {
            if !out.contains(&kind) {
                out.push(kind);
            }
        }
    }
    Ok(out)
}

/// A graph parameter that may scale with `n`: `3`, `2logn`, `2logn/n`,
/// `1.5rgg` (multiple of sqrt(ln n / (pi n))).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaled {
    Value(f64),
    LogN(f64),
    LogNOverN(f64),
    RggThreshold(f64),
}

impl Scaled {
    pub fn parse(field: &'static str, s: &str) -> Result<Self, ConfigError> {
        let s = s.trim();
        let coeff = |prefix: &str| -> Result<f64, ConfigError> {
            if prefix.is_empty() {
                Ok(1.0)
            } else {
                prefix.parse().map_err(|_| invalid(field, s, "bad coefficient"))
            }
        };
        if let Some(p) = s.strip_suffix("logn/n") {
            return Ok(Scaled::LogNOverN(coeff(p)?));
        }
        if let Some(p) = s.strip_suffix("logn") {
            return Ok(Scaled::LogN(coeff(p)?));
        }
        if let Some(p) = s.strip_suffix("rgg") {
            return Ok(Scaled::RggThreshold(coeff(p)?));
        }
        s.parse()
            .map(Scaled::Value)
            .map_err(|_| invalid(field, s, "expected a number, `<c>logn`, `<c>logn/n` or `<c>rgg`"))
    }

    pub fn at(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Scaled::Value(v) => v,
            Scaled::LogN(c) => c * nf.ln(),
            Scaled::LogNOverN(c) => c * nf.ln() / nf,
            Scaled::RggThreshold(c) => c * (nf.ln() / (PI * nf)).sqrt(),
        }
    }

    fn at_int(self, n: usize) -> usize {
        self.at(n).round().max(0.0) as usize
    }
}

/// Topology family plus its (possibly n-dependent) parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyTemplate {
    pub kind: String,
    pub alpha: Option<Scaled>,
    pub beta: Option<Scaled>,
    pub gamma: Option<Scaled>,
    pub r: Option<Scaled>,
    pub l_max: Option<Scaled>,
    pub radius: Option<Scaled>,
}

impl TopologyTemplate {
    pub fn instantiate(&self, n: usize) -> Result<TopologySpec, ConfigError> {
        let need = |v: Option<Scaled>, field: &'static str| v.ok_or(ConfigError::Missing(field));
        let spec = match self.kind.as_str() {
            "line" => TopologySpec::Line { n },
            "ring" => TopologySpec::Ring { n },
            "ba" => TopologySpec::BarabasiAlbert {
                n,
                alpha: need(self.alpha, "alpha")?.at_int(n),
            },
            "rr" => {
                let mut beta = need(self.beta, "beta")?.at_int(n);
                if n * beta % 2 == 1 {
                    beta += 1;
                }
                TopologySpec::RandomRegular { n, beta }
            }
            "er" => TopologySpec::ErdosRenyi {
                n,
                gamma: need(self.gamma, "gamma")?.at(n).min(1.0),
            },
            "rgg" => TopologySpec::RandomGeometric {
                n,
                r: need(self.r, "r")?.at(n),
            },
            "spatial-line" => TopologySpec::SpatialLine {
                n,
                l_max: self.l_max.map_or(n as f64, |v| v.at(n)),
            },
            "spatial-ring" => TopologySpec::SpatialRing {
                n,
                radius: self.radius.map_or(1.0, |v| v.at(n)),
            },
            other => {
                return Err(invalid(
                    "topology",
                    other,
                    "expected line, ring, ba, rr, er, rgg, spatial-line or spatial-ring",
                ))
            }
        };
        spec.validate().map_err(|e| invalid("topology", &spec.to_string(), e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub topology: TopologyTemplate,
    pub ns: Vec<usize>,
    pub policies: Vec<PolicyChoice>,
    pub ks: Vec<KSpec>,
    /// Static jobs per run; `None` means m = n.
    pub m: Option<u64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    /// Dynamic horizon; `None` means n * 10^5.
    pub arrivals: Option<u64>,
    pub arrival_model: ArrivalModel,
    pub seeds: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub warmup: f64,
    pub pairs: Vec<(usize, usize)>,
    pub hash: String,
}

fn parse_field<T: std::str::FromStr>(s: &Settings, field: &'static str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.get(field)
        .map(|v| v.trim().parse::<T>().map_err(|e| invalid(field, v, e.to_string())))
        .transpose()
}

fn parse_list<T: std::str::FromStr>(s: &Settings, field: &'static str) -> Result<Option<Vec<T>>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.get(field)
        .map(|v| {
            v.split(',')
                .map(|item| item.trim().parse::<T>().map_err(|e| invalid(field, item, e.to_string())))
                .collect()
        })
        .transpose()
}

fn parse_pairs(s: &str) -> Result<Vec<(usize, usize)>, ConfigError> {
    s.split(',')
        .map(|p| {
            let (a, b) = p.trim().split_once('-').ok_or_else(|| invalid("pairs", p, "expected `a-b`"))?;
            let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| invalid("pairs", p, e.to_string()));
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_settings(mode: Mode, s: &Settings) -> Result<Self, ConfigError> {
        let kind = s.get("topology").ok_or(ConfigError::Missing("topology"))?.trim().to_ascii_lowercase();
        let scaled = |f: &'static str| s.get(f).map(|v| Scaled::parse(f, v)).transpose();
        let topology = TopologyTemplate {
            kind,
            alpha: scaled("alpha")?,
            beta: scaled("beta")?,
            gamma: scaled("gamma")?,
            r: scaled("r")?,
            l_max: scaled("l_max")?,
            radius: scaled("radius")?,
        };
        let ns: Vec<usize> = parse_list(s, "n")?.ok_or(ConfigError::Missing("n"))?;
        if ns.len() > 1 && mode != Mode::Sweep {
            return Err(invalid("n", s.get("n").unwrap(), "a list of sizes needs the `sweep` mode"));
        }
        let policies = parse_list(s, "policy")?.unwrap_or_else(|| vec![PolicyChoice::Pot, PolicyChoice::Unif, PolicyChoice::InvSq]);
        let ks = parse_list(s, "k")?.unwrap_or_else(|| vec![KSpec::LogN]);
        for &k in &ks {
            if k == KSpec::Literal(0) {
                return Err(invalid("k", "0", "hop limit must be at least 1"));
            }
        }
        let lambda: Option<f64> = parse_field(s, "lambda")?;
        let mu: Option<f64> = parse_field(s, "mu")?;
        if mode == Mode::Dynamic {
            let l = lambda.ok_or(ConfigError::Missing("lambda"))?;
            let m = mu.ok_or(ConfigError::Missing("mu"))?;
            if !(l > 0.0 && l < m) {
                return Err(invalid("lambda", &l.to_string(), format!("need 0 < lambda < mu = {m}")));
            }
        }
        let arrival_model = match s.get("arrival_model").map(str::trim) {
            None | Some("uniform") => ArrivalModel::UniformOrigin,
            Some("nearest") => ArrivalModel::SpatialNearest,
            Some(other) => return Err(invalid("arrival_model", other, "expected uniform or nearest")),
        };
        let default_seeds = if matches!(mode, Mode::Dynamic | Mode::GraphStats) { 1 } else { 10 };
        let seeds = parse_field(s, "seeds")?.unwrap_or(default_seeds);
        if seeds == 0 {
            return Err(invalid("seeds", "0", "need at least one seed"));
        }
        let warmup = parse_field(s, "warmup")?.unwrap_or(DEFAULT_WARMUP_FRACTION);
        let pairs = match s.get("pairs") {
            Some(p) => parse_pairs(p)?,
            None => DEFAULT_JOINT_PAIRS.to_vec(),
        };
        let cfg = Self {
            mode,
            topology,
            ns,
            policies,
            ks,
            m: parse_field(s, "m")?,
            lambda,
            mu,
            arrivals: parse_field(s, "arrivals")?,
            arrival_model,
            seeds,
            seed: parse_field(s, "seed")?.unwrap_or(1),
            out: s.get("out").map_or_else(|| PathBuf::from("results"), PathBuf::from),
            warmup,
            pairs,
            hash: short_hash(&format!("mode={}\n{}", mode.name(), s.canonical())),
        };
        // surface topology errors before any run starts
        for &n in &cfg.ns {
            cfg.topology.instantiate(n)?;
        }
        Ok(cfg)
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds).map(|r| self.seed + r).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(text: &str) -> Settings {
        Settings::parse(text).unwrap()
    }

    #[test]
    fn resolve_k_examples() {
        assert_eq!(resolve_k(KSpec::LogN, 10_000).unwrap(), 9);
        assert_eq!(resolve_k(KSpec::N, 1001).unwrap(), 1001);
        assert_eq!(resolve_k(KSpec::LogN, 2).unwrap(), 1);
        assert_eq!(resolve_k(KSpec::Literal(4), 50).unwrap(), 4);
        assert!(resolve_k(KSpec::Literal(0), 50).is_err());
    }

    #[test]
    fn parses_comments_and_reports_lines() {
        let s = settings("# header\ntopology = ring\n\nn=5 # trailing\n");
        assert_eq!(s.get("n"), Some("5"));
        match Settings::parse("topology = ring\nbogus\n") {
            Err(ConfigError::Syntax { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match Settings::parse("n = 3\ncolour = red\n") {
            Err(ConfigError::UnknownKey { line: 2, key }) => assert_eq!(key, "colour"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dynamic_needs_mu() {
        let s = settings("topology = ring\nn = 11\nlambda = 0.9\n");
        let err = ExperimentConfig::from_settings(Mode::Dynamic, &s).unwrap_err();
        assert!(matches!(err, ConfigError::Missing("mu")));
        assert!(err.to_string().contains("`mu`"));
    }

    #[test]
    fn flags_override_file_and_change_hash() {
        let mut s = settings("topology = ring\nn = 11\nk = 2\n");
        let a = ExperimentConfig::from_settings(Mode::Static, &s).unwrap();
        s.set("k", "3");
        let b = ExperimentConfig::from_settings(Mode::Static, &s).unwrap();
        assert_eq!(b.ks, vec![KSpec::Literal(3)]);
        assert_ne!(a.hash, b.hash);
        s.set("out", "elsewhere");
        assert_eq!(ExperimentConfig::from_settings(Mode::Static, &s).unwrap().hash, b.hash);
    }

    #[test]
    fn scaled_parameters() {
        assert_eq!(Scaled::parse("beta", "2logn").unwrap(), Scaled::LogN(2.0));
        assert_eq!(Scaled::parse("gamma", "logn/n").unwrap(), Scaled::LogNOverN(1.0));
        let g = Scaled::parse("gamma", "2logn/n").unwrap().at(1000);
        assert!((g - 2.0 * 1000f64.ln() / 1000.0).abs() < 1e-15);
        assert!(Scaled::parse("r", "wide").is_err());
        let t = TopologyTemplate {
            kind: "rr".into(),
            alpha: None,
            beta: Some(Scaled::Value(3.0)),
            gamma: None,
            r: None,
            l_max: None,
            radius: None,
        };
        // odd n * beta is bumped to the next even degree
        assert_eq!(t.instantiate(11).unwrap(), TopologySpec::RandomRegular { n: 11, beta: 4 });
    }

    #[test]
    fn expands_policies_without_duplicates() {
        let kinds = expand_policies(
            &[PolicyChoice::Pot, PolicyChoice::InvSq, PolicyChoice::Pot],
            &[KSpec::Literal(2), KSpec::LogN, KSpec::Literal(2)],
            1000,
        )
        .unwrap();
        assert_eq!(kinds, vec![PolicyKind::Pot, PolicyKind::InvSqPot { k: 2 }, PolicyKind::InvSqPot { k: 7 }]);
    }

    #[test]
    fn size_lists_only_in_sweep() {
        let s = settings("topology = line\nn = 10,20\n");
        assert!(ExperimentConfig::from_settings(Mode::Static, &s).is_err());
        let cfg = ExperimentConfig::from_settings(Mode::Sweep, &s).unwrap();
        assert_eq!(cfg.ns, vec![10, 20]);
    }
}
