//! `key = value` run configuration.
//!
//! A config file holds one assignment per line; `#` starts a comment. Command
//! line flags are merged on top of the file before validation, so both go
//! through the same parser.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use dbbsde::{Error, ExampleId, Scheme};

pub const KEYS: [&str; 13] = [
    "T",
    "n",
    "lambda",
    "p",
    "example",
    "a",
    "scheme",
    "seed",
    "out",
    "compat_literal_penalty",
    "n_list",
    "p_list",
    "count",
];

pub type RawConfig = BTreeMap<String, String>;

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn parse_text(text: &str) -> Result<RawConfig, Error> {
    let mut raw = RawConfig::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(bad(format!("line {}: expected `key = value`", lineno + 1)));
        };
        let key = key.trim();
        check_key(key)?;
        if raw.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(bad(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
    }
    Ok(raw)
}

pub fn check_key(key: &str) -> Result<(), Error> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(bad(format!("unknown key `{key}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub horizon: f64,
    pub n: Option<usize>,
    pub lambda: f64,
    pub p: Option<f64>,
    pub example: ExampleId,
    pub scheme: Scheme,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub compat_literal_penalty: bool,
    pub n_list: Option<Vec<usize>>,
    pub p_list: Option<Vec<f64>>,
    pub count: usize,
}

fn value<T: FromStr>(raw: &RawConfig, key: &str) -> Result<Option<T>, Error> {
    raw.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| bad(format!("invalid value `{v}` for `{key}`")))
        })
        .transpose()
}

fn list<T: FromStr>(raw: &RawConfig, key: &str) -> Result<Option<Vec<T>>, Error> {
    let Some(v) = raw.get(key) else { return Ok(None) };
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| bad(format!("invalid entry `{s}` in `{key}`")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

impl Config {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, Error> {
        for key in raw.keys() {
            check_key(key)?;
        }
        let a: Option<f64> = value(raw, "a")?;
        let example = match raw.get("example").map(String::as_str) {
            None | Some("1") => ExampleId::One,
            Some("2") => ExampleId::Two {
                a: a.ok_or_else(|| bad("example = 2 requires `a`"))?,
            },
            Some("unconstrained") => ExampleId::Unconstrained,
            Some(other) => {
                return Err(bad(format!(
                    "unknown example `{other}` (expected 1, 2 or unconstrained)"
                )))
            }
        };
        if a.is_some() && !matches!(example, ExampleId::Two { .. }) {
            return Err(bad("`a` is only valid with example = 2"));
        }
        let scheme = match raw.get("scheme") {
            Some(s) => s.parse::<Scheme>().map_err(|_| bad(format!("unknown scheme `{s}`")))?,
            None => Scheme::Explicit,
        };
        let compat_literal_penalty = match raw.get("compat_literal_penalty").map(String::as_str) {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(other) => return Err(bad(format!("invalid boolean `{other}` for `compat_literal_penalty`"))),
        };
        let cfg = Self {
            horizon: value(raw, "T")?.unwrap_or(1.0),
            n: value(raw, "n")?,
            lambda: value(raw, "lambda")?.unwrap_or(5.0),
            p: value(raw, "p")?,
            example,
            scheme,
            seed: value(raw, "seed")?.unwrap_or(0),
            out: raw.get("out").map(PathBuf::from),
            compat_literal_penalty,
            n_list: list(raw, "n_list")?,
            p_list: list(raw, "p_list")?,
            count: value(raw, "count")?.unwrap_or(1),
        };
        if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
            return Err(bad("T must be positive"));
        }
        if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) {
            return Err(bad("lambda must be positive"));
        }
        if cfg.n == Some(0) {
            return Err(bad("n must be positive"));
        }
        Ok(cfg)
    }

    pub fn require_n(&self) -> Result<usize, Error> {
        self.n.ok_or_else(|| bad("missing `n`"))
    }

    /// `p` is optional for the unconstrained problem, where it has no effect.
    pub fn require_p(&self) -> Result<f64, Error> {
        match (self.p, self.example) {
            (Some(p), _) => Ok(p),
            (None, ExampleId::Unconstrained) => Ok(0.0),
            (None, _) => Err(bad("missing `p`")),
        }
    }

    pub fn require_out(&self) -> Result<&PathBuf, Error> {
        self.out.as_ref().ok_or_else(|| bad("missing `out`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments() {
        let raw = parse_text("# run\nn = 100\np=20 # penalty\n\nexample = 2\na = -1\n").unwrap();
        let cfg = Config::from_raw(&raw).unwrap();
        assert_eq!(cfg.n, Some(100));
        assert_eq!(cfg.p, Some(20.0));
        assert_eq!(cfg.example, ExampleId::Two { a: -1.0 });
        assert_eq!(cfg.horizon, 1.0);
        assert_eq!(cfg.lambda, 5.0);
        assert_eq!(cfg.scheme, Scheme::Explicit);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(parse_text("gamma = 1").is_err());
        assert!(parse_text("n = 1\nn = 2").is_err());
        assert!(parse_text("n 1").is_err());
    }

    #[test]
    fn example2_needs_a() {
        let raw = parse_text("example = 2").unwrap();
        assert!(matches!(Config::from_raw(&raw), Err(Error::Config(_))));
        let raw = parse_text("example = 1\na = 1").unwrap();
        assert!(Config::from_raw(&raw).is_err());
    }

    #[test]
    fn lists() {
        let raw = parse_text("n_list = 100, 200\np_list =").unwrap();
        let cfg = Config::from_raw(&raw).unwrap();
        assert_eq!(cfg.n_list, Some(vec![100, 200]));
        assert_eq!(cfg.p_list, Some(vec![]));
        assert!(Config::from_raw(&parse_text("n_list = 1,x").unwrap()).is_err());
    }

    #[test]
    fn unconstrained_defaults_p() {
        let cfg = Config::from_raw(&parse_text("example = unconstrained").unwrap()).unwrap();
        assert_eq!(cfg.require_p().unwrap(), 0.0);
        let cfg = Config::from_raw(&parse_text("example = 1").unwrap()).unwrap();
        assert!(cfg.require_p().is_err());
    }
}
