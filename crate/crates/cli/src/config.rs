//! Flat `key = value` configuration files and their merge with CLI flags.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Keys may use `-` or `_`. Flags given on the command line override the
//! file, and `beta` (shorthand for `alpha` with `L = 1`) displaces
//! `alpha_re`/`length` from the layer below it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use stargraph::rootfinder::{DEFAULT_IM_BOUND, DEFAULT_TOL};
use stargraph::StarModel;

use crate::{CliError, Result};

pub const CONFIG_ENV: &str = "STARGRAPH_CONFIG";

const KNOWN_KEYS: &[&str] = &[
    "q", "length", "alpha_re", "alpha_im", "beta", "tol", "im_bound", "out", "format", "threads",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Raw values of the common options; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommonValues {
    pub q: Option<usize>,
    pub length: Option<f64>,
    pub alpha_re: Option<f64>,
    pub alpha_im: Option<f64>,
    pub beta: Option<f64>,
    pub tol: Option<f64>,
    pub im_bound: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

/// Fully resolved settings shared by all commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Effective {
    pub q: usize,
    pub length: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub tol: f64,
    pub im_bound: f64,
    pub seed: u64,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Effective {
    pub fn model(&self) -> Result<StarModel> {
        Ok(StarModel::new(
            self.q,
            self.length,
            Complex64::new(self.alpha_re, self.alpha_im),
        )?)
    }

    /// Settings as an ordered map, ready to be extended by a command.
    pub fn to_map(&self) -> BTreeMap<String, serde_json::Value> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(m)) => m.into_iter().collect(),
            _ => BTreeMap::new(),
        }
    }
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses the flat config format into a key/value map.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = normalize(k);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{}`", i + 1, key)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value `{v}` for `{key}`")))
}

impl CommonValues {
    fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| map.get(k).map(String::as_str);
        Ok(Self {
            q: get("q").map(|v| parse_value("q", v)).transpose()?,
            length: get("length").map(|v| parse_value("length", v)).transpose()?,
            alpha_re: get("alpha_re").map(|v| parse_value("alpha_re", v)).transpose()?,
            alpha_im: get("alpha_im").map(|v| parse_value("alpha_im", v)).transpose()?,
            beta: get("beta").map(|v| parse_value("beta", v)).transpose()?,
            tol: get("tol").map(|v| parse_value("tol", v)).transpose()?,
            im_bound: get("im_bound").map(|v| parse_value("im_bound", v)).transpose()?,
            out: get("out").map(PathBuf::from),
            format: match get("format") {
                None => None,
                Some("json") => Some(Format::Json),
                Some("csv") => Some(Format::Csv),
                Some(other) => return Err(CliError::Usage(format!("invalid format `{other}`"))),
            },
            threads: get("threads").map(|v| parse_value("threads", v)).transpose()?,
            seed: get("seed").map(|v| parse_value("seed", v)).transpose()?,
        })
    }

    /// `self` on top of `lower`.
    fn over(self, lower: CommonValues) -> CommonValues {
        let mut lower = lower;
        if self.beta.is_some() {
            lower.alpha_re = None;
            lower.length = None;
        }
        if self.alpha_re.is_some() || self.length.is_some() {
            lower.beta = None;
        }
        CommonValues {
            q: self.q.or(lower.q),
            length: self.length.or(lower.length),
            alpha_re: self.alpha_re.or(lower.alpha_re),
            alpha_im: self.alpha_im.or(lower.alpha_im),
            beta: self.beta.or(lower.beta),
            tol: self.tol.or(lower.tol),
            im_bound: self.im_bound.or(lower.im_bound),
            out: self.out.or(lower.out),
            format: self.format.or(lower.format),
            threads: self.threads.or(lower.threads),
            seed: self.seed.or(lower.seed),
        }
    }

    fn finish(self) -> Result<Effective> {
        let q = self
            .q
            .ok_or_else(|| CliError::Usage("missing --q (edge count)".into()))?;
        let (length, alpha_re) = match (self.beta, self.alpha_re, self.length) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(CliError::Usage(
                    "--beta is shorthand for alpha with L = 1; do not combine it with --alpha-re or --length".into(),
                ))
            }
            (Some(beta), None, None) => (1.0, beta),
            (None, Some(a), l) => (l.unwrap_or(1.0), a),
            (None, None, _) => {
                return Err(CliError::Usage("missing coupling: give --beta or --alpha-re".into()))
            }
        };
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Usage(format!("--tol must lie in (0, 1), got {tol}")));
        }
        let im_bound = self.im_bound.unwrap_or(DEFAULT_IM_BOUND);
        if !(im_bound > 0.0 && im_bound.is_finite()) {
            return Err(CliError::Usage(format!("--im-bound must be positive, got {im_bound}")));
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok(Effective {
            q,
            length,
            alpha_re,
            alpha_im: self.alpha_im.unwrap_or(0.0),
            tol,
            im_bound,
            seed: self.seed.unwrap_or(0),
            format: self.format.unwrap_or_default(),
            out: self.out,
            threads: self.threads,
        })
    }
}

/// Merges CLI values over the config file (explicit path, else `$STARGRAPH_CONFIG`).
pub fn resolve(cli: CommonValues, config: Option<&Path>) -> Result<Effective> {
    let path = config
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let file = match path {
        Some(p) => CommonValues::from_map(&load_config(&p)?)?,
        None => CommonValues::default(),
    };
    cli.over(file).finish()
}

/// Like [`resolve`] with an in-memory config map, for callers that already parsed one.
pub fn resolve_with_map(cli: CommonValues, file: &BTreeMap<String, String>) -> Result<Effective> {
    cli.over(CommonValues::from_map(file)?).finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let m = parse_config("# model\nq = 4\nalpha-re = 0.5 # inline\n\nim_bound=3\n").unwrap();
        assert_eq!(m["q"], "4");
        assert_eq!(m["alpha_re"], "0.5");
        assert_eq!(m["im_bound"], "3");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(parse_config("colour = red"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config("q 4"), Err(CliError::Usage(_))));
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("q = 4\nbeta = 2\ntol = 1e-12").unwrap();
        let cli = CommonValues {
            q: Some(5),
            ..Default::default()
        };
        let e = resolve_with_map(cli, &file).unwrap();
        assert_eq!((e.q, e.alpha_re, e.length, e.tol), (5, 2.0, 1.0, 1e-12));

        let cli = CommonValues {
            alpha_re: Some(0.3),
            length: Some(2.0),
            ..Default::default()
        };
        let e = resolve_with_map(cli, &file).unwrap();
        assert_eq!((e.alpha_re, e.length), (0.3, 2.0));
    }

    #[test]
    fn beta_conflicts_with_alpha_on_one_layer() {
        let cli = CommonValues {
            q: Some(3),
            beta: Some(1.0),
            alpha_re: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(cli.finish(), Err(CliError::Usage(_))));
    }

    #[test]
    fn missing_q_is_a_usage_error() {
        let cli = CommonValues {
            beta: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(cli.finish(), Err(CliError::Usage(_))));
    }
}
