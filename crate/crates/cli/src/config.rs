//! Flat `key = value` scenario files.
//!
//! One entry per line, `#` starts a comment, keys are namespaced with dots
//! (`noise.sigma_eps`). Every key present in the file must be consumed by the
//! selected scenario; leftovers are reported as unknown.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { key: None, line: None, message: message.into() }
    }

    fn at(key: &str, line: usize, message: impl Into<String>) -> Self {
        Self { key: Some(key.to_string()), line: Some(line), message: message.into() }
    }

    fn missing(key: &str) -> Self {
        Self { key: Some(key.to_string()), line: None, message: "required key is missing".into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.key, self.line) {
            (Some(k), Some(l)) => write!(f, "`{k}` (line {l}): {}", self.message),
            (Some(k), None) => write!(f, "`{k}`: {}", self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    used: RefCell<BTreeSet<String>>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        })
}

impl FromStr for Config {
    type Err = ConfigError;

    fn from_str(text: &str) -> ConfigResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError { key: None, line: Some(line), message: "expected `key = value`".into() });
            };
            let (key, value) = (key.trim(), value.trim());
            if !valid_key(key) {
                return Err(ConfigError::at(key, line, "keys use lowercase letters, digits, `_` and `.`"));
            }
            if value.is_empty() {
                return Err(ConfigError::at(key, line, "empty value"));
            }
            if let Some(prev) = entries.get::<str>(key) {
                let prev: &Entry = prev;
                return Err(ConfigError::at(key, line, format!("duplicate key (first set on line {})", prev.line)));
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        Ok(Self { entries, used: RefCell::new(BTreeSet::new()) })
    }
}

impl Config {
    fn entry(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(e)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    /// Error tied to `key` and its line, for range checks done by callers.
    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        match self.line(key) {
            Some(line) => ConfigError::at(key, line, message),
            None => ConfigError { key: Some(key.to_string()), line: None, message: message.into() },
        }
    }

    pub fn string(&self, key: &str) -> ConfigResult<Option<&str>> {
        Ok(self.entry(key).map(|e| e.value.as_str()))
    }

    pub fn require_string(&self, key: &str) -> ConfigResult<&str> {
        self.string(key)?.ok_or_else(|| ConfigError::missing(key))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> ConfigResult<Option<T>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(key, e.line, format!("cannot parse `{}`", e.value))),
        }
    }

    pub fn real(&self, key: &str) -> ConfigResult<Option<f64>> {
        match self.parse::<f64>(key)? {
            Some(x) if !x.is_finite() => Err(self.error(key, "must be finite")),
            v => Ok(v),
        }
    }

    pub fn positive(&self, key: &str) -> ConfigResult<Option<f64>> {
        match self.real(key)? {
            Some(x) if x <= 0.0 => Err(self.error(key, format!("must be > 0, got {x}"))),
            v => Ok(v),
        }
    }

    pub fn require_positive(&self, key: &str) -> ConfigResult<f64> {
        self.positive(key)?.ok_or_else(|| ConfigError::missing(key))
    }

    pub fn boolean(&self, key: &str) -> ConfigResult<Option<bool>> {
        self.parse(key)
    }

    /// Angular frequency given as `key` (rad/s) or `key_hz` (Hz), not both.
    pub fn frequency(&self, key: &str) -> ConfigResult<Option<f64>> {
        let hz_key = format!("{key}_hz");
        match (self.contains(key), self.contains(&hz_key)) {
            (true, true) => Err(self.error(&hz_key, format!("conflicts with `{key}`; give one of the two"))),
            (false, true) => Ok(self.positive(&hz_key)?.map(|f| 2.0 * PI * f)),
            _ => self.positive(key),
        }
    }

    pub fn require_frequency(&self, key: &str) -> ConfigResult<f64> {
        self.frequency(key)?.ok_or_else(|| ConfigError::missing(key))
    }

    /// A grid of positive values: `a, b, c`, `lin(start, stop, n)` or
    /// `geom(start, stop, n)`.
    pub fn grid(&self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        let Some(e) = self.entry(key) else { return Ok(None) };
        let bad = |m: String| ConfigError::at(key, e.line, m);
        let v = e.value.as_str();
        let values = if let Some(args) = v.strip_prefix("lin(").or(v.strip_prefix("geom(")) {
            let args = args.strip_suffix(')').ok_or_else(|| bad("unclosed `(`".into()))?;
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            let [a, b, n] = parts[..] else { return Err(bad("expected (start, stop, count)".into())) };
            let a: f64 = a.parse().map_err(|_| bad(format!("cannot parse `{a}`")))?;
            let b: f64 = b.parse().map_err(|_| bad(format!("cannot parse `{b}`")))?;
            let n: usize = n.parse().map_err(|_| bad(format!("cannot parse count `{n}`")))?;
            if n == 0 {
                return Err(bad("count must be ≥ 1".into()));
            }
            let frac = |k: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
            if v.starts_with("lin(") {
                (0..n).map(|k| a + (b - a) * frac(k)).collect::<Vec<_>>()
            } else {
                if !(a > 0.0 && b > 0.0) {
                    return Err(bad("geom bounds must be > 0".into()));
                }
                (0..n).map(|k| a * (b / a).powf(frac(k))).collect()
            }
        } else {
            v.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("cannot parse `{}`", s.trim()))))
                .collect::<ConfigResult<Vec<_>>>()?
        };
        if let Some(x) = values.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(bad(format!("grid values must be finite and > 0, got {x}")));
        }
        Ok(Some(values))
    }

    pub fn require_grid(&self, key: &str) -> ConfigResult<Vec<f64>> {
        self.grid(key)?.ok_or_else(|| ConfigError::missing(key))
    }

    /// Frequency grid from `key` (rad/s) or `key_hz` (Hz).
    pub fn frequency_grid(&self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        let hz_key = format!("{key}_hz");
        match (self.contains(key), self.contains(&hz_key)) {
            (true, true) => Err(self.error(&hz_key, format!("conflicts with `{key}`; give one of the two"))),
            (false, true) => Ok(self.grid(&hz_key)?.map(|g| g.into_iter().map(|f| 2.0 * PI * f).collect())),
            _ => self.grid(key),
        }
    }

    pub fn require_frequency_grid(&self, key: &str) -> ConfigResult<Vec<f64>> {
        self.frequency_grid(key)?.ok_or_else(|| ConfigError::missing(key))
    }

    /// Fails on the first key (in file order) that nothing consumed.
    pub fn reject_unused(&self, scenario: &str) -> ConfigResult<()> {
        let used = self.used.borrow();
        let unused = self
            .entries
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .min_by_key(|(_, e)| e.line);
        match unused {
            Some((k, e)) => Err(ConfigError::at(k, e.line, format!("unknown key for scenario `{scenario}`"))),
            None => Ok(()),
        }
    }
}
