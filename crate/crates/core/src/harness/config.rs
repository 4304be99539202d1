//! Flat `key = value` configuration files with `#` comments.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every key accepted in a config file or through a flag.
pub const VALID_KEYS: &[&str] = &[
    "algorithm",
    "classes",
    "classifier",
    "count",
    "data",
    "dim",
    "epsilon",
    "eta",
    "features",
    "gamma",
    "header",
    "knn_k",
    "l0",
    "label_column",
    "lambda0",
    "lambdas",
    "max_d",
    "max_inner",
    "max_l",
    "name",
    "out",
    "rho",
    "samples",
    "seed",
    "sigma",
    "standardize",
    "steps",
    "support",
    "train_fraction",
    "trials",
];

fn unknown_key(key: &str) -> Error {
    Error::Usage(format!(
        "unknown key {key:?}; valid keys: {}",
        VALID_KEYS.join(", ")
    ))
}

/// Resolved settings: config file entries overlaid by command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: source.to_path_buf(),
                line: n + 1,
                message: format!("expected key = value, found {line:?}"),
            })?;
            let key = key.trim();
            if !VALID_KEYS.contains(&key) {
                return Err(unknown_key(key));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !VALID_KEYS.contains(&key) {
            return Err(unknown_key(key));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("invalid value {v:?} for key {key:?}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.get_str(key)
            .ok_or_else(|| Error::Usage(format!("missing required key {key:?}")))
    }

    /// `on`/`off` style switch.
    pub fn get_switch(&self, key: &str, default: bool) -> Result<bool> {
        match self.get_str(key) {
            None => Ok(default),
            Some("on" | "true" | "yes" | "1") => Ok(true),
            Some("off" | "false" | "no" | "0") => Ok(false),
            Some(v) => Err(Error::Usage(format!(
                "invalid switch {v:?} for key {key:?} (use on/off)"
            ))),
        }
    }

    /// The full key/value map, for provenance.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// `a,b,c` or `start:stop:step` (inclusive).
pub fn parse_list<T>(text: &str) -> Result<Vec<T>>
where
    T: FromStr + Copy + PartialOrd + std::ops::Add<Output = T>,
{
    let bad = || Error::Usage(format!("invalid list {text:?}"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let start: T = parts[0].parse().map_err(|_| bad())?;
        let stop: T = parts[1].parse().map_err(|_| bad())?;
        let step: T = parts[2].parse().map_err(|_| bad())?;
        if !(start + step > start) {
            return Err(bad());
        }
        let mut out = Vec::new();
        let mut v = start;
        while v <= stop {
            out.push(v);
            v = v + step;
        }
        return Ok(out);
    }
    text.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}
