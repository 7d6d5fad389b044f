//! `key = value` configuration files. Keys are long flag names without the
//! leading dashes; `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::Failure;

pub const KEYS: &[&str] = &[
    "stats", "n", "alpha", "beta", "rho", "beta-rho23", "rho-min", "rho-max", "points", "format", "out", "seed",
    "radius", "s-max",
];

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(Failure::Usage(format!("config line {}: unknown key '{key}'", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|e| Failure::Usage(format!("config key '{key}': {e}"))))
            .transpose()
    }

    /// The flag value if given, else the file value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.pick(flag, key)?.ok_or_else(|| Failure::Usage(format!("missing required value --{key}")))
    }
}
