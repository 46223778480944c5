//! `key = value` configuration files.
//!
//! One entry per line; `#` starts a comment; keys may be dotted
//! (`grid.alpha = 0:1:0.01`). Later entries override earlier ones.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optimizer::Axis;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value', got '{raw}'", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key or value", lineno + 1)));
            }
            entries.insert(k.to_string(), v.to_string());
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("{key}: not a number: '{v}'"))))
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| v.parse::<u64>().map_err(|_| Error::Parse(format!("{key}: not an unsigned integer: '{v}'"))))
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// `grid.<name>` entries as axes, sorted by name.
    pub fn grid_axes(&self) -> Result<Vec<(String, Axis)>> {
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("grid.").map(|name| (name, v)))
            .map(|(name, v)| Ok((name.to_string(), v.parse::<Axis>()?)))
            .collect()
    }
}
