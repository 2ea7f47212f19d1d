//! Frozen constants as flat `key = value` text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Golden {
    values: BTreeMap<String, f64>,
}

/// Outcome of comparing a measurement with its frozen value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenComparison {
    pub frozen: f64,
    pub measured: f64,
    pub relative: f64,
    pub within: bool,
}

impl Golden {
    /// Lines are `key = value`; `#` starts a comment.
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                context: format!("{context}:{}", n + 1),
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected 'key = value', got '{line}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("value of '{}': {e}", k.trim())))?;
            values.insert(k.trim().to_string(), v);
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v:e}");
        }
        out
    }

    pub fn compare(&self, key: &str, measured: f64, slack: f64) -> Result<GoldenComparison> {
        let frozen = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("golden value '{key}' is missing")))?;
        let relative = if frozen == measured {
            0.0
        } else {
            (measured - frozen).abs() / frozen.abs().max(f64::MIN_POSITIVE)
        };
        Ok(GoldenComparison {
            frozen,
            measured,
            relative,
            within: relative <= slack,
        })
    }
}
