//! Flat `key = value` text format with dotted section names.
//!
//! ```text
//! # comment
//! perp.power_mw = 152
//! transition.initial = 5/2
//! ```
//!
//! Values keep their source line so that validation errors can point at it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Entry {
    pub value: String,
    /// 1-based source line; 0 for values injected programmatically.
    pub line: usize,
}

#[derive(Clone, Debug, Default)]
pub struct KvDoc {
    entries: BTreeMap<String, Entry>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: format!("expected `key = value`, found `{body}`"),
                });
            };
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(Error::Config {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if key.split('.').count() > 2 || key.split('.').any(str::is_empty) {
                return Err(Error::Config {
                    line,
                    message: format!("key `{key}` must be `name` or `section.name`"),
                });
            }
            if let Some(prev) = entries.get(key) {
                let prev: &Entry = prev;
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            );
        }
        Ok(KvDoc { entries })
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: 0,
            },
        );
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Entry)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e))
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.entries.get(key).map_or(default, |e| e.value.as_str())
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| Error::Config {
                    line: e.line,
                    message: format!("`{key}`: expected a finite number, found `{}`", e.value),
                }),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse::<usize>().map_err(|_| Error::Config {
                line: e.line,
                message: format!("`{key}`: expected a non-negative integer, found `{}`", e.value),
            }),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(Error::Config {
                    line: e.line,
                    message: format!("`{key}`: expected true/false, found `{}`", e.value),
                }),
            },
        }
    }

    /// Error if any key is not in `known`; `known` entries ending in `.*`
    /// accept any key in that section.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        for (key, e) in &self.entries {
            let ok = known.iter().any(|k| match k.strip_suffix(".*") {
                Some(section) => key.split_once('.').is_some_and(|(s, _)| s == section),
                None => k == key,
            });
            if !ok {
                return Err(Error::Config {
                    line: e.line,
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }

    pub fn config_error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.line_of(key),
            message: format!("`{key}`: {}", message.into()),
        }
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect()
    }
}
