//! Minimal `key = value` file support shared by the estimator-config and
//! scenario file formats.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Keys may repeat (repeated keys form ordered lists, used for trajectory
//! segments and wind phases).

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: cannot parse `{raw}` as {what}")]
    BadValue { key: String, raw: String, what: &'static str },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: Vec<(String, String)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(KvError::Syntax { line: idx + 1, text: raw_line.to_string() });
            };
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self, KvError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// First value for `key`, if present.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// All values for `key`, in file order.
    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingKey(key.to_string()))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

pub fn parse_f64(key: &str, raw: &str) -> Result<f64, KvError> {
    raw.trim().parse().map_err(|_| KvError::BadValue {
        key: key.to_string(),
        raw: raw.to_string(),
        what: "a number",
    })
}

pub fn parse_u64(key: &str, raw: &str) -> Result<u64, KvError> {
    raw.trim().parse().map_err(|_| KvError::BadValue {
        key: key.to_string(),
        raw: raw.to_string(),
        what: "an unsigned integer",
    })
}

/// Whitespace-separated list of numbers.
pub fn parse_f64_list(key: &str, raw: &str) -> Result<Vec<f64>, KvError> {
    raw.split_whitespace().map(|tok| parse_f64(key, tok)).collect()
}
