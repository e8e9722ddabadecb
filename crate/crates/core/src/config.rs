//! Plain-text `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored; trailing `# …`
//! comments are stripped. Keys are case-sensitive. Later duplicates override
//! earlier ones.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("key '{key}': cannot parse '{value}'")]
    Value { key: String, value: String },
    #[error("missing required key '{0}'")]
    Missing(String),
    #[error("unknown key '{0}'")]
    Unknown(String),
    #[error("{0}")]
    Invalid(String),
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::Value { key: key.to_string(), value: v.clone() }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some(v) = self.entries.get(key) else { return Ok(None) };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| ConfigError::Value { key: key.to_string(), value: s.to_string() }))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    /// Fails on any key outside `allowed`.
    pub fn check_known(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::Unknown(k.clone())),
            None => Ok(()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Canonical `key=value` lines in key order.
    pub fn canonical(&self) -> String {
        self.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let kv = KeyValues::parse("# header\nnx = 32\n\nschemes = epi3, exprb42 # trailing\ndt=0.5,0.25\n").unwrap();
        assert_eq!(kv.require::<usize>("nx").unwrap(), 32);
        assert_eq!(kv.get_list::<String>("schemes").unwrap().unwrap(), vec!["epi3", "exprb42"]);
        assert_eq!(kv.get_list::<f64>("dt").unwrap().unwrap(), vec![0.5, 0.25]);
        assert_eq!(kv.get_or("missing", 3.0).unwrap(), 3.0);
        assert!(kv.check_known(&["nx", "schemes"]).is_err());
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(KeyValues::parse("novalue"), Err(ConfigError::Syntax { line: 1, .. })));
        let kv = KeyValues::parse("nx = abc").unwrap();
        assert!(kv.get::<usize>("nx").is_err());
        assert!(matches!(kv.require::<f64>("dx"), Err(ConfigError::Missing(_))));
    }

    #[test]
    fn canonical_is_order_independent() {
        let a = KeyValues::parse("b=2\na=1").unwrap();
        let b = KeyValues::parse("a = 1\nb = 2").unwrap();
        assert_eq!(a.canonical(), b.canonical());
    }
}
