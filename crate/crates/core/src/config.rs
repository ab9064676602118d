//! Plain-text key/value configuration files.
//!
//! One `key = value` pair per line, `#` starts a comment. The same schema
//! serves device profiles, energy tables, and model descriptions.

use std::collections::BTreeMap;
use std::path::Path;

use crate::SimError;

#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    values: BTreeMap<String, String>,
    source: String,
}

impl KvConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, SimError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(SimError::Config(format!(
                    "{source}:{}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = k.trim().to_string();
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(SimError::Config(format!(
                    "{source}:{}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(KvConfig {
            values,
            source: source.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, SimError> {
        self.get(key).ok_or_else(|| {
            SimError::Config(format!("{}: missing required key `{key}`", self.source))
        })
    }

    pub fn u64(&self, key: &str) -> Result<u64, SimError> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| SimError::Config(format!("{}: `{key}` is not an integer: {v}", self.source)))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, SimError> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.u64(key),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, SimError> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| SimError::Config(format!("{}: `{key}` is not a number: {v}", self.source)))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, SimError> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.f64(key),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, SimError> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(SimError::Config(format!(
                "{}: `{key}` is not a boolean: {v}",
                self.source
            ))),
        }
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|s| s.as_str())
    }
}
