//! Flat key-value configuration. Every key is the long name of a flag;
//! a flag given on the command line overrides the file, and anything
//! missing from both falls back to a built-in default. The resolved value
//! and where it came from are both echoed into the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Flag,
    Config,
    Default,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Flag => "flag",
            Source::Config => "config",
            Source::Default => "default",
        }
    }
}

#[derive(Debug, Default)]
pub struct Resolver {
    table: toml::Table,
    used: BTreeSet<String>,
    values: BTreeMap<String, Value>,
    sources: BTreeMap<String, &'static str>,
}

/// Resolved configuration, ready for the manifest.
#[derive(Debug, Clone, Default)]
pub struct Resolved {
    pub values: BTreeMap<String, Value>,
    pub sources: BTreeMap<String, &'static str>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        for (key, value) in &table {
            if value.is_table() {
                return Err(CliError::Config(format!("key `{key}`: nested tables are not supported")));
            }
        }
        Ok(Self { table, ..Self::default() })
    }

    fn lookup(&mut self, key: &str) -> Option<toml::Value> {
        let v = self.table.get(key).cloned();
        if v.is_some() {
            self.used.insert(key.to_owned());
        }
        v
    }

    fn record(&mut self, key: &str, value: Value, source: Source) {
        self.values.insert(key.to_owned(), value);
        self.sources.insert(key.to_owned(), source.name());
    }

    fn pick<T>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
        convert: impl Fn(&toml::Value) -> Option<T>,
        echo: impl Fn(&T) -> Value,
    ) -> Result<T, CliError> {
        let from_file = self.lookup(key);
        let (value, source) = match (flag, from_file) {
            (Some(v), _) => (v, Source::Flag),
            (None, Some(raw)) => {
                let v =
                    convert(&raw).ok_or_else(|| CliError::Config(format!("key `{key}`: unexpected value {raw}")))?;
                (v, Source::Config)
            }
            (None, None) => (default, Source::Default),
        };
        self.record(key, echo(&value), source);
        Ok(value)
    }

    pub fn f64(&mut self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, CliError> {
        let v = self.pick(key, flag, default, as_f64, |v| number(*v))?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn usize(&mut self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, CliError> {
        self.pick(key, flag, default, |v| v.as_integer().and_then(|i| usize::try_from(i).ok()), |v| Value::from(*v))
    }

    pub fn f64_list(&mut self, key: &str, flag: Option<Vec<f64>>, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let v = self.pick(
            key,
            flag,
            default.to_vec(),
            |v| match v {
                toml::Value::Array(items) => items.iter().map(as_f64).collect(),
                other => as_f64(other).map(|x| vec![x]),
            },
            |v| Value::Array(v.iter().map(|x| number(*x)).collect()),
        )?;
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("`{key}` must be a non-empty list of finite numbers")));
        }
        Ok(v)
    }

    pub fn bool(&mut self, key: &str, flag: bool, default: bool) -> Result<bool, CliError> {
        self.pick(key, flag.then_some(true), default, toml::Value::as_bool, |v| Value::Bool(*v))
    }

    pub fn string(&mut self, key: &str, flag: Option<String>, default: &str) -> Result<String, CliError> {
        self.pick(key, flag, default.to_owned(), |v| v.as_str().map(str::to_owned), |v| Value::String(v.clone()))
    }

    /// Fails on config keys that no scenario parameter consumed.
    pub fn finish(self) -> Result<Resolved, CliError> {
        let unknown: Vec<&String> = self.table.keys().filter(|k| !self.used.contains(*k)).collect();
        if !unknown.is_empty() {
            let list: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(CliError::Config(format!("unknown keys for this scenario: {}", list.join(", "))));
        }
        Ok(Resolved { values: self.values, sources: self.sources })
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
