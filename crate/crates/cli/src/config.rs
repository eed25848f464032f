//! Flat `key = value` configuration with a typed schema.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {key:?}: cannot parse {value:?} as {kind}")]
    Type { key: String, value: String, kind: &'static str },
    #[error("key {key:?}: {reason}")]
    Invalid { key: String, reason: String },
}

/// A typed configuration value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Floats(Vec<f64>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Float(_) => "float",
            Value::Int(_) => "integer",
            Value::Bool(_) => "bool",
            Value::Text(_) => "string",
            Value::Floats(_) => "list of floats",
        }
    }

    /// Parse `text` as a value of the same kind as `self`.
    fn parse_like(&self, key: &str, text: &str) -> Result<Value, ConfigError> {
        let err = || ConfigError::Type { key: key.into(), value: text.into(), kind: self.kind() };
        let float = |s: &str| s.trim().parse::<f64>().ok().filter(|x| !x.is_nan());
        Ok(match self {
            Value::Float(_) => Value::Float(float(text).ok_or_else(err)?),
            Value::Int(_) => Value::Int(text.trim().replace('_', "").parse().map_err(|_| err())?),
            Value::Bool(_) => Value::Bool(match text.trim() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                _ => return Err(err()),
            }),
            Value::Text(_) => Value::Text(text.trim().to_string()),
            Value::Floats(_) => Value::Floats(
                text.split(',').map(|s| float(s).ok_or_else(err)).collect::<Result<Vec<_>, _>>()?,
            ),
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => write!(f, "{s}"),
            Value::Floats(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// One documented key with its default.
#[derive(Debug, Clone)]
pub struct Key {
    pub name: String,
    pub default: Value,
    pub doc: &'static str,
}

pub fn key(name: &str, default: Value, doc: &'static str) -> Key {
    Key { name: name.into(), default, doc }
}

/// Values for every key of a schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    values: BTreeMap<String, Value>,
}

impl Config {
    pub fn from_schema(schema: &[Key]) -> Self {
        Self { values: schema.iter().map(|k| (k.name.clone(), k.default.clone())).collect() }
    }

    /// Set `key` from text, typed by its default.
    pub fn set(&mut self, key: &str, text: &str) -> Result<(), ConfigError> {
        let current = self.values.get(key).ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
        let v = current.parse_like(key, text)?;
        self.values.insert(key.into(), v);
        Ok(())
    }

    /// `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line: 0, text: pair.into() })?;
        self.set(k.trim(), v)
    }

    /// Apply a config file: `key = value` lines, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: n + 1, text: raw.into() })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.values.iter()
    }

    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("key {key:?} missing from schema"))
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(x) => *x,
            Value::Int(i) => *i as f64,
            v => panic!("key {key:?} is a {}", v.kind()),
        }
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Int(i) => *i,
            v => panic!("key {key:?} is a {}", v.kind()),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        self.int(key) as usize
    }

    pub fn bool(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Bool(b) => *b,
            v => panic!("key {key:?} is a {}", v.kind()),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(s) => s,
            v => panic!("key {key:?} is a {}", v.kind()),
        }
    }

    pub fn floats(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::Floats(v) => v,
            v => panic!("key {key:?} is a {}", v.kind()),
        }
    }

    /// The keys under `prefix.`, with the prefix removed.
    pub fn section(&self, prefix: &str) -> Config {
        let p = format!("{prefix}.");
        Config {
            values: self
                .values
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(&p).map(|s| (s.to_string(), v.clone())))
                .collect(),
        }
    }

    /// `key = value` lines in key order.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<Key> {
        vec![
            key("n", Value::Int(10), ""),
            key("tol", Value::Float(1e-6), ""),
            key("speeds", Value::Floats(vec![1.0, 2.0]), ""),
            key("mode", Value::Text("none".into()), ""),
            key("on", Value::Bool(false), ""),
        ]
    }

    #[test]
    fn typed_overrides() {
        let mut c = Config::from_schema(&schema());
        c.apply_text("n = 1_000 # comment\n\nspeeds = 1, 10,100\n").unwrap();
        c.set_pair("on=true").unwrap();
        assert_eq!(c.int("n"), 1000);
        assert_eq!(c.floats("speeds"), &[1.0, 10.0, 100.0]);
        assert!(c.bool("on"));
        assert_eq!(c.text("mode"), "none");
    }

    #[test]
    fn rejects_malformed() {
        let mut c = Config::from_schema(&schema());
        assert!(matches!(c.set_pair("bogus=1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(c.set_pair("n=1.5"), Err(ConfigError::Type { .. })));
        assert!(matches!(c.apply_text("tol 3"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(c.set_pair("tol=nan"), Err(ConfigError::Type { .. })));
    }

    #[test]
    fn echo_round_trips() {
        let mut c = Config::from_schema(&schema());
        c.set_pair("tol=0.1").unwrap();
        let mut d = Config::from_schema(&schema());
        d.apply_text(&c.echo()).unwrap();
        assert_eq!(c, d);
    }
}
