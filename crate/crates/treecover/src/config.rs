//! Run configuration: a flat parameter map plus seed, workers and output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::report::Format;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: None,
            seed: None,
            workers: None,
            out: None,
            format: None,
            params: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// TOML for `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            _ => serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
        }
    }

    /// Fields set in `other` win.
    pub fn merge(mut self, other: RunConfig) -> RunConfig {
        if other.experiment.is_some() {
            self.experiment = other.experiment;
        }
        if other.seed.is_some() {
            self.seed = other.seed;
        }
        if other.workers.is_some() {
            self.workers = other.workers;
        }
        if other.out.is_some() {
            self.out = other.out;
        }
        if other.format.is_some() {
            self.format = other.format;
        }
        self.params.extend(other.params);
        self
    }
}

/// Parse `value` as JSON when possible, else keep it as a string.
pub fn parse_value(value: &str) -> Value {
    serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()))
}

/// Parameters handed to an experiment. Every lookup records the value used,
/// defaults included, so reports show the effective configuration.
#[derive(Debug, Default)]
pub struct Params {
    given: BTreeMap<String, Value>,
    used: Mutex<BTreeMap<String, Value>>,
}

impl Clone for Params {
    fn clone(&self) -> Self {
        Params {
            given: self.given.clone(),
            used: Mutex::new(self.effective()),
        }
    }
}

impl Params {
    pub fn new(given: BTreeMap<String, Value>) -> Params {
        Params {
            given,
            used: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Value)>) -> Params {
        Params::new(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn given(&self) -> &BTreeMap<String, Value> {
        &self.given
    }

    pub fn contains(&self, key: &str) -> bool {
        self.given.contains_key(key)
    }

    fn record(&self, key: &str, v: Value) {
        self.used.lock().expect("params lock").insert(key.to_string(), v);
    }

    pub fn effective(&self) -> BTreeMap<String, Value> {
        self.used.lock().expect("params lock").clone()
    }

    /// Keys given but never read.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.lock().expect("params lock");
        self.given.keys().filter(|k| !used.contains_key(*k)).cloned().collect()
    }

    fn bad(key: &str, v: &Value, want: &str) -> Error {
        Error::Config(format!("parameter {key} = {v} is not {want}"))
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        let v = match self.given.get(key) {
            None => default,
            Some(v) => v.as_f64().ok_or_else(|| Self::bad(key, v, "a number"))?,
        };
        self.record(key, Value::from(v));
        Ok(v)
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64> {
        let v = match self.given.get(key) {
            None => default,
            Some(v) => v.as_u64().ok_or_else(|| Self::bad(key, v, "a nonnegative integer"))?,
        };
        self.record(key, Value::from(v));
        Ok(v)
    }

    pub fn u32(&self, key: &str, default: u32) -> Result<u32> {
        let v = self.u64(key, default as u64)?;
        u32::try_from(v).map_err(|_| Error::Config(format!("parameter {key} = {v} too large")))
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64(key, default as u64)? as usize)
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String> {
        let v = match self.given.get(key) {
            None => default.to_string(),
            Some(v) => v.as_str().ok_or_else(|| Self::bad(key, v, "a string"))?.to_string(),
        };
        self.record(key, Value::from(v.clone()));
        Ok(v)
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        let v = match self.given.get(key) {
            None => default,
            Some(v) => v.as_bool().ok_or_else(|| Self::bad(key, v, "a boolean"))?,
        };
        self.record(key, Value::from(v));
        Ok(v)
    }

    /// A list of integers; a single integer is read as a one-element list.
    pub fn u32_list(&self, key: &str, default: &[u32]) -> Result<Vec<u32>> {
        let v = match self.given.get(key) {
            None => default.to_vec(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| x.as_u64().and_then(|x| u32::try_from(x).ok()).ok_or_else(|| Self::bad(key, x, "an integer")))
                .collect::<Result<_>>()?,
            Some(v) => vec![v
                .as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| Self::bad(key, v, "an integer list"))?],
        };
        self.record(key, Value::from(v.clone()));
        Ok(v)
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.given.get(key) {
            None => default.to_vec(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Self::bad(key, x, "a number")))
                .collect::<Result<_>>()?,
            Some(v) => vec![v.as_f64().ok_or_else(|| Self::bad(key, v, "a number list"))?],
        };
        self.record(key, Value::from(v.clone()));
        Ok(v)
    }

    /// Sub-map for a nested experiment: keys `prefix.x` become `x`, and
    /// plain keys pass through unless shadowed.
    pub fn scoped(&self, prefix: &str) -> Params {
        let mut given: BTreeMap<String, Value> = self
            .given
            .iter()
            .filter(|(k, _)| !k.contains('.'))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let dotted = format!("{prefix}.");
        for (k, v) in &self.given {
            if let Some(rest) = k.strip_prefix(&dotted) {
                given.insert(rest.to_string(), v.clone());
            }
        }
        Params::new(given)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_recorded() {
        let p = Params::from_pairs([("n", Value::from(8)), ("s", Value::from(1.5))]);
        assert_eq!(p.u32("n", 3).unwrap(), 8);
        assert_eq!(p.f64("s", 0.0).unwrap(), 1.5);
        assert_eq!(p.f64("t", 2.0).unwrap(), 2.0);
        let e = p.effective();
        assert_eq!(e["t"], Value::from(2.0));
        assert_eq!(e.len(), 3);
        assert!(p.unused().is_empty());
    }

    #[test]
    fn type_errors() {
        let p = Params::from_pairs([("n", Value::from("eight")), ("k", Value::from(-1))]);
        assert!(p.u32("n", 3).is_err());
        assert!(p.u64("k", 3).is_err());
        assert_eq!(p.f64("k", 0.0).unwrap(), -1.0);
    }

    #[test]
    fn lists() {
        let p = Params::from_pairs([("ns", serde_json::json!([10, 12])), ("one", Value::from(4))]);
        assert_eq!(p.u32_list("ns", &[]).unwrap(), vec![10, 12]);
        assert_eq!(p.u32_list("one", &[]).unwrap(), vec![4]);
        assert_eq!(p.f64_list("xs", &[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn scoping() {
        let p = Params::from_pairs([("replicas", Value::from(5)), ("cover.replicas", Value::from(9)), ("hitting.n", Value::from(3))]);
        let c = p.scoped("cover");
        assert_eq!(c.u64("replicas", 0).unwrap(), 9);
        assert!(!c.contains("n"));
        assert_eq!(p.scoped("moments").u64("replicas", 0).unwrap(), 5);
    }

    #[test]
    fn load_toml_and_json() {
        let dir = std::env::temp_dir().join(format!("treecover-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let t = dir.join("run.toml");
        std::fs::write(&t, "experiment = \"cover\"\nseed = 7\nformat = \"both\"\n[params]\nn = 10\nns = [10, 12]\n").unwrap();
        let c = RunConfig::load(&t).unwrap();
        assert_eq!(c.experiment.as_deref(), Some("cover"));
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.format, Some(Format::Both));
        assert_eq!(c.params["n"], Value::from(10));
        let j = dir.join("run.json");
        std::fs::write(&j, r#"{"experiment":"moments","params":{"t":2.5}}"#).unwrap();
        let c2 = RunConfig::load(&j).unwrap();
        let merged = c.clone().merge(c2);
        assert_eq!(merged.experiment.as_deref(), Some("moments"));
        assert_eq!(merged.seed, Some(7));
        assert_eq!(merged.params.len(), 3);
        std::fs::write(&j, r#"{"experment":"x"}"#).unwrap();
        assert!(RunConfig::load(&j).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn value_parsing() {
        assert_eq!(parse_value("3"), Value::from(3));
        assert_eq!(parse_value("2.5"), Value::from(2.5));
        assert_eq!(parse_value("[1,2]"), serde_json::json!([1, 2]));
        assert_eq!(parse_value("event-loop"), Value::from("event-loop"));
    }
}
