//! Flat `key = value` configuration with section prefixes.
//!
//! ```text
//! # global
//! out = runs
//! workers = 4
//! seed = 0
//!
//! data.cap = 500
//! train.model = qd
//! train.epochs = 100
//! ```
//!
//! A `[section]` line prefixes the keys that follow it, so `[train]` then
//! `epochs = 5` is the same as `train.epochs = 5`. A run manifest written by
//! any command is also accepted: its `config` object is read as the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

pub const KNOWN_KEYS: &[&str] = &[
    "out",
    "workers",
    "seed",
    "data.categories",
    "data.cache_dir",
    "data.local_dir",
    "data.synthetic",
    "data.tol",
    "data.split",
    "data.cap",
    "data.max_segments",
    "data.output",
    "train.model",
    "train.dataset",
    "train.epochs",
    "train.seeds",
    "train.batch_size",
    "train.lr",
    "train.hidden_size",
    "train.n_qubits",
    "train.angle_squash",
    "train.hea_layers",
    "train.svg",
    "train.sequential",
    "report.dir",
    "gradcheck.scope",
    "gradcheck.instances",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        if text.trim_start().starts_with('{') {
            return Self::from_manifest(text);
        }
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            Self::check_key(&key).map_err(|e| format!("line {}: {e}", n + 1))?;
            entries.insert(key, v.trim().to_string());
        }
        Ok(Self { entries })
    }

    fn from_manifest(text: &str) -> Result<Self, String> {
        let json: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let obj = json
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or("manifest has no `config` object")?;
        let mut entries = BTreeMap::new();
        for (k, v) in obj {
            Self::check_key(k)?;
            let v = v.as_str().ok_or_else(|| format!("config value for `{k}` must be a string"))?;
            entries.insert(k.clone(), v.to_string());
        }
        Ok(Self { entries })
    }

    fn check_key(key: &str) -> Result<(), String> {
        if KNOWN_KEYS.contains(&key) {
            Ok(())
        } else {
            Err(format!("unknown config key `{key}`"))
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Resolves settings as flag > config file > default and records the
/// effective values for the manifest.
pub struct Resolver<'c> {
    file: &'c ConfigFile,
    pub effective: BTreeMap<String, String>,
}

impl<'c> Resolver<'c> {
    pub fn new(file: &'c ConfigFile) -> Self {
        Self {
            file,
            effective: BTreeMap::new(),
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, String>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => s.parse().map_err(|e| format!("config key `{key}`: {e}"))?,
                None => default,
            },
        };
        self.effective.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, String>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) if !s.is_empty() => Some(s.parse().map_err(|e| format!("config key `{key}`: {e}"))?),
                _ => None,
            },
        };
        if let Some(v) = &value {
            self.effective.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }
}
