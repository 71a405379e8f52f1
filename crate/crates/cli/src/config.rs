//! Flat `key = value` config files with `[subcommand]` sections, merged under command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;

use crate::InvalidInput;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    pub sha256: Option<String>,
    global: BTreeMap<String, String>,
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).context("config file is not UTF-8").map_err(|e| InvalidInput(e.to_string()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.sha256 = Some(crate::output::sha256_hex(&bytes));
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, InvalidInput> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| InvalidInput(format!("config line {}: unterminated section header", no + 1)))?;
                section = Some(name.trim().to_ascii_lowercase());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| InvalidInput(format!("config line {}: expected key = value", no + 1)))?;
            let v = v.trim().trim_matches('"').to_string();
            let map = match &section {
                Some(s) => cfg.sections.entry(s.clone()).or_default(),
                None => &mut cfg.global,
            };
            map.insert(normalize(k), v);
        }
        Ok(cfg)
    }

    /// Section values layered over the unsectioned ones.
    pub fn for_command(&self, command: &str) -> BTreeMap<String, String> {
        let mut out = self.global.clone();
        if let Some(s) = self.sections.get(command) {
            out.extend(s.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        out
    }
}

/// Resolves each parameter from flag, then config, then default, and remembers the result.
#[derive(Debug)]
pub struct Settings {
    file: BTreeMap<String, String>,
    pub resolved: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            resolved: BTreeMap::new(),
        }
    }

    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, InvalidInput>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(
                    s.parse::<T>()
                        .map_err(|e| InvalidInput(format!("config key '{key}' = '{s}': {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, InvalidInput>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, InvalidInput>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.opt(key, flag)?
            .ok_or_else(|| InvalidInput(format!("missing required parameter '{key}'")))
    }

    pub fn flag(&mut self, key: &str, set: bool) -> Result<bool, InvalidInput> {
        self.get(key, set.then_some(true), false)
    }
}
