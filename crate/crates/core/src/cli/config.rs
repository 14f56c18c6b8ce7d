//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment line. Lists are
//! comma-separated, matrices separate rows with `;`. Values given with
//! `--set key=value` replace file values, and `--seed` replaces both.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use super::CliError;
use crate::rng::DEFAULT_SEED;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    /// Every key consulted, with defaults filled in.
    resolved: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("config line {}: expected key = value", number + 1)))?;
            config.set(key.trim(), value.trim());
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_owned(), value.to_owned());
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("override {assignment:?}: expected key=value")))?;
        self.set(key.trim(), value.trim());
        Ok(())
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.insert(key.to_owned(), value);
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str_opt(&mut self, key: &str) -> Option<String> {
        let value = self.values.get(key).cloned()?;
        self.record(key, value.clone());
        Some(value)
    }

    pub fn str_req(&mut self, key: &str) -> Result<String, CliError> {
        self.str_opt(key).ok_or_else(|| CliError::Input(format!("missing required key {key:?}")))
    }

    pub fn parsed_opt<T>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.str_opt(key) {
            Some(raw) => raw.parse().map(Some).map_err(|e| CliError::Input(format!("key {key:?}: {e}"))),
            None => Ok(None),
        }
    }

    pub fn parsed_or<T>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.parsed_opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    pub fn parsed_req<T>(&mut self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.parsed_opt(key)?.ok_or_else(|| CliError::Input(format!("missing required key {key:?}")))
    }

    pub fn list_opt<T>(&mut self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.str_opt(key).map(|raw| parse_list(key, &raw)).transpose()
    }

    pub fn list_req<T>(&mut self, key: &str) -> Result<Vec<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.list_opt(key)?.ok_or_else(|| CliError::Input(format!("missing required key {key:?}")))
    }

    pub fn matrix_opt(&mut self, key: &str) -> Result<Option<Vec<Vec<f64>>>, CliError> {
        self.str_opt(key)
            .map(|raw| raw.split(';').map(|row| parse_list(key, row)).collect::<Result<Vec<_>, _>>())
            .transpose()
    }

    /// `seed`, defaulting to 42.
    pub fn seed(&mut self) -> Result<u64, CliError> {
        self.parsed_or("seed", DEFAULT_SEED)
    }
}

fn parse_list<T>(key: &str, raw: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, item)| item.parse().map_err(|e| CliError::Input(format!("key {key:?} entry {i} ({item:?}): {e}"))))
        .collect()
}
