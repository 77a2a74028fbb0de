//! Flat `key = value` configuration files layered under command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Values read from a config file, keyed by flag name without dashes
/// (`alpha2-min`; underscores are accepted and normalized).
#[derive(Debug, Default, Clone)]
pub struct FileLayer {
    values: BTreeMap<String, String>,
}

impl FileLayer {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                bail!("config line {}: unknown key `{key}`", i + 1);
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("config line {}: duplicate key `{key}`", i + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                Self::parse(&text, allowed)
            }
        }
    }

    /// The flag value if given, else the file value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key `{key}`: invalid value `{v}`: {e}"))
            })
            .transpose()
    }

    /// Boolean switch: set on the command line, or `true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[&str] = &["receiver", "alpha2-min", "log", "json"];

    #[test]
    fn flags_override_file() {
        let f = FileLayer::parse("# c\nreceiver = dffre\n\nalpha2_min=0.5\n", KEYS).unwrap();
        assert_eq!(f.pick::<f64>(None, "alpha2-min").unwrap(), Some(0.5));
        assert_eq!(f.pick(Some(0.2), "alpha2-min").unwrap(), Some(0.2));
        assert_eq!(f.pick::<String>(None, "receiver").unwrap().as_deref(), Some("dffre"));
        assert_eq!(f.pick::<bool>(None, "log").unwrap(), None);
        assert!(!f.switch(false, "json").unwrap());
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(FileLayer::parse("receiver dffre", KEYS).is_err());
        assert!(FileLayer::parse("colour = red", KEYS).is_err());
        assert!(FileLayer::parse("log = 1\nlog = 0", KEYS).is_err());
        let f = FileLayer::parse("alpha2-min = abc", KEYS).unwrap();
        assert!(f.pick::<f64>(None, "alpha2-min").is_err());
    }
}
