//! `key = value` config files. Flags win over the file, the file wins over
//! built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

const KNOWN: &[&str] = &[
    "seed",
    "out",
    "force",
    "workers",
    "preset",
    "days",
    "noise_stddev",
    "data",
    "consumption",
    "temperature",
    "window",
    "max_lag",
    "period",
    "rolling_window",
    "particles",
    "iterations",
    "inertia",
    "c1",
    "c2",
    "svr_tol",
    "mode",
    "tau",
    "zero_policy",
    "max_p",
    "max_q",
    "trace",
    "model",
];

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}`", n + 1);
            }
            values.insert(key, v.trim().trim_matches('"').to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key `{key}`: cannot parse `{v}`: {e}"))
            })
            .transpose()
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_errors() {
        let c = FileConfig::parse("# comment\nparticles = 10\nmax-lag=12 # trailing\n").unwrap();
        assert_eq!(c.pick(None, "particles", 20usize).unwrap(), 10);
        assert_eq!(c.pick(Some(5), "particles", 20usize).unwrap(), 5);
        assert_eq!(c.pick(None, "iterations", 50usize).unwrap(), 50);
        assert_eq!(c.get::<usize>("max_lag").unwrap(), Some(12));
        assert!(FileConfig::parse("bogus = 1").is_err());
        assert!(FileConfig::parse("particles 1").is_err());
        let c = FileConfig::parse("particles = many").unwrap();
        assert!(c.pick(None, "particles", 1usize).is_err());
    }
}
