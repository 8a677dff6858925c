//! `key = value` configuration files with flag overlay.
//!
//! ```text
//! # comment
//! seed = 7
//! reps = 100000
//! target = alg3-alt-exp
//! a = 0.5
//! p = 0.3
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SEED_ENV: &str = "COINFORGE_SEED";

/// Every key understood by some command.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "reps",
    "sigma",
    "out",
    "target",
    "a",
    "p",
    "envelope",
    "n_max",
    "preset",
    "alpha",
    "A",
    "alpha_prime",
    "ell",
    "r",
    "T",
    "x",
    "segment",
    "em_step",
    "compare",
    "max_iterations",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; `#` starts a comment. Unknown or repeated
    /// keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if map
                .entries
                .insert(key.to_string(), value.to_string())
                .is_some()
            {
                return Err(err(format!("key `{key}` given twice")));
            }
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets or overrides a key, as a command-line flag does.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Overlays `other` on top of `self`; keys in `other` win.
    pub fn overlay(&mut self, other: &ConfigMap) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("bad value `{v}` for `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed::<f64>(key)?.unwrap_or(default))
    }

    /// Accepts `1e5`-style counts as well as plain integers.
    pub fn count_or(&self, key: &str, default: u64) -> Result<u64> {
        let Some(v) = self.get(key) else {
            return Ok(default);
        };
        if let Ok(n) = v.parse::<u64>() {
            return Ok(n);
        }
        match v.parse::<f64>() {
            Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => Ok(x as u64),
            _ => Err(Error::Config(format!("bad count `{v}` for `{key}`"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(Error::Config(format!("bad boolean `{v}` for `{key}`"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonSettings {
    pub seed: u64,
    pub reps: u64,
    pub sigma: f64,
    pub out: Option<PathBuf>,
}

impl CommonSettings {
    /// Seed precedence: the map (flags over file), then `env_seed`, then 0.
    pub fn from_config(map: &ConfigMap, env_seed: Option<&str>, default_reps: u64) -> Result<Self> {
        let seed = match map.parsed::<u64>("seed")? {
            Some(s) => s,
            None => match env_seed {
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("bad {SEED_ENV} `{v}`: {e}")))?,
                None => 0,
            },
        };
        let reps = map.count_or("reps", default_reps)?;
        if reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        let sigma = map.f64_or("sigma", super::stats::DEFAULT_SIGMA)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            seed,
            reps,
            sigma,
            out: map.path("out"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_overlay() {
        let mut file =
            ConfigMap::parse("# run\nseed = 7\nreps=1e5\n\ntarget = alg1 # trailing\n").unwrap();
        assert_eq!(file.get("target"), Some("alg1"));
        assert_eq!(file.count_or("reps", 1).unwrap(), 100_000);
        let mut flags = ConfigMap::new();
        flags.set("seed", 9).unwrap();
        file.overlay(&flags);
        let s = CommonSettings::from_config(&file, Some("11"), 10).unwrap();
        assert_eq!((s.seed, s.reps, s.sigma), (9, 100_000, 3.0));
    }

    #[test]
    fn env_seed_is_a_fallback() {
        let map = ConfigMap::parse("reps = 3").unwrap();
        assert_eq!(
            CommonSettings::from_config(&map, Some("42"), 1)
                .unwrap()
                .seed,
            42
        );
        assert_eq!(CommonSettings::from_config(&map, None, 1).unwrap().seed, 0);
        assert!(CommonSettings::from_config(&map, Some("x"), 1).is_err());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ConfigMap::parse("seed 7"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ConfigMap::parse("\ncolour = red"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ConfigMap::parse("a=1\na=2"),
            Err(Error::Parse { line: 2, .. })
        ));
        let map = ConfigMap::parse("reps = 0\nsigma = -1").unwrap();
        assert!(CommonSettings::from_config(&map, None, 1).is_err());
        let map = ConfigMap::parse("reps = 2.5").unwrap();
        assert!(map.count_or("reps", 1).is_err());
        let map = ConfigMap::parse("segment = maybe").unwrap();
        assert!(map.bool_or("segment", false).is_err());
    }
}
