//! Flat `key = value` run configuration with dotted keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Every key the commands read.
pub const KNOWN_KEYS: &[&str] = &[
    "graph.id",
    "graph.m",
    "graph.rho",
    "graph.amp",
    "graph.freq",
    "n",
    "radii",
    "quad.order",
    "seed",
    "out",
    "format",
    "sample.r_min",
    "sample.r_max",
    "sample.shells",
    "sample.order",
    "sample.count",
    "sample.points",
    "boundary.radius",
    "boundary.level_radius",
    "boundary.area",
    "boundary.outer_minimizing",
    "radial.source",
    "radial.table",
    "radial.c1",
    "radial.r_start",
    "radial.r_end",
    "radial.step",
    "slide.reference",
    "slide.lambda_start",
    "slide.lambda_step",
    "slide.lambda_min",
    "slide.gap_tolerance",
    "suite.id",
    "suite.decay_q",
    "suite.samples",
    "suite.matrices",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("{origin}:{}: expected `key = value`, got `{line}`", k + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| ConfigError(format!("{origin}:{}: {e}", k + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// `key=value` from the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects key=value, got `{pair}`")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| ConfigError(format!("bad value `{v}` for `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.values.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| ConfigError(format!("bad entry `{}` in `{key}`: {e}", s.trim())))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}
