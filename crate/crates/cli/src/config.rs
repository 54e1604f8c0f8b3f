//! Flat `section.key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config '{path}': {reason}")]
    Read { path: String, reason: String },
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    Duplicate { line: usize, key: String },
    #[error("key '{key}' (line {line}): {reason}")]
    Value { line: usize, key: String, reason: String },
}

pub const KEYS: [&str; 12] = [
    "grid.n",
    "grid.radius",
    "sigma",
    "p",
    "q",
    "r",
    "ensemble.count",
    "ensemble.seed",
    "ensemble.delta",
    "estimate",
    "refinements",
    "output.dir",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub n: usize,
    pub radius: f64,
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub count: usize,
    pub seed: u64,
    pub delta: f64,
    pub estimate: String,
    pub refinements: Vec<usize>,
    pub output_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            n: 512,
            radius: 16.0,
            sigma: 0.25,
            p: 4.0,
            q: 2.0,
            r: 2.0,
            count: 50,
            seed: 7,
            delta: 0.5,
            estimate: "firstope".into(),
            refinements: vec![256, 512, 1024],
            output_dir: PathBuf::from("fraclab-out"),
        }
    }
}

fn value_err(line: usize, key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Value { line, key: key.to_string(), reason: reason.to_string() }
}

fn pow2(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    let n: usize = v.parse().map_err(|e| value_err(line, key, e))?;
    if n < 8 || !n.is_power_of_two() {
        return Err(value_err(line, key, format!("{n} is not a power of two >= 8")));
    }
    Ok(n)
}

fn real(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|e| value_err(line, key, e))?;
    if !x.is_finite() {
        return Err(value_err(line, key, "not finite"));
    }
    Ok(x)
}

impl Config {
    /// `default` selects the built-in values; anything else is a file path.
    pub fn load(spec: &str) -> Result<Config, ConfigError> {
        if spec == "default" {
            return Ok(Config::default());
        }
        let text = std::fs::read_to_string(Path::new(spec))
            .map_err(|e| ConfigError::Read { path: spec.to_string(), reason: e.to_string() })?;
        Config::parse(&text)
    }

    /// Unset keys keep their defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| ConfigError::Syntax { line, text: raw.trim().to_string() })?;
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            }
            if seen.insert(key.to_string(), line).is_some() {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            match key {
                "grid.n" => cfg.n = pow2(line, key, value)?,
                "grid.radius" => {
                    cfg.radius = real(line, key, value)?;
                    if cfg.radius <= 0.0 {
                        return Err(value_err(line, key, "radius must be > 0"));
                    }
                }
                "sigma" => cfg.sigma = real(line, key, value)?,
                "p" => cfg.p = real(line, key, value)?,
                "q" => cfg.q = real(line, key, value)?,
                "r" => cfg.r = real(line, key, value)?,
                "ensemble.count" => {
                    cfg.count = value.parse().map_err(|e| value_err(line, key, e))?;
                    if cfg.count == 0 {
                        return Err(value_err(line, key, "count must be >= 1"));
                    }
                }
                "ensemble.seed" => cfg.seed = value.parse().map_err(|e| value_err(line, key, e))?,
                "ensemble.delta" => {
                    cfg.delta = real(line, key, value)?;
                    if cfg.delta <= 0.0 {
                        return Err(value_err(line, key, "delta must be > 0"));
                    }
                }
                "estimate" => cfg.estimate = value.to_string(),
                "refinements" => {
                    cfg.refinements = value
                        .split(',')
                        .map(|s| pow2(line, key, s.trim()))
                        .collect::<Result<_, _>>()?;
                }
                "output.dir" => cfg.output_dir = PathBuf::from(value),
                _ => unreachable!(),
            }
        }
        Ok(cfg)
    }

    /// Key/value echo in the same spelling as the file format.
    pub fn echo(&self) -> BTreeMap<&'static str, String> {
        let refs: Vec<String> = self.refinements.iter().map(|n| n.to_string()).collect();
        BTreeMap::from([
            ("grid.n", self.n.to_string()),
            ("grid.radius", self.radius.to_string()),
            ("sigma", self.sigma.to_string()),
            ("p", self.p.to_string()),
            ("q", self.q.to_string()),
            ("r", self.r.to_string()),
            ("ensemble.count", self.count.to_string()),
            ("ensemble.seed", self.seed.to_string()),
            ("ensemble.delta", self.delta.to_string()),
            ("estimate", self.estimate.clone()),
            ("refinements", refs.join(",")),
            ("output.dir", self.output_dir.display().to_string()),
        ])
    }
}
