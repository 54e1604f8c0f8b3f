//! JSON envelopes and CSV tables.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fraclab_core::conventions::Conventions;
use serde::Serialize;

use crate::config::Config;

/// One named pass/fail criterion with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, relation: "<=", pass: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, relation: ">=", pass: value >= threshold }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.6e} {} {:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation,
            self.threshold
        )
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub experiment: &'a str,
    pub config: BTreeMap<&'static str, String>,
    pub conventions: Conventions,
    pub results: T,
    pub checks: &'a [Check],
    pub pass: bool,
}

pub fn envelope<'a, T: Serialize>(experiment: &'a str, cfg: &Config, results: T, checks: &'a [Check]) -> Envelope<'a, T> {
    Envelope {
        experiment,
        config: cfg.echo(),
        conventions: Conventions::current(),
        results,
        checks,
        pass: checks.iter().all(|c| c.pass),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// Shortest round-trip decimal; empty for missing values.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
