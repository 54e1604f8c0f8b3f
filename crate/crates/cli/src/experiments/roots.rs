//! Roots b(x) ∈ (0, 1/2) of (1/(1 − x)) ln|(b − x)/(1 − b)| = ln|(1 − b)/b|.

use serde::Serialize;

use super::{Outcome, RunError};
use crate::config::Config;
use crate::frozen::Frozen;
use crate::output::{envelope, num, opt, write_csv, write_json, Check};

pub const SAMPLES: usize = 50;
pub const X_RANGE: (f64, f64) = (-0.49, -0.01);
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Left side minus right side of the root equation.
pub fn root_equation(x: f64, b: f64) -> f64 {
    ((b - x) / (1.0 - b)).abs().ln() / (1.0 - x) - ((1.0 - b) / b).abs().ln()
}

/// Same equation with the factor 1/(x − 1) that the antiderivative
/// (1/(x(x−1))) ln|(t−x)/(t−1)| − (1/x) ln|(t−1)/t| produces.
pub fn derived_equation(x: f64, b: f64) -> f64 {
    ((b - x) / (1.0 - b)).abs().ln() / (x - 1.0) - ((1.0 - b) / b).abs().ln()
}

/// Bisection on a bracket with a sign change; returns None otherwise.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if !(flo * fhi < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct RootRow {
    pub x: f64,
    pub b: Option<f64>,
    pub residual: Option<f64>,
    /// Root in (0, 1) of [`derived_equation`], for comparison.
    pub derived_b: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootSummary {
    pub rows: Vec<RootRow>,
    pub min_b: f64,
    pub max_b: f64,
    pub gap_to_half: f64,
}

pub fn sample_points() -> Vec<f64> {
    let (a, b) = X_RANGE;
    (0..SAMPLES).map(|k| a + (b - a) * k as f64 / (SAMPLES - 1) as f64).collect()
}

pub fn run_root_study() -> RootSummary {
    let edge = 1e-14;
    let rows: Vec<RootRow> = sample_points()
        .into_iter()
        .map(|x| {
            let b = bisect(|b| root_equation(x, b), edge, 0.5);
            let derived_b = bisect(|b| derived_equation(x, b), 0.5, 1.0 - edge)
                .or_else(|| bisect(|b| derived_equation(x, b), edge, 0.5));
            RootRow { x, b, residual: b.map(|b| root_equation(x, b).abs()), derived_b }
        })
        .collect();
    let bs: Vec<f64> = rows.iter().filter_map(|r| r.b).collect();
    let min_b = bs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_b = bs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    RootSummary { rows, min_b, max_b, gap_to_half: 0.5 - max_b }
}

pub fn roots(cfg: &Config, frozen: &Frozen) -> Result<Outcome, RunError> {
    let s = run_root_study();
    let missing = s.rows.iter().filter(|r| r.b.is_none()).count();
    let worst = s.rows.iter().filter_map(|r| r.residual).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most("roots_missing", missing as f64, 0.0),
        Check::at_most("roots_residual", worst, RESIDUAL_TOL),
        Check::at_least("roots_gap_to_half", s.gap_to_half, f64::MIN_POSITIVE),
    ];
    if let Some(floor) = frozen.get("roots.floor") {
        checks.push(Check::at_least("roots_floor", s.min_b, floor));
    }
    let rows: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| vec![num(r.x), opt(r.b), opt(r.residual), opt(r.derived_b)])
        .collect();
    let dir = &cfg.output_dir;
    let files = vec![
        write_json(&dir.join("roots.json"), &envelope("roots", cfg, &s, &checks))?,
        write_csv(&dir.join("roots.csv"), &["x", "b", "residual", "derived_b"], &rows)?,
    ];
    Ok(Outcome { checks, files })
}
