//! Injectivity of the ε-regularity operator as the data budget ε grows.

use std::f64::consts::PI;

use fraclab_core::multicomm::{assemble_eps_operator, EpsSystem};
use fraclab_core::{MatrixField, Symmetry};
use serde::Serialize;

use super::{grid, sample, second_spec, spec, trials, Outcome, RunError};
use crate::config::Config;
use crate::output::{envelope, num, write_csv, write_json, Check};

/// Budgets swept; 0.05 carries the positivity claim, 10 lies far outside it.
pub const EPS_GRID: [f64; 7] = [0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 10.0];
pub const EPS_CLAIM: f64 = 0.05;
pub const EPS_FLOOR_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct EpsRow {
    pub eps: f64,
    pub trial: usize,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsSummary {
    pub eps: f64,
    pub min: f64,
    pub max: f64,
    pub trials: usize,
}

pub fn run_eps_sweep(cfg: &Config) -> Result<Vec<EpsRow>, RunError> {
    if !(cfg.sigma > 0.0 && cfg.sigma < 0.5) {
        return Err(fraclab_core::LabError::SigmaRange(cfg.sigma, "(0, 1/2)").into());
    }
    let g = grid(cfg, cfg.n)?;
    let mut rows = vec![];
    for &eps in &EPS_GRID {
        // ε = 0 has no random data; one trial suffices.
        let count = if eps == 0.0 { 1 } else { cfg.count };
        let vals = trials(count, |t| {
            let (q, om) = if eps == 0.0 {
                (
                    MatrixField::zeros(&g, super::ENSEMBLE_DIM, Symmetry::Symmetric),
                    MatrixField::zeros(&g, super::ENSEMBLE_DIM, Symmetry::Antisymmetric),
                )
            } else {
                let (q, _) = sample(&spec(cfg, Symmetry::Symmetric), &g, t);
                let (om, _) = sample(&second_spec(cfg, Symmetry::Antisymmetric), &g, t);
                (q, om)
            };
            let sys = EpsSystem::scaled_from(&q, &om, cfg.sigma, eps)?;
            Ok(assemble_eps_operator(&sys).sigma_min_mean_zero())
        })?;
        rows.extend(vals.into_iter().enumerate().map(|(trial, sigma_min)| EpsRow { eps, trial, sigma_min }));
    }
    Ok(rows)
}

pub fn summarize(rows: &[EpsRow]) -> Vec<EpsSummary> {
    EPS_GRID
        .iter()
        .map(|&eps| {
            let v: Vec<f64> = rows.iter().filter(|r| r.eps == eps).map(|r| r.sigma_min).collect();
            EpsSummary {
                eps,
                min: v.iter().cloned().fold(f64::INFINITY, f64::min),
                max: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                trials: v.len(),
            }
        })
        .collect()
}

pub fn eps(cfg: &Config) -> Result<Outcome, RunError> {
    let rows = run_eps_sweep(cfg)?;
    let summary = summarize(&rows);
    let base = (PI / cfg.radius).sqrt();
    let at = |e: f64| summary.iter().find(|s| s.eps == e).map(|s| s.min).unwrap_or(f64::NAN);
    let checks = vec![
        Check::at_most("eps0_equals_window_frequency", (at(0.0) - base).abs(), 1e-8),
        Check::at_least("eps_small_sigma_min", at(EPS_CLAIM), EPS_FLOOR_FRACTION * base),
    ];
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.eps), r.trial.to_string(), cfg.seed.to_string(), num(r.sigma_min)])
        .collect();
    let dir = &cfg.output_dir;
    let files = vec![
        write_json(&dir.join("eps.json"), &envelope("eps", cfg, &summary, &checks))?,
        write_csv(&dir.join("eps.csv"), &["eps", "trial", "seed", "sigma_min"], &table)?,
    ];
    Ok(Outcome { checks, files })
}
