//! Experiment drivers behind each subcommand.

use std::path::PathBuf;
use std::sync::Arc;

use fraclab_core::{make_grid, EnsembleSpec, Grid, LabError, MatrixField, Symmetry, VectorField};
use rayon::prelude::*;

use crate::config::Config;
use crate::output::Check;

pub mod calibrate;
pub mod eps;
pub mod identities;
pub mod kernels;
pub mod ratios;
pub mod roots;

/// Dimension m of every sampled field.
pub const ENSEMBLE_DIM: usize = 2;

/// Seed offset for the second, independent family (P or Ω) drawn per trial.
const SECOND_FAMILY: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("invalid experiment parameters: {0}")]
    Lab(#[from] LabError),
    #[error("unknown estimate '{0}'")]
    UnknownEstimate(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub(crate) fn grid(cfg: &Config, n: usize) -> Result<Arc<Grid>, RunError> {
    Ok(make_grid(cfg.radius, n)?)
}

pub(crate) fn spec(cfg: &Config, symmetry: Symmetry) -> EnsembleSpec {
    let mut s = EnsembleSpec::new(cfg.seed, cfg.count, ENSEMBLE_DIM);
    s.delta = cfg.delta;
    s.symmetry = symmetry;
    s
}

/// Same as [`spec`] but on an independent seed, for the second field of a trial.
pub(crate) fn second_spec(cfg: &Config, symmetry: Symmetry) -> EnsembleSpec {
    let mut s = spec(cfg, symmetry);
    s.seed ^= SECOND_FAMILY;
    s
}

pub(crate) fn sample(spec: &EnsembleSpec, g: &Arc<Grid>, trial: u64) -> (MatrixField, VectorField) {
    fraclab_core::lattice::sample_trial(spec, g, trial)
}

/// Runs `f` for each trial in parallel and returns results in trial order.
pub(crate) fn trials<T: Send>(
    count: usize,
    f: impl Fn(u64) -> Result<T, RunError> + Sync,
) -> Result<Vec<T>, RunError> {
    (0..count as u64).into_par_iter().map(&f).collect()
}

pub(crate) fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
