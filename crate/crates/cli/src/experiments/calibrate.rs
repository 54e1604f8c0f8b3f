//! One-time measurement of the regression baselines.

use std::path::PathBuf;

use super::ratios::{frozen_key, run_ratio_sweep};
use super::roots::run_root_study;
use super::{Outcome, RunError};
use crate::config::Config;
use crate::frozen::Frozen;

/// Brackets are widened by this factor on each side before freezing.
pub const BRACKET_PAD: f64 = 1.25;

/// The sweeps whose constants are frozen. The acceptance suite runs the same
/// configurations.
pub fn calibration_configs(base: &Config) -> Vec<Config> {
    let with = |estimate: &str, count: usize, refs: &[usize], p: f64| Config {
        estimate: estimate.into(),
        count,
        refinements: refs.to_vec(),
        p,
        ..base.clone()
    };
    let full = [256, 512, 1024];
    vec![
        with("firstope", 100, &full, base.p),
        with("dhalf_equiv", 50, &[256, 512], base.p),
        with("sq_bound", 30, &full, 2.0),
        with("sq_bound", 30, &full, 4.0),
        with("lorentz_l1", 30, &full, base.p),
        with("VPQ", 50, &full, base.p),
        with("lemma", 30, &full, base.p),
        with("besov_equiv", 50, &[256, 512], base.p),
    ]
}

pub fn calibrate(base: &Config) -> Result<(Frozen, Outcome), RunError> {
    let mut frozen = Frozen::default();
    for cfg in calibration_configs(base) {
        let rep = run_ratio_sweep(&cfg)?;
        let key = frozen_key(&cfg);
        match cfg.estimate.as_str() {
            "dhalf_equiv" | "besov_equiv" => {
                let lo = rep.trials.iter().filter_map(|t| t.ratio).fold(f64::INFINITY, f64::min);
                frozen.insert(&format!("{key}.lower"), lo / BRACKET_PAD);
                frozen.insert(&format!("{key}.upper"), rep.max * BRACKET_PAD);
            }
            _ => frozen.insert(&format!("{key}.max"), rep.max),
        }
    }
    // Two decimals, rounded down.
    let floor = (run_root_study().min_b * 100.0).floor() / 100.0;
    frozen.insert("roots.floor", floor);
    let path: PathBuf = base.output_dir.join("frozen_constants.txt");
    std::fs::create_dir_all(&base.output_dir)?;
    let header = format!(
        "Regression baselines written by `fraclab calibrate`.\nseed = {}, R = {}, sigma = {}, delta = {}\n\
         Brackets (.lower/.upper) are padded by {BRACKET_PAD}; maxima (.max) are raw ensemble maxima.",
        base.seed, base.radius, base.sigma, base.delta
    );
    std::fs::write(&path, frozen.render(&header))?;
    Ok((frozen, Outcome { checks: vec![], files: vec![path] }))
}
