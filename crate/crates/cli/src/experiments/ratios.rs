//! Ensemble sweeps of the compensation ratios.

use fraclab_core::fracops::{apply_pipeline, build_named_operator};
use fraclab_core::kernelspace::{
    adjoint_multiply, antisymmetrize_sq, kernel_besov_norm, kernel_dhalf, DiagonalPolicy,
};
use fraclab_core::multicomm::{apply_tk, compensation_ratio, g_term, kernel_smallness, RatioStatus};
use fraclab_core::normbank::{besov_difference, lorentz_norm, lp_norm, sobolev_inhomogeneous, sobolev_spectral};
use fraclab_core::report::RatioTrial;
use fraclab_core::special::c_sigma;
use fraclab_core::{Kernel, KernelNormParams, KernelTag, MatrixField, RatioReport, Symmetry};

use super::{grid, sample, second_spec, spec, trials, Outcome, RunError};
use crate::config::Config;
use crate::frozen::{Frozen, REGRESSION_SLACK};
use crate::output::{envelope, num, opt, write_csv, write_json, Check};

pub const ESTIMATES: [&str; 9] =
    ["firstope", "ablation", "dhalf_equiv", "sq_bound", "lorentz_l1", "VPQ", "lemma", "adjoint", "besov_equiv"];

/// Ablation growth required to count as a failure of compensation.
pub const ABLATION_GROWTH: f64 = 3.0;
/// Allowed spread of per-refinement maxima for bounded estimates.
pub const REFINEMENT_SPREAD: f64 = 2.0;
/// Allowed width hi/lo of an equivalence bracket.
pub const BRACKET_WIDTH: f64 = 10.0;

fn h_half(q: &MatrixField) -> Result<f64, RunError> {
    Ok(sobolev_spectral(&q.as_vector_field(), 0.5)?.value)
}

/// K_sd(x, y) = sgn(y − x) K(x, y) on the periodic window: same modulus as
/// K, self-dual when K is anti-self-dual.
pub fn self_dual_twin(k: &Kernel) -> Kernel {
    let n = k.n();
    let mm = k.m * k.m;
    let mut out = Kernel::from_fn(&k.grid, k.m, DiagonalPolicy::Finite, "K_sd", |i, j, o| {
        let off = (j + n - i) % n;
        let s = if off == 0 || off == n / 2 { 0.0 } else if off < n / 2 { 1.0 } else { -1.0 };
        for e in 0..mm {
            o[e] = s * k.block(i, j)[e];
        }
    });
    out.tag = KernelTag::SelfDual;
    out
}

fn ratio_of(num: f64, factors: &[f64]) -> (Option<f64>, RatioStatus) {
    let den: f64 = factors.iter().product();
    if den > 0.0 && den.is_finite() && num.is_finite() {
        (Some(num / den), RatioStatus::Ok)
    } else {
        (None, RatioStatus::Degenerate)
    }
}

pub fn factor_names(estimate: &str) -> Result<&'static [&'static str], RunError> {
    Ok(match estimate {
        "firstope" | "ablation" => &["Q_H1/2", "v_L2"],
        "dhalf_equiv" => &["Q_B1/2_22"],
        "sq_bound" => &["Q_H1/2"],
        "lorentz_l1" => &["v_L2inf", "dK_A-sigma_22", "P_H1/2"],
        "VPQ" => &["P_Linf", "Q_H1/2", "v_L2"],
        "lemma" => &["K_A-sigma_pq", "v_Lr"],
        "adjoint" => &["maxP_op^2", "K_A"],
        "besov_equiv" => &["v_H1/2"],
        other => return Err(RunError::UnknownEstimate(other.to_string())),
    })
}

fn one_trial(cfg: &Config, n: usize, t: u64) -> Result<RatioTrial, RunError> {
    let g = grid(cfg, n)?;
    let (q, v) = sample(&spec(cfg, Symmetry::Symmetric), &g, t);
    let (numerator, factors, truncation) = match cfg.estimate.as_str() {
        "firstope" => {
            let t3 = apply_pipeline(&build_named_operator("T3", &q, None)?, &v)?;
            (sobolev_spectral(&t3.remove_mean(), -0.5)?.value, vec![h_half(&q)?, v.l2()], 0.0)
        }
        "ablation" => {
            // The twin's 𝒯 is not mean-zero; its zero mode is dropped by the
            // homogeneous norm.
            let t = apply_tk(&self_dual_twin(&kernel_dhalf(&q)), &v)?.scaled(c_sigma(0.5));
            (sobolev_spectral(&t.remove_mean(), -0.5)?.value, vec![h_half(&q)?, v.l2()], 0.0)
        }
        "dhalf_equiv" => {
            let k = kernel_dhalf(&q);
            let b = besov_difference(&q.as_vector_field(), 0.5, 2.0, 2.0)?;
            (kernel_smallness(&k, cfg.sigma)?, vec![b.value], b.truncation)
        }
        "sq_bound" => {
            let s = antisymmetrize_sq(&q)?;
            let nr = kernel_besov_norm(&s, KernelNormParams::new(-0.5 + 1.0 / cfg.p, cfg.p, 2.0))?;
            (nr.value, vec![h_half(&q)?], nr.truncation)
        }
        "lorentz_l1" => {
            let (p, _) = sample(&second_spec(cfg, Symmetry::Orthogonal), &g, t);
            let k = kernel_dhalf(&q);
            let gv = g_term(&p, &k, &v)?;
            let pn = sobolev_spectral(&p.as_vector_field(), 0.5)?.value;
            let vn = lorentz_norm(&v, 2.0, f64::INFINITY)?.value;
            (lp_norm(&gv, 1.0), vec![vn, kernel_smallness(&k, cfg.sigma)?, pn], 0.0)
        }
        "VPQ" => {
            let (p, _) = sample(&second_spec(cfg, Symmetry::Orthogonal), &g, t);
            let out = apply_pipeline(&build_named_operator("VPQ", &q, Some(&p))?, &v)?;
            (sobolev_inhomogeneous(&out, -0.5).value, vec![p.sup_op_norm(), h_half(&q)?, v.l2()], 0.0)
        }
        "lemma" => {
            let target = KernelNormParams::new(-cfg.sigma, cfg.p, cfg.q);
            let c = compensation_ratio(&kernel_dhalf(&q), &v, target, cfg.r)?;
            (c.numerator, vec![c.kernel_norm, c.v_norm], c.kernel_truncation)
        }
        "adjoint" => {
            let (p, _) = sample(&second_spec(cfg, Symmetry::None), &g, t);
            let k = kernel_dhalf(&q);
            let params = KernelNormParams::new(-cfg.sigma, cfg.p, cfg.q);
            let gk = kernel_besov_norm(&adjoint_multiply(&p, &k)?, params)?;
            let kn = kernel_besov_norm(&k, params)?;
            (gk.value, vec![p.sup_op_norm().powi(2), kn.value], gk.truncation)
        }
        "besov_equiv" => {
            let b = besov_difference(&v, 0.5, 2.0, 2.0)?;
            (b.value, vec![sobolev_spectral(&v, 0.5)?.value], b.truncation)
        }
        other => return Err(RunError::UnknownEstimate(other.to_string())),
    };
    let (ratio, status) = ratio_of(numerator, &factors);
    Ok(RatioTrial { trial: t as usize, seed: cfg.seed, n, numerator, factors, ratio, status, truncation })
}

pub fn run_ratio_sweep(cfg: &Config) -> Result<RatioReport, RunError> {
    let names = factor_names(&cfg.estimate)?;
    if cfg.estimate == "lemma" {
        KernelNormParams::new(-cfg.sigma, cfg.p, cfg.q).validate()?;
    }
    let mut all = vec![];
    for &n in &cfg.refinements {
        all.extend(trials(cfg.count, |t| one_trial(cfg, n, t))?);
    }
    Ok(RatioReport::new(&cfg.estimate, names, all))
}

/// Baseline key for an estimate; sq_bound is keyed by p.
pub fn frozen_key(cfg: &Config) -> String {
    match cfg.estimate.as_str() {
        "sq_bound" => format!("sq_bound.p{}", cfg.p),
        e => e.to_string(),
    }
}

fn spread(rep: &RatioReport) -> f64 {
    let v: Vec<f64> = rep.refinement.iter().map(|p| p.value).collect();
    let hi = v.iter().cloned().fold(f64::NAN, f64::max);
    let lo = v.iter().cloned().fold(f64::NAN, f64::min);
    hi / lo
}

pub fn checks_for(cfg: &Config, rep: &RatioReport, frozen: &Frozen) -> Vec<Check> {
    let key = frozen_key(cfg);
    let e = &cfg.estimate;
    let finite = rep.trials.iter().filter_map(|t| t.ratio).all(f64::is_finite) && rep.max.is_finite();
    let mut checks = vec![Check::at_most(&format!("{e}_degenerate_trials"), rep.degenerate as f64, 0.0)];
    let ratios: Vec<f64> = rep.trials.iter().filter_map(|t| t.ratio).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    match e.as_str() {
        "ablation" => {
            let first = rep.refinement.first().map(|p| p.value).unwrap_or(f64::NAN);
            let last = rep.refinement.last().map(|p| p.value).unwrap_or(f64::NAN);
            checks.push(Check::at_least("ablation_growth", last / first, ABLATION_GROWTH));
        }
        "dhalf_equiv" | "besov_equiv" => {
            let (fl, fh) = (frozen.get(&format!("{key}.lower")), frozen.get(&format!("{key}.upper")));
            checks.push(Check::at_most(&format!("{e}_width"), rep.max / lo, BRACKET_WIDTH));
            if let (Some(fl), Some(fh)) = (fl, fh) {
                checks.push(Check::at_least(&format!("{e}_min_vs_frozen_lower"), lo, fl));
                checks.push(Check::at_most(&format!("{e}_max_vs_frozen_upper"), rep.max, fh));
                checks.push(Check::at_most(&format!("{e}_frozen_width"), fh / fl, BRACKET_WIDTH));
            }
        }
        "adjoint" => checks.push(Check::at_most("adjoint_stability", rep.max, 1.0 + 1e-10)),
        _ => {
            checks.push(Check::at_most(&format!("{e}_max_finite"), if finite { 0.0 } else { 1.0 }, 0.0));
            checks.push(Check::at_most(&format!("{e}_refinement_spread"), spread(rep), REFINEMENT_SPREAD));
            if let Some(f) = frozen.get(&format!("{key}.max")) {
                checks.push(Check::at_most(&format!("{e}_max_vs_frozen"), rep.max, f * REGRESSION_SLACK));
            }
        }
    }
    checks
}

#[derive(serde::Serialize)]
struct RatioResults<'a> {
    report: &'a RatioReport,
    ratio_min: f64,
}

pub fn ratios(cfg: &Config, frozen: &Frozen) -> Result<Outcome, RunError> {
    let rep = run_ratio_sweep(cfg)?;
    let checks = checks_for(cfg, &rep, frozen);
    let mut header = vec!["trial", "seed", "n", "numerator"];
    header.extend(rep.factor_names.iter().map(|s| s.as_str()));
    header.extend(["ratio", "status", "truncation"]);
    let rows: Vec<Vec<String>> = rep
        .trials
        .iter()
        .map(|t| {
            let mut r = vec![t.trial.to_string(), t.seed.to_string(), t.n.to_string(), num(t.numerator)];
            r.extend(t.factors.iter().map(|f| num(*f)));
            r.push(opt(t.ratio));
            r.push(format!("{:?}", t.status));
            r.push(num(t.truncation));
            r
        })
        .collect();
    let stem = format!("ratios_{}", frozen_key(cfg));
    let ratio_min = rep.trials.iter().filter_map(|t| t.ratio).fold(f64::INFINITY, f64::min);
    let results = RatioResults { report: &rep, ratio_min };
    let dir = &cfg.output_dir;
    let files = vec![
        write_json(&dir.join(format!("{stem}.json")), &envelope("ratios", cfg, &results, &checks))?,
        write_csv(&dir.join(format!("{stem}.csv")), &header, &rows)?,
    ];
    Ok(Outcome { checks, files })
}
