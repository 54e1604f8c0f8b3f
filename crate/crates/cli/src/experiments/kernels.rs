//! Kernel dumps with their norms and duality residuals.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};

use fraclab_core::kernelspace::{
    antisymmetrize_sq, kernel_besov_norm, kernel_dhalf, kernel_rq, kernel_trq, read_dump, write_dump,
};
use fraclab_core::{Kernel, KernelNormParams, KernelTag, Symmetry};
use serde::Serialize;

use super::{grid, sample, spec, Outcome, RunError};
use crate::config::Config;
use crate::output::{envelope, write_json, Check};

pub const DUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub label: String,
    pub file: String,
    pub n: usize,
    pub m: usize,
    pub singular: bool,
    pub tag: KernelTag,
    /// Duality residual relative to max |K|: anti-self-dual for tagged
    /// kernels, self-dual otherwise.
    pub duality_residual: f64,
    pub norm: f64,
    pub norm_truncation: f64,
    pub round_trip: bool,
}

fn summarize(k: &Kernel, file: &str, params: KernelNormParams, round_trip: bool) -> Result<KernelSummary, RunError> {
    let scale = k.data.iter().filter(|v| v.is_finite()).fold(0.0f64, |a, b| a.max(b.abs()));
    let res = match k.tag {
        KernelTag::AntiSelfDual => k.anti_self_dual_residual(),
        _ => k.self_dual_residual(),
    };
    let nr = kernel_besov_norm(k, params)?;
    Ok(KernelSummary {
        label: k.label.clone(),
        file: file.to_string(),
        n: k.n(),
        m: k.m,
        singular: k.is_singular(),
        tag: k.tag,
        duality_residual: if scale > 0.0 { res / scale } else { 0.0 },
        norm: nr.value,
        norm_truncation: nr.truncation,
        round_trip,
    })
}

pub fn kernels(cfg: &Config) -> Result<Outcome, RunError> {
    let g = grid(cfg, cfg.n)?;
    let (q, _) = sample(&spec(cfg, Symmetry::Symmetric), &g, 0);
    let mut rq = kernel_rq(&q);
    rq.tag = KernelTag::SelfDual;
    let list = vec![
        ("dhalf", kernel_dhalf(&q)),
        ("rq", rq),
        ("trq", kernel_trq(&q)?),
        ("sq", antisymmetrize_sq(&q)?),
    ];
    let dir = cfg.output_dir.join("kernels");
    fs::create_dir_all(&dir)?;
    let params = KernelNormParams::new(-cfg.sigma, cfg.p, cfg.q);
    let mut summaries = vec![];
    let mut files = vec![];
    for (name, k) in &list {
        let path = dir.join(format!("{name}.fck"));
        let mut w = BufWriter::new(File::create(&path)?);
        write_dump(k, &mut w)?;
        w.flush()?;
        drop(w);
        let (hdr, vals) = read_dump(&mut BufReader::new(File::open(&path)?))?;
        let ok = hdr.n == k.n() && hdr.m == k.m && hdr.label == k.label && vals.len() == (k.n() * k.m).pow(2);
        summaries.push(summarize(k, &format!("kernels/{name}.fck"), params, ok)?);
        files.push(path);
    }
    let mut checks = vec![];
    for s in &summaries {
        checks.push(Check::at_most(&format!("{}_round_trip", s.label), if s.round_trip { 0.0 } else { 1.0 }, 0.0));
        if matches!(s.tag, KernelTag::AntiSelfDual | KernelTag::SelfDual) {
            checks.push(Check::at_most(&format!("{}_duality", s.label), s.duality_residual, DUALITY_TOL));
        }
    }
    let mut text = format!(
        "kernel summary: n = {}, R = {}, norm A^{{{}}}_{{{},{}}}\n",
        cfg.n, cfg.radius, -cfg.sigma, cfg.p, cfg.q
    );
    text.push_str("label\tfile\tsingular\ttag\tduality_residual\tnorm\ttruncation\n");
    for s in &summaries {
        text.push_str(&format!(
            "{}\t{}\t{}\t{:?}\t{:e}\t{:e}\t{:e}\n",
            s.label, s.file, s.singular, s.tag, s.duality_residual, s.norm, s.norm_truncation
        ));
    }
    let txt = cfg.output_dir.join("kernels_summary.txt");
    fs::write(&txt, text)?;
    files.push(txt);
    files.push(write_json(&cfg.output_dir.join("kernels.json"), &envelope("kernels", cfg, &summaries, &checks))?);
    Ok(Outcome { checks, files })
}
