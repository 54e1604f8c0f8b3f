//! Identity suite: backend agreement, exact algebraic identities and the
//! kernel-versus-composition routes, each run over the refinement list.

use std::collections::BTreeMap;

use fraclab_core::Complex64;

use fraclab_core::fracops::{apply_pipeline, apply_symbol, build_named_operator, frac_laplacian, riesz, Backend};
use fraclab_core::kernelspace::{
    antisymmetrize_sq, column_integral, kernel_dhalf, kernel_trq, row_integral, DiagonalPolicy,
};
use fraclab_core::multicomm::{apply_tk, compute_fq, duality_pairing, riesz_dquarter, stability_decompose, FqRoute};
use fraclab_core::report::{empirical_order, RefinementPoint};
use fraclab_core::special::c_sigma;
use fraclab_core::{IdentityReport, Kernel, KernelTag, Symmetry};

use super::{grid, rel_l2, sample, second_spec, spec, Outcome, RunError};
use crate::config::Config;
use crate::output::{envelope, num, opt, write_csv, write_json, Check};

/// Tolerance of identities that are exact in floating point.
pub const EXACT_TOL: f64 = 1e-10;
/// Backend agreement tolerance on the finest grid.
pub const BACKEND_TOL: f64 = 1e-3;
/// Kernel-route tolerance at the finest grid.
pub const ROUTE_TOL: f64 = 5e-2;
/// Minimum empirical order for kernel-route residuals.
pub const ROUTE_ORDER: f64 = 0.4;
/// Backend residuals should roughly halve per doubling of n.
pub const BACKEND_ORDER: f64 = 1.0;

#[derive(Clone, Copy)]
enum Kind {
    Exact,
    Backend,
    Route,
}

const IDENTITIES: [(&str, Kind); 13] = [
    ("backend_fraclap_0.25", Kind::Backend),
    ("backend_fraclap_0.5", Kind::Backend),
    ("backend_riesz", Kind::Backend),
    ("riesz_squared", Kind::Exact),
    ("dquarter_composition", Kind::Exact),
    ("duality", Kind::Exact),
    ("dhalf_anti_self_dual", Kind::Exact),
    ("stability_decomposition", Kind::Exact),
    ("kernel_vs_3commutator", Kind::Route),
    ("trq_row_integral", Kind::Route),
    ("trq_column_integral", Kind::Route),
    ("fq_two_route", Kind::Route),
    ("tsq_two_route", Kind::Route),
];

fn residuals(cfg: &Config, n: usize) -> Result<BTreeMap<&'static str, f64>, RunError> {
    let g = grid(cfg, n)?;
    let (q, v) = sample(&spec(cfg, Symmetry::Symmetric), &g, 0);
    let (q2, phi) = sample(&spec(cfg, Symmetry::Symmetric), &g, 1);
    let (p, _) = sample(&second_spec(cfg, Symmetry::Orthogonal), &g, 0);
    let mut out = BTreeMap::new();

    for (name, s) in [("backend_fraclap_0.25", 0.25), ("backend_fraclap_0.5", 0.5)] {
        let a = frac_laplacian(&v, s, Backend::Quadrature)?;
        let b = frac_laplacian(&v, s, Backend::Multiplier)?;
        out.insert(name, rel_l2(&a.data, &b.data));
    }
    out.insert(
        "backend_riesz",
        rel_l2(&riesz(&v, Backend::Quadrature).data, &riesz(&v, Backend::Multiplier).data),
    );

    // ℜ is zeroed at the Nyquist mode by convention, so compare on the
    // complement of the zero and Nyquist modes.
    let rr = riesz(&riesz(&v, Backend::Multiplier), Backend::Multiplier).scaled(-1.0);
    let mut vp = v.clone();
    for c in 0..v.m {
        let comp = apply_symbol(&g, &v.component(c), |k| {
            Complex64::new(if k == 0 || k == n / 2 { 0.0 } else { 1.0 }, 0.0)
        });
        vp.set_component(c, &comp);
    }
    out.insert("riesz_squared", rel_l2(&rr.data, &vp.data));
    let dd = frac_laplacian(&frac_laplacian(&v, 0.5, Backend::Multiplier)?, 0.5, Backend::Multiplier)?;
    let d1 = frac_laplacian(&v, 1.0, Backend::Multiplier)?;
    out.insert("dquarter_composition", rel_l2(&dd.data, &d1.data));

    // Smooth nonsingular anti-self-dual kernel A(x, y) − Aᵗ(y, x), A = Q(x)Q₂(y).
    let m = q.m;
    let mut smooth = Kernel::from_fn(&g, m, DiagonalPolicy::Finite, "smooth", |i, j, o| {
        for r in 0..m {
            for c in 0..m {
                let mut s = 0.0;
                for a in 0..m {
                    s += q.block(i)[r * m + a] * q2.block(j)[a * m + c];
                    s -= q.block(j)[c * m + a] * q2.block(i)[a * m + r];
                }
                o[r * m + c] = s;
            }
        }
    });
    smooth.tag = KernelTag::AntiSelfDual;
    let (lhs, rhs) = duality_pairing(&phi, &smooth, &v)?;
    out.insert("duality", (lhs - rhs).abs() / (phi.l2() * apply_tk(&smooth, &v)?.l2()));

    let kd = kernel_dhalf(&q);
    let kmax = kd.data.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    out.insert("dhalf_anti_self_dual", kd.anti_self_dual_residual() / kmax);

    let (tg, gv) = stability_decompose(&p, &kd, &v)?;
    let mut rhs = tg;
    rhs.axpy(1.0, &gv);
    let lhs = p.apply(&apply_tk(&kd, &v)?)?;
    out.insert("stability_decomposition", rel_l2(&rhs.data, &lhs.data));

    let t = apply_tk(&kd, &v)?.scaled(c_sigma(0.5));
    let t3 = apply_pipeline(&build_named_operator("T3", &q, None)?, &v)?;
    out.insert("kernel_vs_3commutator", rel_l2(&t.data, &t3.data));

    // Row and column integrals of K_{T_R^Q}: −2ℜ(a_p) and 0, a_p = (−Δ)^{1/4}Q / c.
    let ktr = kernel_trq(&q)?;
    let target = riesz_dquarter(&q).scaled(-2.0 / c_sigma(0.5));
    out.insert("trq_row_integral", rel_l2(&row_integral(&ktr).data, &target.data));
    out.insert("trq_column_integral", column_integral(&ktr).l2() / target.l2());

    let fk = compute_fq(&q, FqRoute::Kernel)?;
    let fs = compute_fq(&q, FqRoute::Spectral)?;
    out.insert("fq_two_route", rel_l2(&fk.data, &fs.data));

    let sq = antisymmetrize_sq(&q)?;
    let ts = apply_tk(&sq, &v)?;
    let tr = apply_pipeline(&build_named_operator("TSQ_R", &q, None)?, &v)?;
    out.insert("tsq_two_route", rel_l2(&ts.data, &tr.data));
    Ok(out)
}

pub fn run_identities(cfg: &Config) -> Result<Vec<IdentityReport>, RunError> {
    let mut series: BTreeMap<&str, Vec<RefinementPoint>> = BTreeMap::new();
    for &n in &cfg.refinements {
        for (name, value) in residuals(cfg, n)? {
            series.entry(name).or_default().push(RefinementPoint { n, value });
        }
    }
    Ok(IDENTITIES
        .iter()
        .map(|&(name, kind)| {
            let pts = series.remove(name).unwrap_or_default();
            let tol = match kind {
                Kind::Exact => EXACT_TOL,
                Kind::Backend => BACKEND_TOL,
                Kind::Route => ROUTE_TOL,
            };
            let mut rep = IdentityReport::from_series(name, cfg.radius, tol, pts);
            if let Kind::Exact = kind {
                // exact identities must hold at every n
                rep.residual = rep.refinement.iter().map(|p| p.value).fold(0.0, f64::max);
                rep.pass = rep.residual <= tol;
            }
            rep
        })
        .collect())
}

fn checks_for(reports: &[IdentityReport]) -> Vec<Check> {
    let mut checks = vec![];
    for (rep, &(_, kind)) in reports.iter().zip(IDENTITIES.iter()) {
        checks.push(Check::at_most(&rep.name, rep.residual, rep.tolerance));
        let floor = match kind {
            Kind::Exact => None,
            Kind::Backend => Some(BACKEND_ORDER),
            Kind::Route => Some(ROUTE_ORDER),
        };
        if let Some(floor) = floor {
            let order = empirical_order(&rep.refinement).unwrap_or(f64::NAN);
            checks.push(Check::at_least(&format!("{}_order", rep.name), order, floor));
        }
    }
    checks
}

pub fn identities(cfg: &Config) -> Result<Outcome, RunError> {
    let reports = run_identities(cfg)?;
    let checks = checks_for(&reports);
    let dir = &cfg.output_dir;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|r| {
            r.refinement
                .iter()
                .map(|p| vec![r.name.clone(), p.n.to_string(), num(p.value), num(r.tolerance), opt(r.order)])
        })
        .collect();
    let files = vec![
        write_json(&dir.join("identities.json"), &envelope("identities", cfg, &reports, &checks))?,
        write_csv(&dir.join("identities.csv"), &["identity", "n", "residual", "tolerance", "order"], &rows)?,
    ];
    Ok(Outcome { checks, files })
}
