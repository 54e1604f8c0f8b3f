//! Two-point kernels K(x_i, y_j), the explicit kernels built from a matrix
//! field Q, and the kernel Besov norms A^s_{p,q}.

use std::f64::consts::PI;
use std::io::{self, Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fracops::{derivative_series, frac_laplacian_series, SpectrumRep};
use crate::lattice::{same_grid, Grid, MatrixField, Symmetry, VectorField};
use crate::normbank::{lorentz_of_values, NormMethod, NormResult};
use crate::special::{c_sigma, cot_kernel, periodized_even, periodized_odd, riemann_zeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DiagonalPolicy {
    /// Diagonal cells carry no value; consumers omit them.
    Singular { gamma: f64 },
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelTag {
    None,
    AntiSelfDual,
    SelfDual,
}

/// Leading singular terms at the diagonal, used for row/column integrals:
/// `even(y)·|x − y|^{-exponent} + odd(y)·(π/L)cot(π(x − y)/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularExpansion {
    pub even_exponent: f64,
    pub even: MatrixField,
    pub odd: MatrixField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub grid: Arc<Grid>,
    pub m: usize,
    /// Block (i, j) starts at `(i * n + j) * m * m`, row-major inside the block.
    pub data: Vec<f64>,
    pub diagonal: DiagonalPolicy,
    pub tag: KernelTag,
    pub label: String,
    pub expansion: Option<SingularExpansion>,
}

impl Kernel {
    pub fn from_fn(
        grid: &Arc<Grid>,
        m: usize,
        diagonal: DiagonalPolicy,
        label: &str,
        f: impl Fn(usize, usize, &mut [f64]) + Sync,
    ) -> Kernel {
        let n = grid.n();
        let mm = m * m;
        let mut data = vec![0.0; n * n * mm];
        data.par_chunks_mut(n * mm).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                if i == j && matches!(diagonal, DiagonalPolicy::Singular { .. }) {
                    continue;
                }
                f(i, j, &mut row[j * mm..(j + 1) * mm]);
            }
        });
        Kernel { grid: grid.clone(), m, data, diagonal, tag: KernelTag::None, label: label.into(), expansion: None }
    }

    /// Scalar kernel from an n×n row-major table.
    pub fn from_scalar_table(grid: &Arc<Grid>, table: Vec<f64>, diagonal: DiagonalPolicy, label: &str) -> Kernel {
        assert_eq!(table.len(), grid.n() * grid.n());
        let mut k = Kernel { grid: grid.clone(), m: 1, data: table, diagonal, tag: KernelTag::None, label: label.into(), expansion: None };
        k.clear_singular_diagonal();
        k
    }

    /// Assembles an m×m kernel from per-entry scalar n×n tables.
    fn from_entry_tables(grid: &Arc<Grid>, m: usize, tables: &[Vec<f64>], diagonal: DiagonalPolicy, label: &str) -> Kernel {
        let n = grid.n();
        let mm = m * m;
        let mut data = vec![0.0; n * n * mm];
        for (e, t) in tables.iter().enumerate() {
            for (p, v) in t.iter().enumerate() {
                data[p * mm + e] = *v;
            }
        }
        let mut k = Kernel { grid: grid.clone(), m, data, diagonal, tag: KernelTag::None, label: label.into(), expansion: None };
        k.clear_singular_diagonal();
        k
    }

    fn clear_singular_diagonal(&mut self) {
        if let DiagonalPolicy::Singular { .. } = self.diagonal {
            let (n, mm) = (self.n(), self.m * self.m);
            for i in 0..n {
                self.data[(i * n + i) * mm..(i * n + i + 1) * mm].fill(0.0);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.diagonal, DiagonalPolicy::Singular { .. })
    }

    pub fn block(&self, i: usize, j: usize) -> &[f64] {
        let mm = self.m * self.m;
        let p = (i * self.n() + j) * mm;
        &self.data[p..p + mm]
    }

    /// Scalar table of entry (a, b).
    pub fn entry_table(&self, a: usize, b: usize) -> Vec<f64> {
        let mm = self.m * self.m;
        (0..self.n() * self.n()).map(|p| self.data[p * mm + a * self.m + b]).collect()
    }

    pub fn scaled(&self, s: f64) -> Kernel {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out.expansion = self.expansion.as_ref().map(|e| SingularExpansion {
            even_exponent: e.even_exponent,
            even: e.even.scaled(s),
            odd: e.odd.scaled(s),
        });
        out
    }

    /// max over i ≠ j and entries of |K(x_i, y_j) + Kᵗ(y_j, x_i)|.
    pub fn anti_self_dual_residual(&self) -> f64 {
        self.duality_residual(1.0)
    }

    /// max over i ≠ j and entries of |K(x_i, y_j) − Kᵗ(y_j, x_i)|.
    pub fn self_dual_residual(&self) -> f64 {
        self.duality_residual(-1.0)
    }

    fn duality_residual(&self, sign: f64) -> f64 {
        let (n, m) = (self.n(), self.m);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j && self.is_singular() {
                    continue;
                }
                let (kij, kji) = (self.block(i, j), self.block(j, i));
                for a in 0..m {
                    for b in 0..m {
                        worst = worst.max((kij[a * m + b] + sign * kji[b * m + a]).abs());
                    }
                }
            }
        }
        worst
    }

    /// Scans the kernel and sets the tag it actually satisfies at `tol`.
    pub fn detect_tag(&mut self, tol: f64) -> KernelTag {
        self.tag = if self.anti_self_dual_residual() <= tol {
            KernelTag::AntiSelfDual
        } else if self.self_dual_residual() <= tol {
            KernelTag::SelfDual
        } else {
            KernelTag::None
        };
        self.tag
    }

    /// Verifies the stored tag by direct scan.
    pub fn check_tag(&self, tol: f64) -> Result<()> {
        let r = match self.tag {
            KernelTag::None => return Ok(()),
            KernelTag::AntiSelfDual => self.anti_self_dual_residual(),
            KernelTag::SelfDual => self.self_dual_residual(),
        };
        if r <= tol {
            Ok(())
        } else {
            Err(LabError::Symmetry(format!("kernel '{}' tagged {:?} has residual {r:e}", self.label, self.tag)))
        }
    }
}

/// v ↦ ∫ K(x, y) v(y) dy by the rectangle rule; singular diagonals are omitted.
pub fn kernel_apply(k: &Kernel, v: &VectorField) -> Result<VectorField> {
    same_grid(&k.grid, &v.grid)?;
    if k.m != v.m {
        return Err(LabError::Mismatch(format!("kernel dim {} vs field dim {}", k.m, v.m)));
    }
    let (n, m, d) = (k.n(), k.m, k.grid.spacing());
    let skip = k.is_singular();
    let mut out = VectorField::zeros(&v.grid, m);
    out.data.par_chunks_mut(m).enumerate().for_each(|(i, o)| {
        for j in 0..n {
            if skip && i == j {
                continue;
            }
            let b = k.block(i, j);
            let vj = v.at(j);
            for a in 0..m {
                o[a] += d * (0..m).map(|c| b[a * m + c] * vj[c]).sum::<f64>();
            }
        }
    });
    Ok(out)
}

fn signed_offset(n: usize, i: usize, j: usize) -> usize {
    (i + n - j) % n
}

fn scalar_dhalf_table(grid: &Grid, q: &[f64], rho: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let mut t = vec![0.0; n * n];
    t.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            if i != j {
                row[j] = (q[i] - q[j]) * rho[signed_offset(n, i, j)];
            }
        }
    });
    t
}

fn entries(q: &MatrixField) -> Vec<Vec<f64>> {
    let m = q.m;
    (0..m * m).map(|e| q.entry(e / m, e % m)).collect()
}

fn kernel_tag_for(q: &MatrixField, when_symmetric: KernelTag) -> KernelTag {
    if q.tag == Symmetry::Symmetric {
        when_symmetric
    } else {
        KernelTag::None
    }
}

/// K(x, y) = (Q(x) − Q(y)) |x − y|^{-3/2}, with |t|^{-3/2} summed over periods.
pub fn kernel_dhalf(q: &MatrixField) -> Kernel {
    let g = &q.grid;
    let rho = periodized_even(1.5, g.n(), g.period());
    let tables: Vec<Vec<f64>> = entries(q).iter().map(|e| scalar_dhalf_table(g, e, &rho)).collect();
    let mut k = Kernel::from_entry_tables(g, q.m, &tables, DiagonalPolicy::Singular { gamma: 1.5 }, "K_dhalf");
    k.tag = kernel_tag_for(q, KernelTag::AntiSelfDual);
    k
}

/// Same kernel on the line: the distance is the minimal periodic image, no
/// period sum.
pub fn kernel_dhalf_line(q: &MatrixField) -> Kernel {
    let g = &q.grid;
    let n = g.n();
    let rho: Vec<f64> = (0..n)
        .map(|j| {
            let t = j.min(n - j) as f64 * g.spacing();
            if j == 0 { 0.0 } else { t.powf(-1.5) }
        })
        .collect();
    let tables: Vec<Vec<f64>> = entries(q).iter().map(|e| scalar_dhalf_table(g, e, &rho)).collect();
    let mut k = Kernel::from_entry_tables(g, q.m, &tables, DiagonalPolicy::Singular { gamma: 1.5 }, "K_dhalf_line");
    k.tag = kernel_tag_for(q, KernelTag::AntiSelfDual);
    k
}

/// Scalar table of the kernel of ℜ∘q∘ℜ off the diagonal, by the midpoint-split
/// subtracted quadrature in z. The diagonal is filled by continuity.
fn scalar_rq_table(grid: &Arc<Grid>, q: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let d = grid.spacing();
    let l = grid.period();
    let u = PI / l;
    let h = cot_kernel(n, l);
    let dq = derivative_series(grid, q);
    let at = |i: usize, e: isize| -> usize { (i as isize + e).rem_euclid(n as isize) as usize };
    let prim = |z: f64, y: f64| -> f64 {
        let c = 1.0 / (u * (-y)).tan();
        (z + c / u * ((u * (z - y)).sin().abs().ln() - (u * (-z)).sin().abs().ln())) / (l * l)
    };
    let half = (n / 2) as f64;
    let mut t = vec![0.0; n * n];
    t.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in (i + 1)..n {
            let mut dd = (j - i) as isize;
            if dd > (n / 2) as isize {
                dd -= n as isize;
            }
            let hxy = h[at(0, -dd)];
            let mid = dd as f64 / 2.0;
            let (xa, xb, ya, yb) = if dd > 0 {
                (mid - half, mid, mid, mid + half)
            } else {
                (mid, mid + half, mid - half, mid)
            };
            let arc = |lo: f64, hi: f64, center: usize, is_x: bool| -> f64 {
                let (e0, e1) = (lo.ceil() as isize, hi.floor() as isize);
                let mut s = 0.0;
                for e in e0..=e1 {
                    let w = if (e as f64 - lo).abs() < 1e-9 || (e as f64 - hi).abs() < 1e-9 { 0.5 } else { 1.0 };
                    let val = if is_x && e == 0 {
                        -dq[i] / PI * hxy
                    } else if !is_x && e == dd {
                        dq[j] / PI * hxy
                    } else {
                        (q[at(i, e)] - q[center]) * h[at(0, -e)] * h[at(0, e - dd)]
                    };
                    s += w * val;
                }
                d * s
            };
            let y = dd as f64 * d;
            let ix = prim(xb * d, y) - prim(xa * d, y);
            let iy = prim(yb * d, y) - prim(ya * d, y);
            row[j] = arc(xa, xb, i, true) + arc(ya, yb, j, false) + q[i] * ix + q[j] * iy;
        }
    });
    for i in 0..n {
        for j in 0..i {
            t[i * n + j] = t[j * n + i];
        }
    }
    for i in 0..n {
        t[i * n + i] = 0.5 * (t[i * n + (i + 1) % n] + t[i * n + (i + n - 1) % n]);
    }
    t
}

/// ℛ_Q: kernel of ℜ∘Q∘ℜ with the −Q·δ part removed, in PV units
/// (1/π² absorbed into the two cot factors).
pub fn kernel_rq(q: &MatrixField) -> Kernel {
    let g = &q.grid;
    let tables: Vec<Vec<f64>> = entries(q).iter().map(|e| scalar_rq_table(g, e)).collect();
    let mut k = Kernel::from_entry_tables(g, q.m, &tables, DiagonalPolicy::Finite, "R_Q");
    k.tag = kernel_tag_for(q, KernelTag::SelfDual);
    k
}

/// Circular convolution (c ∗ r)(i) = Σ_k c[i − k] r[k] via FFT.
fn circular_convolve(grid: &Arc<Grid>, c_hat: &[Complex64], r: &[f64]) -> Vec<f64> {
    let mut s = SpectrumRep::forward(grid, r);
    for (a, b) in s.coeffs.iter_mut().zip(c_hat) {
        *a *= b;
    }
    s.inverse()
}

struct TrqParts {
    table: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

fn scalar_trq(grid: &Arc<Grid>, q: &[f64]) -> TrqParts {
    let n = grid.n();
    let d = grid.spacing();
    let l = grid.period();
    let rho = periodized_even(1.5, n, l);
    let rho_p: Vec<f64> = periodized_odd(2.5, n, l).iter().map(|v| -1.5 * v).collect();
    let s_odd = periodized_odd(0.5, n, l);
    let s_even = periodized_even(0.5, n, l);
    let s_odd_p: Vec<f64> = periodized_even(1.5, n, l).iter().map(|v| -0.5 * v).collect();
    let h = cot_kernel(n, l);
    let dq = derivative_series(grid, q);
    let ap: Vec<f64> = frac_laplacian_series(grid, q, 0.5).iter().map(|v| v / c_sigma(0.5)).collect();
    let cw: Vec<f64> = h.iter().map(|v| d * v).collect();
    let cw_hat = SpectrumRep::forward(grid, &cw).coeffs;

    // column j: r(x) = K(x, y_j) − Q'(y_j) σ_odd(x − y_j), r(y_j) = 0
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut r = vec![0.0; n];
            let mut dr = vec![0.0; n];
            for i in 0..n {
                if i == j {
                    continue;
                }
                let o = signed_offset(n, i, j);
                r[i] = (q[i] - q[j]) * rho[o] - dq[j] * s_odd[o];
                dr[i] = dq[i] * rho[o] + (q[i] - q[j]) * rho_p[o] - dq[j] * s_odd_p[o];
            }
            let conv = circular_convolve(grid, &cw_hat, &r);
            (0..n)
                .map(|i| {
                    if i == j {
                        return 0.0;
                    }
                    let o = signed_offset(n, i, j);
                    let riesz_r = -conv[i] + d / PI * dr[i];
                    -riesz_r - dq[j] * s_even[o] + h[o] * ap[j]
                })
                .collect()
        })
        .collect();
    let mut table = vec![0.0; n * n];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            table[i * n + j] = col[i];
        }
    }
    TrqParts { table, alpha: dq.iter().map(|v| -v).collect(), beta: ap.iter().map(|v| v / PI).collect() }
}

/// Kernel of T_R^Q in PV units, built by subtracting the |x − y|^{-1/2}
/// singular part before the x-Riesz transform. Carries its singular expansion.
pub fn kernel_trq(q: &MatrixField) -> Result<Kernel> {
    if q.tag != Symmetry::Symmetric {
        return Err(LabError::Symmetry(format!("K_TRQ requires symmetric Q, got {:?}", q.tag)));
    }
    q.check_tag(1e-12)?;
    let g = &q.grid;
    let m = q.m;
    let parts: Vec<TrqParts> = entries(q).iter().map(|e| scalar_trq(g, e)).collect();
    let tables: Vec<Vec<f64>> = parts.iter().map(|p| p.table.clone()).collect();
    let mut k = Kernel::from_entry_tables(g, m, &tables, DiagonalPolicy::Singular { gamma: 1.0 }, "K_TRQ");
    let mut even = MatrixField::zeros(g, m, Symmetry::Symmetric);
    let mut odd = MatrixField::zeros(g, m, Symmetry::Symmetric);
    for (e, p) in parts.iter().enumerate() {
        even.set_entry(e / m, e % m, &p.alpha);
        odd.set_entry(e / m, e % m, &p.beta);
    }
    k.expansion = Some(SingularExpansion { even_exponent: 0.5, even, odd });
    Ok(k)
}

// Σ_{j≠0} Δ σ_even(jΔ) minus its integral: the singular cell gives 2ζ(s)Δ^{1-s},
// the smooth remainder of the periodized kernel at 0 gives −2ζ(s)L^{-s}Δ.
fn diagonal_cell_weight(s: f64, d: f64, period: f64) -> f64 {
    2.0 * riemann_zeta(s) * (d.powf(1.0 - s) - d * period.powf(-s))
}

/// ∫ K(x, y) dy with the diagonal cell restored from the singular expansion.
pub fn row_integral(k: &Kernel) -> MatrixField {
    let (n, m, d) = (k.n(), k.m, k.grid.spacing());
    let mm = m * m;
    let mut out = MatrixField::zeros(&k.grid, m, Symmetry::None);
    for i in 0..n {
        for j in 0..n {
            if i == j && k.is_singular() {
                continue;
            }
            for e in 0..mm {
                out.data[i * mm + e] += d * k.block(i, j)[e];
            }
        }
    }
    if let Some(ex) = &k.expansion {
        let z = diagonal_cell_weight(ex.even_exponent, d, k.grid.period());
        for e in 0..mm {
            let beta_p = derivative_series(&k.grid, &ex.odd.entry(e / m, e % m));
            let alpha = ex.even.entry(e / m, e % m);
            for i in 0..n {
                out.data[i * mm + e] -= z * alpha[i] + d * beta_p[i];
            }
        }
    }
    out
}

/// ∫ K(x, y) dx with the diagonal cell restored from the singular expansion.
pub fn column_integral(k: &Kernel) -> MatrixField {
    let (n, m, d) = (k.n(), k.m, k.grid.spacing());
    let mm = m * m;
    let mut out = MatrixField::zeros(&k.grid, m, Symmetry::None);
    for i in 0..n {
        for j in 0..n {
            if i == j && k.is_singular() {
                continue;
            }
            for e in 0..mm {
                out.data[j * mm + e] += d * k.block(i, j)[e];
            }
        }
    }
    if let Some(ex) = &k.expansion {
        let z = diagonal_cell_weight(ex.even_exponent, d, k.grid.period());
        for (p, a) in out.data.iter_mut().zip(&ex.even.data) {
            *p -= z * a;
        }
    }
    out
}

/// 𝔖(x, y) = K(x, y) − Kᵗ(y, x).
pub fn antisymmetrize(k: &Kernel) -> Kernel {
    let m = k.m;
    let mut out = Kernel::from_fn(&k.grid, m, k.diagonal, &format!("{}-antisym", k.label), |i, j, o| {
        let (a, b) = (k.block(i, j), k.block(j, i));
        for r in 0..m {
            for c in 0..m {
                o[r * m + c] = a[r * m + c] - b[c * m + r];
            }
        }
    });
    out.tag = KernelTag::AntiSelfDual;
    out
}

/// 𝔖^Q(x, y) = K_{T_R^Q}(x, y) − K_{T_R^Q}ᵗ(y, x).
pub fn antisymmetrize_sq(q: &MatrixField) -> Result<Kernel> {
    let mut s = antisymmetrize(&kernel_trq(q)?);
    s.label = "S_Q".into();
    Ok(s)
}

/// G(x, y) = P(x) K(x, y) Pᵗ(y).
pub fn adjoint_multiply(p: &MatrixField, k: &Kernel) -> Result<Kernel> {
    same_grid(&p.grid, &k.grid)?;
    if p.m != k.m {
        return Err(LabError::Mismatch(format!("P dim {} vs kernel dim {}", p.m, k.m)));
    }
    let m = k.m;
    let mut g = Kernel::from_fn(&k.grid, m, k.diagonal, &format!("P {} Pt", k.label), |i, j, o| {
        let (pi, kb, pj) = (p.block(i), k.block(i, j), p.block(j));
        for r in 0..m {
            for c in 0..m {
                let mut s = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        s += pi[r * m + a] * kb[a * m + b] * pj[c * m + b];
                    }
                }
                o[r * m + c] = s;
            }
        }
    });
    g.tag = k.tag;
    Ok(g)
}

/// Multiplier (−Δ)^{σ/2} applied to x ↦ K(x, y_j) for every column; singular
/// diagonal cells enter as 0 (the symmetric PV value of an odd singularity).
pub fn kernel_frac_lap_first_slot(k: &Kernel, sigma: f64) -> Result<Kernel> {
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(LabError::SigmaRange(sigma, "(0, 1/2)"));
    }
    let (n, m) = (k.n(), k.m);
    let mm = m * m;
    let g = &k.grid;
    let cols: Vec<Vec<f64>> = (0..n * mm)
        .into_par_iter()
        .map(|c| {
            let (j, e) = (c / mm, c % mm);
            let col: Vec<f64> = (0..n).map(|i| k.data[(i * n + j) * mm + e]).collect();
            frac_laplacian_series(g, &col, sigma)
        })
        .collect();
    let mut data = vec![0.0; n * n * mm];
    for (c, col) in cols.iter().enumerate() {
        let (j, e) = (c / mm, c % mm);
        for i in 0..n {
            data[(i * n + j) * mm + e] = col[i];
        }
    }
    Ok(Kernel {
        grid: g.clone(),
        m,
        data,
        diagonal: DiagonalPolicy::Finite,
        tag: KernelTag::None,
        label: format!("dsigma {}", k.label),
        expansion: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelNormParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    /// Secondary Lorentz exponent; `f64::INFINITY` allowed.
    pub lorentz_r: Option<f64>,
}

impl KernelNormParams {
    pub fn new(s: f64, p: f64, q: f64) -> Self {
        KernelNormParams { s, p, q, lorentz_r: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(LabError::Exponent(format!("p = {} must satisfy 1 < p < inf", self.p)));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(LabError::Exponent(format!("q = {} must satisfy 1 <= q < inf", self.q)));
        }
        if let Some(r) = self.lorentz_r {
            if !(r >= 1.0) {
                return Err(LabError::Exponent(format!("Lorentz r = {r} must be >= 1")));
            }
        }
        if !self.s.is_finite() {
            return Err(LabError::Exponent("s must be finite".into()));
        }
        Ok(())
    }
}

/// Which slot the shift h acts on along the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSlot {
    /// x ↦ K(x, x + h)
    Second,
    /// x ↦ K(x + h, x)
    First,
}

pub fn kernel_besov_norm(k: &Kernel, params: KernelNormParams) -> Result<NormResult> {
    kernel_besov_norm_slot(k, params, ShiftSlot::Second)
}

/// (Σ_h Δ |h|^{1 − qs} ‖K(·, · + h)‖^q_{L^p})^{1/q} over h = kΔ, 1 ≤ |k| ≤ n/2.
pub fn kernel_besov_norm_slot(k: &Kernel, params: KernelNormParams, slot: ShiftSlot) -> Result<NormResult> {
    params.validate()?;
    let (n, d, mm) = (k.n(), k.grid.spacing(), k.m * k.m);
    let quarter = k.grid.period() / 4.0;
    let terms: Vec<(f64, f64)> = (1..=n / 2)
        .into_par_iter()
        .flat_map_iter(|kk| [kk as isize, -(kk as isize)])
        .map(|off| {
            let vals: Vec<f64> = (0..n)
                .map(|i| {
                    let j = k.grid.wrap(i, off);
                    let (a, b) = match slot {
                        ShiftSlot::Second => (i, j),
                        ShiftSlot::First => (j, i),
                    };
                    let p = (a * n + b) * mm;
                    k.data[p..p + mm].iter().map(|v| v * v).sum::<f64>().sqrt()
                })
                .collect();
            let inner = match params.lorentz_r {
                None => (d * vals.iter().map(|v| v.powf(params.p)).sum::<f64>()).powf(1.0 / params.p),
                Some(r) => lorentz_of_values(&vals, d, params.p, r),
            };
            let habs = off.unsigned_abs() as f64 * d;
            (habs, d * habs.powf(1.0 - params.q * params.s) * inner.powf(params.q))
        })
        .collect();
    let total: f64 = terms.iter().map(|t| t.1).sum();
    let tail: f64 = terms.iter().filter(|t| t.0 > quarter).map(|t| t.1).sum();
    Ok(NormResult {
        value: total.powf(1.0 / params.q),
        method: NormMethod::Difference,
        truncation: if total > 0.0 { tail / total } else { 0.0 },
    })
}

const DUMP_MAGIC: &[u8; 4] = b"FCK1";

/// Binary dump: "FCK1", n (u64 LE), m (u64 LE), γ (f64 LE, NaN for finite
/// diagonals), label length (u32 LE) and UTF-8 label, then the (n·m)×(n·m)
/// matrix row-major as f64 LE. Singular diagonal blocks are written as NaN.
pub fn write_dump(k: &Kernel, w: &mut impl Write) -> io::Result<()> {
    let (n, m) = (k.n(), k.m);
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(m as u64).to_le_bytes())?;
    let gamma = match k.diagonal {
        DiagonalPolicy::Singular { gamma } => gamma,
        DiagonalPolicy::Finite => f64::NAN,
    };
    w.write_all(&gamma.to_le_bytes())?;
    w.write_all(&(k.label.len() as u32).to_le_bytes())?;
    w.write_all(k.label.as_bytes())?;
    let mut buf = Vec::with_capacity(n * m * 8);
    for i in 0..n {
        for a in 0..m {
            buf.clear();
            for j in 0..n {
                for b in 0..m {
                    let v = if i == j && k.is_singular() { f64::NAN } else { k.block(i, j)[a * m + b] };
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpHeader {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub label: String,
}

/// Reads a dump back as header plus the (n·m)² values.
pub fn read_dump(r: &mut impl Read) -> io::Result<(DumpHeader, Vec<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let m = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let gamma = f64::from_le_bytes(b8);
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let mut label = vec![0u8; u32::from_le_bytes(b4) as usize];
    r.read_exact(&mut label)?;
    let label = String::from_utf8(label).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    let mut vals = vec![0.0; n * m * n * m];
    for v in vals.iter_mut() {
        r.read_exact(&mut b8)?;
        *v = f64::from_le_bytes(b8);
    }
    Ok((DumpHeader { n, m, gamma, label }, vals))
}
