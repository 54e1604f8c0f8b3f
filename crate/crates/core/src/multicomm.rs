//! The multi-commutator 𝒯_K, F_Q, the stability decomposition and the
//! ε-regularity operator.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use rustfft::num_complex::Complex64;

use crate::fracops::{apply_symbol, frac_laplacian_matrix, frac_laplacian_series, riesz_matrix, riesz_series};
use crate::kernelspace::{
    adjoint_multiply, kernel_besov_norm, kernel_dhalf, kernel_frac_lap_first_slot, kernel_rq, Kernel, KernelNormParams,
    KernelTag,
};
use crate::lattice::{same_grid, MatrixField, Symmetry, VectorField};
use crate::normbank::{dyadic_besov, lp_norm};
use crate::special::{c_sigma, periodized_odd};

fn check_dims(k: &Kernel, v: &VectorField) -> Result<()> {
    same_grid(&k.grid, &v.grid)?;
    if k.m != v.m {
        return Err(LabError::Mismatch(format!("kernel dim {} vs field dim {}", k.m, v.m)));
    }
    Ok(())
}

/// 𝒯_K(v)(x) = ∫ [Kᵗ(x, y) v(x) + K(x, y) v(y)] dy, evaluated as
/// Σ_j Δ K(x, y_j)(v(y_j) − v(x)) + Σ_j Δ (Kᵗ + K)(x, y_j) v(x).
pub fn apply_tk(k: &Kernel, v: &VectorField) -> Result<VectorField> {
    check_dims(k, v)?;
    let (n, m, d) = (k.n(), k.m, k.grid.spacing());
    let skip = k.is_singular();
    let mut out = VectorField::zeros(&v.grid, m);
    out.data.par_chunks_mut(m).enumerate().for_each(|(i, o)| {
        let vi = v.at(i);
        let mut diff = vec![0.0; m];
        let mut sym = vec![0.0; m * m];
        for j in 0..n {
            if skip && i == j {
                continue;
            }
            let b = k.block(i, j);
            let vj = v.at(j);
            for a in 0..m {
                for c in 0..m {
                    diff[a] += b[a * m + c] * (vj[c] - vi[c]);
                    sym[a * m + c] += b[c * m + a] + b[a * m + c];
                }
            }
        }
        for a in 0..m {
            o[a] = d * (diff[a] + (0..m).map(|c| sym[a * m + c] * vi[c]).sum::<f64>());
        }
    });
    Ok(out)
}

/// (⟨φ, 𝒯_K v⟩, ∫∫ (φ(x) − φ(y))·K(x, y) v(y) dx dy) with the same cell omission.
pub fn duality_pairing(phi: &VectorField, k: &Kernel, v: &VectorField) -> Result<(f64, f64)> {
    check_dims(k, v)?;
    check_dims(k, phi)?;
    let lhs = phi.dot(&apply_tk(k, v)?);
    let (n, m, d) = (k.n(), k.m, k.grid.spacing());
    let skip = k.is_singular();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                if skip && i == j {
                    continue;
                }
                let b = k.block(i, j);
                let (pi, pj, vj) = (phi.at(i), phi.at(j), v.at(j));
                for a in 0..m {
                    let kv: f64 = (0..m).map(|c| b[a * m + c] * vj[c]).sum();
                    s += (pi[a] - pj[a]) * kv;
                }
            }
            s
        })
        .collect();
    Ok((lhs, d * d * rows.iter().sum::<f64>()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FqRoute {
    Kernel,
    Spectral,
}

/// Window term of the kernel route. On a period L the pairing of ℛ_Q with the
/// periodized sgn|t|^{-1/2} has, at mode l > 0, the symbol
/// −i(√(2π)/L)[2Σ_{0<k<l} ξ_k^{-1/2} + ξ_l^{-1/2}] in place of −2i√(2/π)ξ_l^{1/2};
/// this returns π c_{1/2} times the difference applied to Q. Its leading part is
/// −2ζ(1/2)L^{-1/2}ℜQ.
pub fn fq_window_term(q: &MatrixField) -> MatrixField {
    let g = &q.grid;
    let n = g.n();
    let l = g.period();
    let xi1 = 2.0 * PI / l;
    let mut partial = vec![0.0; n / 2 + 1];
    for k in 1..=n / 2 {
        partial[k] = partial[k - 1] + ((k as f64) * xi1).powf(-0.5);
    }
    let scale = PI * c_sigma(0.5);
    let sym = |k: usize| {
        if k == 0 || k == n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let a = k.min(n - k);
        let sg = if k < n / 2 { 1.0 } else { -1.0 };
        let xi = a as f64 * xi1;
        let window = (2.0 * PI).sqrt() / l * (2.0 * partial[a - 1] + xi.powf(-0.5));
        let line = 2.0 * (2.0 / PI).sqrt() * xi.sqrt();
        Complex64::new(0.0, -sg * scale * (window - line))
    };
    q.map_entries(Symmetry::Symmetric, |e| apply_symbol(g, e, sym))
}

/// F_Q in multiplier units, where the identity reads F_Q = −ℜ[|ξ|^{1/2} Q].
/// The kernel route is π c_{1/2} ∫ ℛ_Q(x, z) sgn(x − z)|x − z|^{-1/2} dz with
/// [`fq_window_term`] removed.
pub fn compute_fq(q: &MatrixField, route: FqRoute) -> Result<MatrixField> {
    if q.tag != Symmetry::Symmetric {
        return Err(LabError::Symmetry(format!("F_Q requires symmetric Q, got {:?}", q.tag)));
    }
    q.check_tag(1e-12)?;
    match route {
        FqRoute::Spectral => Ok(riesz_matrix(&frac_laplacian_matrix(q, 0.5)).scaled(-1.0)),
        FqRoute::Kernel => {
            let raw = fq_kernel_pairing(&kernel_rq(q));
            let mut out = raw.scaled(PI * c_sigma(0.5));
            let w = fq_window_term(q);
            for (o, t) in out.data.iter_mut().zip(&w.data) {
                *o -= t;
            }
            out.tag = Symmetry::Symmetric;
            Ok(out)
        }
    }
}

/// ∫ ℛ(x, z) σ_odd(x − z) dz with σ_odd the periodized sgn|t|^{-1/2}; the
/// diagonal drops out by oddness.
pub fn fq_kernel_pairing(r: &Kernel) -> MatrixField {
    let (n, m, d) = (r.n(), r.m, r.grid.spacing());
    let mm = m * m;
    let s = periodized_odd(0.5, n, r.grid.period());
    let mut out = MatrixField::zeros(&r.grid, m, Symmetry::Symmetric);
    out.data.par_chunks_mut(mm).enumerate().for_each(|(i, o)| {
        for j in 0..n {
            if j == i {
                continue;
            }
            let w = d * s[(i + n - j) % n];
            for (e, b) in r.block(i, j).iter().enumerate() {
                o[e] += w * b;
            }
        }
    });
    out
}

/// 𝒢[v](x) = ∫ [P(x) − P(y)] Kᵗ(x, y) dy · v(x).
pub fn g_term(p: &MatrixField, k: &Kernel, v: &VectorField) -> Result<VectorField> {
    check_dims(k, v)?;
    same_grid(&p.grid, &k.grid)?;
    let (n, m, d) = (k.n(), k.m, k.grid.spacing());
    let skip = k.is_singular();
    let mut out = VectorField::zeros(&v.grid, m);
    out.data.par_chunks_mut(m).enumerate().for_each(|(i, o)| {
        let mut acc = vec![0.0; m * m];
        let pi = p.block(i);
        for j in 0..n {
            if skip && i == j {
                continue;
            }
            let (pj, b) = (p.block(j), k.block(i, j));
            for r in 0..m {
                for c in 0..m {
                    // [(P(x) − P(y)) Kᵗ]_{rc} = Σ_a (P(x) − P(y))_{ra} K_{ca}
                    acc[r * m + c] += (0..m).map(|a| (pi[r * m + a] - pj[r * m + a]) * b[c * m + a]).sum::<f64>();
                }
            }
        }
        let vi = v.at(i);
        for r in 0..m {
            o[r] = d * (0..m).map(|c| acc[r * m + c] * vi[c]).sum::<f64>();
        }
    });
    Ok(out)
}

/// P 𝒯_K(v) = 𝒯_G(P v) + 𝒢[v] with G = P K Pᵗ; needs P orthogonal pointwise.
pub fn stability_decompose(p: &MatrixField, k: &Kernel, v: &VectorField) -> Result<(VectorField, VectorField)> {
    if p.tag != Symmetry::Orthogonal {
        return Err(LabError::Symmetry(format!("stability decomposition needs orthogonal P, got {:?}", p.tag)));
    }
    p.check_tag(1e-10)?;
    let g = adjoint_multiply(p, k)?;
    let tg = apply_tk(&g, &p.apply(v)?)?;
    Ok((tg, g_term(p, k, v)?))
}

/// Data of the ε-regularity system (−Δ)^{1/4} v = 𝒯_K(v) + Ω v.
#[derive(Debug, Clone)]
pub struct EpsSystem {
    pub k: Kernel,
    pub omega: MatrixField,
    pub sigma: f64,
    pub eps: f64,
}

impl EpsSystem {
    pub fn new(k: Kernel, omega: MatrixField, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 0.5) {
            return Err(LabError::SigmaRange(sigma, "(0, 1/2)"));
        }
        same_grid(&k.grid, &omega.grid)?;
        if omega.tag != Symmetry::Antisymmetric {
            return Err(LabError::Symmetry("Omega must be so(m)-valued".into()));
        }
        omega.check_tag(1e-12)?;
        if k.tag != KernelTag::AntiSelfDual {
            return Err(LabError::Symmetry(format!("kernel '{}' is not tagged anti-self-dual", k.label)));
        }
        k.check_tag(1e-10)?;
        let eps = eps_budget(&k, &omega, sigma)?;
        Ok(EpsSystem { k, omega, sigma, eps })
    }

    /// Builds the system from Q (symmetric) and Ω (antisymmetric) scaled so
    /// that each of the two smallness terms equals ε/2.
    pub fn scaled_from(q: &MatrixField, omega: &MatrixField, sigma: f64, eps: f64) -> Result<Self> {
        let k = kernel_dhalf(q);
        let kn = kernel_smallness(&k, sigma)?;
        let on = omega.l2();
        let ks = if kn > 0.0 { 0.5 * eps / kn } else { 0.0 };
        let os = if on > 0.0 { 0.5 * eps / on } else { 0.0 };
        let mut k = k.scaled(ks);
        k.tag = KernelTag::AntiSelfDual;
        Self::new(k, omega.scaled(os), sigma)
    }

    /// ω(x) = Ω(x) + ∫ Kᵗ(x, y) dy.
    pub fn omega_full(&self) -> MatrixField {
        let (n, m, d) = (self.k.n(), self.k.m, self.k.grid.spacing());
        let mut out = self.omega.clone();
        out.tag = Symmetry::None;
        for i in 0..n {
            for j in 0..n {
                if i == j && self.k.is_singular() {
                    continue;
                }
                let b = self.k.block(i, j);
                for r in 0..m {
                    for c in 0..m {
                        out.data[i * m * m + r * m + c] += d * b[c * m + r];
                    }
                }
            }
        }
        out
    }
}

/// ‖(−Δ)^{σ/2} K‖_{A^{-σ}_{2,2}}.
pub fn kernel_smallness(k: &Kernel, sigma: f64) -> Result<f64> {
    let ds = kernel_frac_lap_first_slot(k, sigma)?;
    Ok(kernel_besov_norm(&ds, KernelNormParams::new(-sigma, 2.0, 2.0))?.value)
}

/// ‖(−Δ)^{σ/2} K‖_{A^{-σ}_{2,2}} + ‖Ω‖_{L²}.
pub fn eps_budget(k: &Kernel, omega: &MatrixField, sigma: f64) -> Result<f64> {
    Ok(kernel_smallness(k, sigma)? + omega.l2())
}

/// Dense matrix of v ↦ (−Δ)^{1/4} v − 𝒯_K(v) − Ω v on point-major vectors.
#[derive(Debug, Clone)]
pub struct EpsOperator {
    pub matrix: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
}

pub fn assemble_eps_operator(sys: &EpsSystem) -> EpsOperator {
    let k = &sys.k;
    let (n, m, d) = (k.n(), k.m, k.grid.spacing());
    let nm = n * m;
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    let col0 = frac_laplacian_series(&k.grid, &e0, 0.5);
    let skip = k.is_singular();
    let mut a = DMatrix::<f64>::zeros(nm, nm);
    for i in 0..n {
        for j in 0..n {
            let dij = col0[(i + n - j) % n];
            for c in 0..m {
                a[(i * m + c, j * m + c)] += dij;
            }
            if skip && i == j {
                continue;
            }
            let b = k.block(i, j);
            for r in 0..m {
                for c in 0..m {
                    a[(i * m + r, j * m + c)] -= d * b[r * m + c];
                    a[(i * m + r, i * m + c)] -= d * b[c * m + r];
                }
            }
        }
        let om = sys.omega.block(i);
        for r in 0..m {
            for c in 0..m {
                a[(i * m + r, i * m + c)] -= om[r * m + c];
            }
        }
    }
    EpsOperator { matrix: a, n, m }
}

impl EpsOperator {
    pub fn apply(&self, v: &VectorField) -> VectorField {
        let x = nalgebra::DVector::from_column_slice(&v.data);
        let y = &self.matrix * x;
        VectorField { grid: v.grid.clone(), m: v.m, data: y.as_slice().to_vec() }
    }

    /// Orthonormal basis of the mean-zero subspace: real Fourier modes k ≥ 1
    /// of each component.
    pub fn mean_zero_basis(n: usize, m: usize) -> DMatrix<f64> {
        let mut b = DMatrix::<f64>::zeros(n * m, (n - 1) * m);
        let norm = (2.0 / n as f64).sqrt();
        for c in 0..m {
            let mut col = c * (n - 1);
            for k in 1..n / 2 {
                for i in 0..n {
                    let t = 2.0 * PI * (k * i) as f64 / n as f64;
                    b[(i * m + c, col)] = norm * t.cos();
                    b[(i * m + c, col + 1)] = norm * t.sin();
                }
                col += 2;
            }
            for i in 0..n {
                b[(i * m + c, col)] = if i % 2 == 0 { 1.0 } else { -1.0 } / (n as f64).sqrt();
            }
        }
        b
    }

    /// Smallest singular value of the operator restricted to mean-zero inputs.
    pub fn sigma_min_mean_zero(&self) -> f64 {
        let b = Self::mean_zero_basis(self.n, self.m);
        let ab = &self.matrix * b;
        ab.svd(false, false).singular_values.min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RatioStatus {
    Ok,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompensationRatio {
    pub numerator: f64,
    pub kernel_norm: f64,
    pub v_norm: f64,
    pub ratio: Option<f64>,
    pub status: RatioStatus,
    pub kernel_truncation: f64,
}

/// ‖𝒯_K(v)‖_{Ḃ^{-(2/q-1+σ)}_{rp/(p+r), q'}} / (‖K‖_{A^{-σ}_{p,q}} ‖v‖_{L^r}) with
/// σ = −target.s.
pub fn compensation_ratio(k: &Kernel, v: &VectorField, target: KernelNormParams, r: f64) -> Result<CompensationRatio> {
    target.validate()?;
    let (p, q, sigma) = (target.p, target.q, -target.s);
    let rp = r / (r - 1.0);
    if !(r > 1.0) || !(p > rp) || !(q >= 2.0) || !(sigma > 0.0) {
        return Err(LabError::Hypothesis(format!(
            "need r > 1, p > r', q >= 2, sigma > 0; got r = {r}, p = {p}, q = {q}, sigma = {sigma}"
        )));
    }
    let t = apply_tk(k, v)?;
    let kn = kernel_besov_norm(k, target)?;
    let vn = lp_norm(v, r);
    let numerator = if t.data.iter().all(|x| *x == 0.0) {
        0.0
    } else {
        dyadic_besov(&t, -(2.0 / q - 1.0 + sigma), r * p / (p + r), q / (q - 1.0))?.value
    };
    let den = kn.value * vn;
    let (ratio, status) = if den > 0.0 && den.is_finite() {
        (Some(numerator / den), RatioStatus::Ok)
    } else {
        (None, RatioStatus::Degenerate)
    };
    Ok(CompensationRatio { numerator, kernel_norm: kn.value, v_norm: vn, ratio, status, kernel_truncation: kn.truncation })
}

/// ℜ(|ξ|^{1/2} Q) entrywise; the row integral target of K_{T_R^Q} is −2/c_{1/2}
/// times this.
pub fn riesz_dquarter(q: &MatrixField) -> MatrixField {
    q.map_entries(Symmetry::None, |s| riesz_series(&q.grid, &frac_laplacian_series(&q.grid, s, 0.5)))
}
