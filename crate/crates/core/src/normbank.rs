//! Homogeneous Besov, Sobolev and Lorentz norms of sampled fields.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fracops::SpectrumRep;
use crate::lattice::{shift, MatrixField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormMethod {
    Difference,
    Dyadic,
    Spectral,
    Rearrangement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub method: NormMethod,
    /// Share of the value's q-th power coming from the largest shifts or
    /// frequencies; 0 when not applicable.
    pub truncation: f64,
}

impl MatrixField {
    /// The m² entries as components of a vector field (Frobenius pointwise).
    pub fn as_vector_field(&self) -> VectorField {
        VectorField { grid: self.grid.clone(), m: self.m * self.m, data: self.data.clone() }
    }
}

fn pointwise_abs(f: &VectorField) -> Vec<f64> {
    (0..f.n()).map(|i| f.at(i).iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
}

fn lp_of_values(vals: &[f64], w: f64, p: f64) -> f64 {
    (w * vals.iter().map(|v| v.powf(p)).sum::<f64>()).powf(1.0 / p)
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0) || !(q >= 1.0) || !q.is_finite() || !p.is_finite() {
        return Err(LabError::Exponent(format!("need 1 <= p, q < inf, got p = {p}, q = {q}")));
    }
    Ok(())
}

/// (Σ_h Δ |h|^{-1-sq} ‖f(· + h) − f‖^q_{L^p})^{1/q}, h = kΔ, 1 ≤ |k| ≤ n/2.
pub fn besov_difference(f: &VectorField, s: f64, p: f64, q: f64) -> Result<NormResult> {
    if !(s > 0.0 && s < 1.0) {
        return Err(LabError::Exponent(format!("difference Besov needs 0 < s < 1, got {s}")));
    }
    check_pq(p, q)?;
    let (n, d) = (f.n(), f.grid.spacing());
    let quarter = f.grid.period() / 4.0;
    let mut total = 0.0;
    let mut tail = 0.0;
    for k in 1..=n / 2 {
        for off in [k as isize, -(k as isize)] {
            let diff = shift(f, off).sub(f);
            let h = k as f64 * d;
            let t = d * h.powf(-1.0 - s * q) * lp_of_values(&pointwise_abs(&diff), d, p).powf(q);
            total += t;
            if h > quarter {
                tail += t;
            }
        }
    }
    Ok(NormResult {
        value: total.powf(1.0 / q),
        method: NormMethod::Difference,
        truncation: if total > 0.0 { tail / total } else { 0.0 },
    })
}

fn mean_check(f: &VectorField) -> Result<()> {
    let mean = f.mean();
    let scale = f.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let worst = mean.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if worst > 1e-9 * scale.max(1e-300) {
        return Err(LabError::NonzeroMean(worst));
    }
    Ok(())
}

/// (Δ/n Σ_{ξ≠0} |ξ|^{2s} |F(ξ)|²)^{1/2}, with F the unnormalized DFT; this is the
/// quadrature L² norm at s = 0, where the zero mode is kept.
pub fn sobolev_spectral(f: &VectorField, s: f64) -> Result<NormResult> {
    if s < 0.0 {
        mean_check(f)?;
    }
    let g = &f.grid;
    let n = g.n();
    let mut total = 0.0;
    for c in 0..f.m {
        let spec = SpectrumRep::forward(g, &f.component(c));
        for (k, z) in spec.coeffs.iter().enumerate() {
            let w = if k == 0 {
                if s == 0.0 { 1.0 } else { 0.0 }
            } else {
                g.frequency(k).abs().powf(2.0 * s)
            };
            total += w * z.norm_sqr();
        }
    }
    Ok(NormResult {
        value: (g.spacing() / n as f64 * total).sqrt(),
        method: NormMethod::Spectral,
        truncation: 0.0,
    })
}

/// (Σ (1 + ξ²)^s |f̂(ξ)|²)^{1/2} in the same normalization as [`sobolev_spectral`].
pub fn sobolev_inhomogeneous(f: &VectorField, s: f64) -> NormResult {
    let g = &f.grid;
    let mut total = 0.0;
    for c in 0..f.m {
        let spec = SpectrumRep::forward(g, &f.component(c));
        for (k, z) in spec.coeffs.iter().enumerate() {
            total += (1.0 + g.frequency(k).powi(2)).powf(s) * z.norm_sqr();
        }
    }
    NormResult { value: (g.spacing() / g.n() as f64 * total).sqrt(), method: NormMethod::Spectral, truncation: 0.0 }
}

/// Octave pieces Δ_j f: |ξ| ∈ [2^j ξ_min, 2^{j+1} ξ_min), ξ_min = π/R.
pub fn dyadic_pieces(f: &VectorField) -> Vec<VectorField> {
    let g = &f.grid;
    let n = g.n();
    let octaves = n.trailing_zeros() as usize;
    let specs: Vec<SpectrumRep> = (0..f.m).map(|c| SpectrumRep::forward(g, &f.component(c))).collect();
    (0..octaves)
        .map(|j| {
            let (lo, hi) = (1usize << j, 1usize << (j + 1));
            let mut piece = VectorField::zeros(g, f.m);
            for (c, spec) in specs.iter().enumerate() {
                let mut band = spec.clone();
                for (k, z) in band.coeffs.iter_mut().enumerate() {
                    let kk = k.min(n - k);
                    if !(lo..hi).contains(&kk) {
                        *z = 0.0.into();
                    }
                }
                piece.set_component(c, &band.inverse());
            }
            piece
        })
        .collect()
}

/// (Σ_j (2^j ξ_min)^{sq} ‖Δ_j f‖^q)^{1/q}; the octave norm is L^p, or L^{p,r}
/// when `lorentz_r` is given.
pub fn dyadic_besov_with(f: &VectorField, s: f64, p: f64, q: f64, lorentz_r: Option<f64>) -> Result<NormResult> {
    check_pq(p, q)?;
    mean_check(f)?;
    let d = f.grid.spacing();
    let xi_min = std::f64::consts::PI / f.grid.radius();
    let pieces = dyadic_pieces(f);
    let last = pieces.len().saturating_sub(1);
    let mut total = 0.0;
    let mut top = 0.0;
    for (j, piece) in pieces.iter().enumerate() {
        let vals = pointwise_abs(piece);
        let norm = match lorentz_r {
            None => lp_of_values(&vals, d, p),
            Some(r) => lorentz_of_values(&vals, d, p, r),
        };
        let t = ((1u64 << j) as f64 * xi_min).powf(s * q) * norm.powf(q);
        total += t;
        if j == last {
            top = t;
        }
    }
    Ok(NormResult {
        value: total.powf(1.0 / q),
        method: NormMethod::Dyadic,
        truncation: if total > 0.0 { top / total } else { 0.0 },
    })
}

pub fn dyadic_besov(f: &VectorField, s: f64, p: f64, q: f64) -> Result<NormResult> {
    dyadic_besov_with(f, s, p, q, None)
}

/// Lorentz quasi-norm of a step function with values `vals` on cells of
/// measure `w`, through the decreasing rearrangement.
pub fn lorentz_of_values(vals: &[f64], w: f64, p: f64, r: f64) -> f64 {
    let mut sorted: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut t_prev = 0.0;
    if r.is_infinite() {
        let mut best: f64 = 0.0;
        for (k, v) in sorted.iter().enumerate() {
            let t = (k + 1) as f64 * w;
            best = best.max(t.powf(1.0 / p) * v);
        }
        return best;
    }
    let mut total = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        let t = (k + 1) as f64 * w;
        if *v > 0.0 {
            total += v.powf(r) * (p / r) * (t.powf(r / p) - t_prev);
        }
        t_prev = t.powf(r / p);
    }
    total.powf(1.0 / r)
}

pub fn lorentz_norm(f: &VectorField, p: f64, r: f64) -> Result<NormResult> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(LabError::Exponent(format!("Lorentz norm needs 1 < p < inf, got {p}")));
    }
    if !(r >= 1.0) {
        return Err(LabError::Exponent(format!("Lorentz norm needs r >= 1, got {r}")));
    }
    Ok(NormResult {
        value: lorentz_of_values(&pointwise_abs(f), f.grid.spacing(), p, r),
        method: NormMethod::Rearrangement,
        truncation: 0.0,
    })
}

/// Quadrature L^p norm of the pointwise Euclidean modulus.
pub fn lp_norm(f: &VectorField, p: f64) -> f64 {
    lp_of_values(&pointwise_abs(f), f.grid.spacing(), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::{frac_laplacian, Backend};
    use crate::lattice::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn sobolev_examples() {
        let g = make_grid(8.0, 128).unwrap();
        let w = PI * 5.0 / 8.0;
        let f = VectorField::scalar(&g, |x| (w * x).cos());
        for s in [-0.5, 0.0, 0.5, 1.0] {
            let v = sobolev_spectral(&f, s).unwrap().value;
            assert!((v - w.powf(s) * 8f64.sqrt()).abs() < 1e-12, "s {s}: {v}");
        }
        let h = VectorField::scalar(&g, |x| 1.0 + x.sin() * (-x * x / 4.0).exp());
        assert!((sobolev_spectral(&h, 0.0).unwrap().value - h.l2()).abs() < 1e-10);
        assert!(sobolev_spectral(&h, -0.5).is_err());
        let h0 = h.remove_mean();
        let d = frac_laplacian(&h0, 0.5, Backend::Multiplier).unwrap();
        assert!((sobolev_spectral(&d, -0.5).unwrap().value - h0.l2()).abs() < 1e-10);
        let v = sobolev_inhomogeneous(&f, -0.5).value;
        assert!((v - (1.0 + w * w).powf(-0.25) * 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lorentz_examples() {
        let g = make_grid(8.0, 128).unwrap();
        let ind = VectorField::scalar(&g, |x| if (0.0..3.0).contains(&x) { 1.0 } else { 0.0 });
        let mu: f64 = 3.0;
        assert!((lorentz_norm(&ind, 2.0, f64::INFINITY).unwrap().value - mu.sqrt()).abs() < 1e-12);
        assert!((lorentz_norm(&ind, 2.0, 1.0).unwrap().value - 2.0 * mu.sqrt()).abs() < 1e-12);
        let f = VectorField::scalar(&g, |x| (x * 1.7).sin() * (-x * x / 9.0).exp());
        for p in [1.5, 2.0, 3.0] {
            let a = lorentz_norm(&f, p, p).unwrap().value;
            assert!((a - lp_norm(&f, p)).abs() < 1e-10 * a);
        }
        assert!(lorentz_norm(&f, 1.0, 2.0).is_err());
    }

    #[test]
    fn dyadic_single_octave() {
        let g = make_grid(8.0, 128).unwrap();
        // modes 4..7 form octave j = 2
        let f = VectorField::scalar(&g, |x| (PI * 4.0 * x / 8.0).cos() + 0.5 * (PI * 6.0 * x / 8.0).sin());
        let v = dyadic_besov(&f, 0.0, 2.0, 2.0).unwrap().value;
        assert!((v - f.l2()).abs() < 1e-12);
    }

    #[test]
    fn difference_rejects_bad_s() {
        let g = make_grid(8.0, 32).unwrap();
        let f = VectorField::scalar(&g, |x| x.sin());
        assert!(besov_difference(&f, 0.0, 2.0, 2.0).is_err());
        assert!(besov_difference(&f, 1.0, 2.0, 2.0).is_err());
        assert_eq!(besov_difference(&VectorField::scalar(&g, |_| 4.0), 0.5, 2.0, 2.0).unwrap().value, 0.0);
    }
}
