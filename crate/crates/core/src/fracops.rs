//! Fractional Laplacian and Riesz transform in two backends, plus composed
//! operator pipelines.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conventions::RIESZ_SIGN;
use crate::error::{LabError, Result};
use crate::kernelspace::{kernel_apply, Kernel};
use crate::lattice::{same_grid, Grid, MatrixField, Symmetry, VectorField};
use crate::special::{c_sigma, cot_kernel, periodized_even, riemann_zeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Multiplier,
    Quadrature,
}

/// Discrete spectrum of a scalar series, FFT ordering.
#[derive(Debug, Clone)]
pub struct SpectrumRep {
    pub grid: Arc<Grid>,
    pub coeffs: Vec<Complex64>,
}

impl SpectrumRep {
    pub fn forward(grid: &Arc<Grid>, series: &[f64]) -> Self {
        let mut buf: Vec<Complex64> = series.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        grid.fft_forward(&mut buf);
        SpectrumRep { grid: grid.clone(), coeffs: buf }
    }

    pub fn inverse(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        self.grid.fft_inverse(&mut buf);
        let scale = 1.0 / self.grid.n() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }
}

/// Applies a Fourier symbol (indexed in FFT order) to a real series.
pub fn apply_symbol(grid: &Arc<Grid>, series: &[f64], symbol: impl Fn(usize) -> Complex64) -> Vec<f64> {
    let mut spec = SpectrumRep::forward(grid, series);
    for (k, c) in spec.coeffs.iter_mut().enumerate() {
        *c *= symbol(k);
    }
    spec.inverse()
}

fn frac_symbol(grid: &Grid, sigma: f64) -> impl Fn(usize) -> Complex64 + '_ {
    move |k| {
        if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(grid.frequency(k).abs().powf(sigma), 0.0)
        }
    }
}

fn riesz_symbol(grid: &Grid) -> impl Fn(usize) -> Complex64 + '_ {
    move |k| {
        if k == 0 || k == grid.n() / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, RIESZ_SIGN * grid.frequency(k).signum())
        }
    }
}

/// |ξ|^σ on a scalar series, zero mode annihilated.
pub fn frac_laplacian_series(grid: &Arc<Grid>, f: &[f64], sigma: f64) -> Vec<f64> {
    apply_symbol(grid, f, frac_symbol(grid, sigma))
}

/// Multiplier Riesz transform on a scalar series.
pub fn riesz_series(grid: &Arc<Grid>, f: &[f64]) -> Vec<f64> {
    apply_symbol(grid, f, riesz_symbol(grid))
}

/// Spectral derivative iξ with the Nyquist mode zeroed.
pub fn derivative_series(grid: &Arc<Grid>, f: &[f64]) -> Vec<f64> {
    let n = grid.n();
    apply_symbol(grid, f, |k| {
        if k == n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, grid.frequency(k))
        }
    })
}

fn map_components(f: &VectorField, op: impl Fn(&[f64]) -> Vec<f64>) -> VectorField {
    let mut out = VectorField::zeros(&f.grid, f.m);
    for c in 0..f.m {
        out.set_component(c, &op(&f.component(c)));
    }
    out
}

fn quadrature_frac_laplacian(grid: &Grid, f: &[f64], sigma: f64) -> Vec<f64> {
    let n = grid.n();
    let d = grid.spacing();
    let rho = periodized_even(1.0 + sigma, n, grid.period());
    let zeta = riemann_zeta(sigma - 1.0);
    let cs = c_sigma(sigma);
    let corr = zeta * d.powf(2.0 - sigma);
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 1..n / 2 {
                s += rho[j] * (2.0 * f[i] - f[(i + j) % n] - f[(i + n - j) % n]);
            }
            s += rho[n / 2] * (f[i] - f[(i + n / 2) % n]);
            let f2 = (f[(i + 1) % n] - 2.0 * f[i] + f[(i + n - 1) % n]) / (d * d);
            cs * (d * s + corr * f2)
        })
        .collect()
}

const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

fn fd8_derivative(grid: &Grid, v: &[f64]) -> Vec<f64> {
    let n = grid.n();
    (0..n)
        .map(|i| {
            FD8.iter()
                .enumerate()
                .map(|(k, c)| c * (v[(i + k + 1) % n] - v[(i + n - k - 1) % n]))
                .sum::<f64>()
                / grid.spacing()
        })
        .collect()
}

fn quadrature_riesz(grid: &Grid, v: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let d = grid.spacing();
    let h = cot_kernel(n, grid.period());
    let dv = fd8_derivative(grid, v);
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 1..n / 2 {
                s += h[j] * (v[(i + j) % n] - v[(i + n - j) % n]);
            }
            RIESZ_SIGN * (d * s + d / PI * dv[i])
        })
        .collect()
}

pub fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(LabError::SigmaRange(sigma, "[0, 1]"))
    }
}

/// (−Δ)^{σ/2} f, σ ∈ [0, 1]. Both backends return multiplier units |ξ|^σ.
pub fn frac_laplacian(f: &VectorField, sigma: f64, backend: Backend) -> Result<VectorField> {
    check_sigma(sigma)?;
    if sigma == 0.0 {
        return Ok(f.remove_mean());
    }
    let g = &f.grid;
    Ok(match backend {
        Backend::Multiplier => map_components(f, |s| frac_laplacian_series(g, s, sigma)),
        Backend::Quadrature => map_components(f, |s| quadrature_frac_laplacian(g, s, sigma)),
    })
}

pub fn riesz(f: &VectorField, backend: Backend) -> VectorField {
    let g = &f.grid;
    match backend {
        Backend::Multiplier => map_components(f, |s| riesz_series(g, s)),
        Backend::Quadrature => map_components(f, |s| quadrature_riesz(g, s)),
    }
}

/// Entrywise (−Δ)^{σ/2} of a matrix field (multiplier backend).
pub fn frac_laplacian_matrix(q: &MatrixField, sigma: f64) -> MatrixField {
    q.map_entries(q.tag_after_linear(), |s| frac_laplacian_series(&q.grid, s, sigma))
}

/// Entrywise ℜ of a matrix field (multiplier backend).
pub fn riesz_matrix(q: &MatrixField) -> MatrixField {
    q.map_entries(q.tag_after_linear(), |s| riesz_series(&q.grid, s))
}

impl MatrixField {
    /// Tag preserved by entrywise linear maps (orthogonality is not).
    pub fn tag_after_linear(&self) -> Symmetry {
        match self.tag {
            Symmetry::Orthogonal => Symmetry::None,
            t => t,
        }
    }

    /// Pointwise matrix product self(x) · other(x).
    pub fn mul(&self, other: &MatrixField) -> Result<MatrixField> {
        same_grid(&self.grid, &other.grid)?;
        if self.m != other.m {
            return Err(LabError::Mismatch(format!("matrix dims {} vs {}", self.m, other.m)));
        }
        let m = self.m;
        let mut out = MatrixField::zeros(&self.grid, m, Symmetry::None);
        for i in 0..self.n() {
            let (a, b) = (self.block(i), other.block(i));
            for r in 0..m {
                for c in 0..m {
                    out.data[i * m * m + r * m + c] = (0..m).map(|k| a[r * m + k] * b[k * m + c]).sum();
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub enum Stage {
    Multiply(MatrixField),
    FracLap { sigma: f64, backend: Backend },
    Riesz(Backend),
    KernelApply(Arc<Kernel>),
    Sum(Vec<OperatorPipeline>),
    Scale(f64),
}

/// Stages are applied left to right.
#[derive(Debug, Clone)]
pub struct OperatorPipeline {
    pub grid: Arc<Grid>,
    pub m: usize,
    pub stages: Vec<Stage>,
}

impl OperatorPipeline {
    pub fn new(grid: &Arc<Grid>, m: usize) -> Self {
        OperatorPipeline { grid: grid.clone(), m, stages: Vec::new() }
    }

    pub fn then(mut self, stage: Stage) -> Self {
        self.stages.push(stage);
        self
    }

    pub fn mul(self, q: &MatrixField) -> Self {
        self.then(Stage::Multiply(q.clone()))
    }

    pub fn dquarter(self) -> Self {
        self.then(Stage::FracLap { sigma: 0.5, backend: Backend::Multiplier })
    }

    pub fn riesz(self) -> Self {
        self.then(Stage::Riesz(Backend::Multiplier))
    }

    pub fn scale(self, a: f64) -> Self {
        self.then(Stage::Scale(a))
    }

    /// Appends another pipeline's stages (applied after the current ones).
    pub fn chain(mut self, other: &OperatorPipeline) -> Self {
        self.stages.extend(other.stages.iter().cloned());
        self
    }

    pub fn sum(grid: &Arc<Grid>, m: usize, terms: Vec<OperatorPipeline>) -> Self {
        OperatorPipeline::new(grid, m).then(Stage::Sum(terms))
    }
}

pub fn apply_pipeline(p: &OperatorPipeline, f: &VectorField) -> Result<VectorField> {
    same_grid(&p.grid, &f.grid)?;
    if p.m != f.m {
        return Err(LabError::Mismatch(format!("pipeline dim {} vs field dim {}", p.m, f.m)));
    }
    let mut cur = f.clone();
    for stage in &p.stages {
        cur = match stage {
            Stage::Multiply(q) => q.apply(&cur)?,
            Stage::FracLap { sigma, backend } => frac_laplacian(&cur, *sigma, *backend)?,
            Stage::Riesz(b) => riesz(&cur, *b),
            Stage::KernelApply(k) => kernel_apply(k, &cur)?,
            Stage::Scale(a) => cur.scaled(*a),
            Stage::Sum(terms) => {
                let mut acc = VectorField::zeros(&cur.grid, cur.m);
                for t in terms {
                    acc.axpy(1.0, &apply_pipeline(t, &cur)?);
                }
                acc
            }
        };
    }
    Ok(cur)
}

/// Q∘(−Δ)^{1/4} − (−Δ)^{1/4}∘Q.
pub fn dhalf_pipeline(q: &MatrixField) -> OperatorPipeline {
    let (g, m) = (&q.grid, q.m);
    OperatorPipeline::sum(
        g,
        m,
        vec![
            OperatorPipeline::new(g, m).dquarter().mul(q),
            OperatorPipeline::new(g, m).mul(q).dquarter().scale(-1.0),
        ],
    )
}

/// Composed operators by name. Units are multiplier units throughout except
/// "TSQ_R", which is scaled to PV-kernel units so that it can be compared
/// with the kernel route of the antisymmetrized kernel.
pub fn build_named_operator(name: &str, q: &MatrixField, p: Option<&MatrixField>) -> Result<OperatorPipeline> {
    let (g, m) = (&q.grid, q.m);
    let new = || OperatorPipeline::new(g, m);
    let need_sym = matches!(name, "T3" | "TSQ_R" | "TSQ_RR" | "opL" | "RQ" | "LQ" | "VPQ");
    if need_sym && q.tag != Symmetry::Symmetric {
        return Err(LabError::Symmetry(format!("{name} requires a symmetric Q, got {:?}", q.tag)));
    }
    if need_sym {
        q.check_tag(1e-12)?;
    }
    let a = frac_laplacian_matrix(q, 0.5);
    let pipe = match name {
        "T3" => OperatorPipeline::sum(
            g,
            m,
            vec![new().mul(q).dquarter(), new().dquarter().mul(q).scale(-1.0), new().mul(&a)],
        ),
        "dhalfQ" => dhalf_pipeline(q),
        "RQ" => new().chain(&dhalf_pipeline(q)).riesz(),
        "LQ" => new().riesz().chain(&dhalf_pipeline(q)),
        "TSQ_R" => {
            let ra = riesz_matrix(&a);
            let b = OperatorPipeline::sum(g, m, vec![dhalf_pipeline(q), new().mul(&a).scale(-1.0)]);
            OperatorPipeline::sum(
                g,
                m,
                vec![
                    new().chain(&b).riesz(),
                    new().riesz().chain(&b).scale(-1.0),
                    new().riesz().mul(&a).scale(-2.0),
                    new().mul(&ra).scale(-2.0),
                ],
            )
            .scale(1.0 / c_sigma(0.5))
        }
        "TSQ_RR" => {
            let ra = riesz_matrix(&a);
            OperatorPipeline::sum(
                g,
                m,
                vec![
                    new().riesz().chain(&dhalf_pipeline(q)).riesz(),
                    new().riesz().mul(&ra),
                    new().mul(&ra).riesz(),
                    new().mul(&a).scale(-1.0),
                ],
            )
        }
        "VPQ" => {
            let p = p.ok_or(LabError::MissingOperand("VPQ needs P"))?;
            let pq = p.mul(q)?;
            let qp = q.mul(p)?;
            let dqp = frac_laplacian_matrix(&qp, 0.5);
            let dp = frac_laplacian_matrix(p, 0.5);
            let p_dq = p.mul(&a)?;
            let q_dp = q.mul(&dp)?;
            OperatorPipeline::sum(
                g,
                m,
                vec![
                    new().dquarter().mul(&pq),
                    new().mul(q).dquarter().mul(p).scale(-1.0),
                    new().mul(p).dquarter().mul(q),
                    new().mul(&qp).dquarter().scale(-1.0),
                    new().mul(&p_dq).scale(-1.0),
                    new().mul(&dqp).scale(-1.0),
                    new().mul(&q_dp),
                ],
            )
        }
        "CRW" => {
            let rq = riesz_matrix(q);
            OperatorPipeline::sum(g, m, vec![new().riesz().mul(q), new().mul(&rq)])
        }
        "opL" => {
            let fq = riesz_matrix(&a).scaled(-1.0);
            let rfq = riesz_matrix(&fq);
            OperatorPipeline::sum(
                g,
                m,
                vec![
                    new().dquarter().riesz().mul(q).riesz(),
                    new().riesz().mul(q).riesz().dquarter().scale(-1.0),
                    new().riesz().mul(&fq).scale(-1.0),
                    new().mul(&fq).riesz().scale(-1.0),
                    new().mul(&rfq).scale(-1.0),
                ],
            )
        }
        other => return Err(LabError::UnknownOperator(other.to_string())),
    };
    Ok(pipe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{bump, make_grid};

    fn rel(a: &VectorField, b: &VectorField) -> f64 {
        a.sub(b).l2() / b.l2()
    }

    #[test]
    fn eigenfunctions() {
        let g = make_grid(8.0, 128).unwrap();
        let w = PI * 3.0 / 8.0;
        let c = VectorField::scalar(&g, |x| (w * x).cos());
        let s = VectorField::scalar(&g, |x| (w * x).sin());
        let d = frac_laplacian(&c, 0.5, Backend::Multiplier).unwrap();
        assert!(rel(&d, &c.scaled(w.sqrt())) < 1e-13);
        assert!(rel(&riesz(&s, Backend::Multiplier), &c) < 1e-13);
        let k = VectorField::scalar(&g, |_| 2.5);
        assert!(riesz(&k, Backend::Multiplier).l2() < 1e-13);
        let f0 = frac_laplacian(&VectorField::scalar(&g, |x| 1.0 + (w * x).cos()), 0.0, Backend::Multiplier).unwrap();
        assert!(rel(&f0, &c) < 1e-13);
        assert!(frac_laplacian(&c, 1.5, Backend::Multiplier).is_err());
    }

    #[test]
    fn riesz_sign_matches_quadrature() {
        let g = make_grid(16.0, 1024).unwrap();
        let f = VectorField::scalar(&g, |x| bump(x, 0.3, 6.0) * (1.3 * x).sin());
        let m = riesz(&f, Backend::Multiplier);
        let q = riesz(&f, Backend::Quadrature);
        assert!(rel(&q, &m) < 1e-6, "{}", rel(&q, &m));
    }

    #[test]
    fn backends_agree_and_converge() {
        for sigma in [0.25, 0.5, 1.0] {
            let mut prev = f64::INFINITY;
            for n in [256, 512, 1024] {
                let g = make_grid(16.0, n).unwrap();
                let f = VectorField::scalar(&g, |x| bump(x, 0.5, 6.0) * (1.0 + 0.7 * (2.1 * x).cos()));
                let a = frac_laplacian(&f, sigma, Backend::Multiplier).unwrap();
                let b = frac_laplacian(&f, sigma, Backend::Quadrature).unwrap();
                let e = rel(&b, &a);
                assert!(e < prev, "sigma {sigma} n {n}: {e} !< {prev}");
                prev = e;
            }
            assert!(prev < 1e-3);
        }
    }

    #[test]
    fn named_operator_examples() {
        let g = make_grid(8.0, 128).unwrap();
        let qc = MatrixField::scalar(&g, |_| 3.0);
        let v = VectorField::scalar(&g, |x| bump(x, 0.0, 3.0) * x.sin());
        let t3 = build_named_operator("T3", &qc, None).unwrap();
        assert!(apply_pipeline(&t3, &v).unwrap().l2() < 1e-12);
        let d = build_named_operator("dhalfQ", &qc, None).unwrap();
        assert!(apply_pipeline(&d, &v).unwrap().l2() < 1e-12);
        let f = MatrixField::scalar(&g, |x| bump(x, 0.5, 3.0));
        let fv = VectorField::scalar(&g, |x| bump(x, 0.5, 3.0));
        let crw = apply_pipeline(&build_named_operator("CRW", &f, None).unwrap(), &fv).unwrap();
        let want = fv.data.iter().zip(&riesz(&fv, Backend::Multiplier).data).map(|(a, b)| 2.0 * a * b).collect();
        let want = VectorField { data: want, ..fv.clone() };
        assert!(rel(&crw, &want) < 1e-12);
        assert!(build_named_operator("nope", &f, None).is_err());
        assert!(build_named_operator("VPQ", &f, None).is_err());
    }

    #[test]
    fn vpq_with_identity_is_minus_two_t3() {
        let g = make_grid(8.0, 128).unwrap();
        let q = MatrixField::scalar(&g, |x| bump(x, 0.2, 3.0) * (1.0 + x.cos()));
        let v = VectorField::scalar(&g, |x| bump(x, -0.4, 3.0) * (2.0 * x).sin());
        let id = MatrixField::identity(&g, 1);
        let vpq = apply_pipeline(&build_named_operator("VPQ", &q, Some(&id)).unwrap(), &v).unwrap();
        let t3 = apply_pipeline(&build_named_operator("T3", &q, None).unwrap(), &v).unwrap();
        assert!(rel(&vpq, &t3.scaled(-2.0)) < 1e-12);
    }

    #[test]
    fn empty_and_scaling_pipelines() {
        let g = make_grid(8.0, 64).unwrap();
        let v = VectorField::scalar(&g, |x| x.sin());
        let p = OperatorPipeline::new(&g, 1);
        assert_eq!(apply_pipeline(&p, &v).unwrap(), v);
        let p = p.scale(2.0).scale(0.5);
        assert!(rel(&apply_pipeline(&p, &v).unwrap(), &v) < 1e-15);
        let wrong = VectorField::zeros(&g, 2);
        assert!(apply_pipeline(&p, &wrong).is_err());
    }
}
