//! Uniform periodic grid on [−R, R), sampled fields and seeded ensembles.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub struct Grid {
    radius: f64,
    n: usize,
    spacing: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("radius", &self.radius)
            .field("n", &self.n)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.radius == other.radius
    }
}

pub fn make_grid(radius: f64, n: usize) -> Result<Arc<Grid>> {
    if n < 8 || !n.is_power_of_two() {
        return Err(LabError::BadGridSize(n));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(LabError::BadRadius(radius));
    }
    let mut planner = FftPlanner::new();
    Ok(Arc::new(Grid {
        radius,
        n,
        spacing: 2.0 * radius / n as f64,
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    }))
}

impl Grid {
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    /// Window length 2R, the period of every wrap-around operation.
    pub fn period(&self) -> f64 {
        2.0 * self.radius
    }
    pub fn point(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.spacing
    }
    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }
    pub fn weights(&self) -> Vec<f64> {
        vec![self.spacing; self.n]
    }
    /// ξ_k = πk/R in FFT order (k = 0, 1, …, n/2 − 1, −n/2, …, −1).
    pub fn frequency(&self, k: usize) -> f64 {
        let kk = if k < self.n / 2 { k as f64 } else { k as f64 - self.n as f64 };
        std::f64::consts::PI * kk / self.radius
    }
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.frequency(k)).collect()
    }
    /// Index of grid point i + k, wrapped.
    pub fn wrap(&self, i: usize, k: isize) -> usize {
        (i as isize + k).rem_euclid(self.n as isize) as usize
    }
    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }
    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(LabError::Mismatch(format!("grid {a:?} vs {b:?}")))
    }
}

/// R^m-valued samples, point-major: `data[i * m + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    pub m: usize,
    pub data: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>, m: usize) -> Self {
        VectorField { grid: grid.clone(), m, data: vec![0.0; grid.n() * m] }
    }

    pub fn from_fn(grid: &Arc<Grid>, m: usize, f: impl Fn(f64, &mut [f64])) -> Self {
        let mut out = Self::zeros(grid, m);
        for i in 0..grid.n() {
            f(grid.point(i), &mut out.data[i * m..(i + 1) * m]);
        }
        out
    }

    pub fn scalar(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, 1, |x, o| o[0] = f(x))
    }

    pub fn from_components(grid: &Arc<Grid>, comps: &[Vec<f64>]) -> Self {
        let m = comps.len();
        let mut out = Self::zeros(grid, m);
        for (c, comp) in comps.iter().enumerate() {
            for i in 0..grid.n() {
                out.data[i * m + c] = comp[i];
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.data[i * self.m + c]).collect()
    }

    pub fn set_component(&mut self, c: usize, vals: &[f64]) {
        for (i, v) in vals.iter().enumerate() {
            self.data[i * self.m + c] = *v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Quadrature L² norm (Frobenius over components).
    pub fn l2(&self) -> f64 {
        (self.grid.spacing() * self.data.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Quadrature inner product.
    pub fn dot(&self, other: &VectorField) -> f64 {
        self.grid.spacing() * self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn mean(&self) -> Vec<f64> {
        integrate(self).into_iter().map(|v| v / self.grid.period()).collect()
    }

    pub fn remove_mean(&self) -> VectorField {
        let mean = self.mean();
        let mut out = self.clone();
        for i in 0..self.n() {
            for c in 0..self.m {
                out.data[i * self.m + c] -= mean[c];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    None,
    Symmetric,
    Antisymmetric,
    Orthogonal,
}

/// M_m(R)-valued samples, `data[i * m * m + a * m + b]` is entry (a, b) at x_i.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    pub grid: Arc<Grid>,
    pub m: usize,
    pub data: Vec<f64>,
    pub tag: Symmetry,
}

impl MatrixField {
    pub fn zeros(grid: &Arc<Grid>, m: usize, tag: Symmetry) -> Self {
        MatrixField { grid: grid.clone(), m, data: vec![0.0; grid.n() * m * m], tag }
    }

    pub fn identity(grid: &Arc<Grid>, m: usize) -> Self {
        let mut out = Self::zeros(grid, m, Symmetry::Orthogonal);
        for i in 0..grid.n() {
            for a in 0..m {
                out.data[i * m * m + a * m + a] = 1.0;
            }
        }
        out
    }

    pub fn from_fn(grid: &Arc<Grid>, m: usize, tag: Symmetry, f: impl Fn(f64, &mut [f64])) -> Self {
        let mut out = Self::zeros(grid, m, tag);
        let mm = m * m;
        for i in 0..grid.n() {
            f(grid.point(i), &mut out.data[i * mm..(i + 1) * mm]);
        }
        out
    }

    /// Scalar (m = 1) field.
    pub fn scalar(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, 1, Symmetry::Symmetric, |x, o| o[0] = f(x))
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let mm = self.m * self.m;
        &self.data[i * mm..(i + 1) * mm]
    }

    /// Series of entry (a, b) over the grid.
    pub fn entry(&self, a: usize, b: usize) -> Vec<f64> {
        let mm = self.m * self.m;
        (0..self.n()).map(|i| self.data[i * mm + a * self.m + b]).collect()
    }

    pub fn set_entry(&mut self, a: usize, b: usize, vals: &[f64]) {
        let mm = self.m * self.m;
        for (i, v) in vals.iter().enumerate() {
            self.data[i * mm + a * self.m + b] = *v;
        }
    }

    /// Applies `f` to every entry series, keeping the tag.
    pub fn map_entries(&self, tag: Symmetry, f: impl Fn(&[f64]) -> Vec<f64>) -> MatrixField {
        let mut out = MatrixField::zeros(&self.grid, self.m, tag);
        for a in 0..self.m {
            for b in 0..self.m {
                out.set_entry(a, b, &f(&self.entry(a, b)));
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> MatrixField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Pointwise transpose.
    pub fn transpose(&self) -> MatrixField {
        let m = self.m;
        let mut out = self.clone();
        for i in 0..self.n() {
            for a in 0..m {
                for b in 0..m {
                    out.data[i * m * m + a * m + b] = self.data[i * m * m + b * m + a];
                }
            }
        }
        out
    }

    /// Pointwise product (Q v)(x_i) = Q(x_i) v(x_i).
    pub fn apply(&self, v: &VectorField) -> Result<VectorField> {
        same_grid(&self.grid, &v.grid)?;
        if self.m != v.m {
            return Err(LabError::Mismatch(format!("matrix dim {} vs vector dim {}", self.m, v.m)));
        }
        let m = self.m;
        let mut out = VectorField::zeros(&v.grid, m);
        for i in 0..self.n() {
            let q = self.block(i);
            let x = v.at(i);
            for a in 0..m {
                out.data[i * m + a] = (0..m).map(|b| q[a * m + b] * x[b]).sum();
            }
        }
        Ok(out)
    }

    /// Quadrature L² norm with the Frobenius norm pointwise.
    pub fn l2(&self) -> f64 {
        (self.grid.spacing() * self.data.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// max_x of the operator norm of the block.
    pub fn sup_op_norm(&self) -> f64 {
        (0..self.n())
            .map(|i| op_norm(self.block(i), self.m))
            .fold(0.0, f64::max)
    }

    /// Checks the declared symmetry tag entrywise at every point.
    pub fn check_tag(&self, tol: f64) -> Result<()> {
        let m = self.m;
        for i in 0..self.n() {
            let q = self.block(i);
            for a in 0..m {
                for b in 0..m {
                    let bad = match self.tag {
                        Symmetry::None => false,
                        Symmetry::Symmetric => (q[a * m + b] - q[b * m + a]).abs() > tol,
                        Symmetry::Antisymmetric => (q[a * m + b] + q[b * m + a]).abs() > tol,
                        Symmetry::Orthogonal => {
                            let dot: f64 = (0..m).map(|k| q[k * m + a] * q[k * m + b]).sum();
                            let want = if a == b { 1.0 } else { 0.0 };
                            (dot - want).abs() > tol
                        }
                    };
                    if bad {
                        return Err(LabError::Symmetry(format!(
                            "{:?} fails at point {i}, entry ({a},{b})",
                            self.tag
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn op_norm(block: &[f64], m: usize) -> f64 {
    if m == 1 {
        return block[0].abs();
    }
    let a = DMatrix::from_row_slice(m, m, block);
    a.singular_values().max()
}

/// Rectangle rule Σ_i w_i f(x_i), componentwise.
pub fn integrate(f: &VectorField) -> Vec<f64> {
    let mut out = vec![0.0; f.m];
    for i in 0..f.n() {
        for (c, o) in out.iter_mut().enumerate() {
            *o += f.data[i * f.m + c];
        }
    }
    out.iter_mut().for_each(|v| *v *= f.grid.spacing());
    out
}

/// f(· + kΔ) with wrap-around.
pub fn shift(f: &VectorField, k: isize) -> VectorField {
    let mut out = f.clone();
    let m = f.m;
    for i in 0..f.n() {
        let j = f.grid.wrap(i, k);
        out.data[i * m..(i + 1) * m].copy_from_slice(&f.data[j * m..(j + 1) * m]);
    }
    out
}

/// C^∞ bump exp(1 − 1/(1 − y²)), y = (x − c)/w, peak value 1.
pub fn bump(x: f64, center: f64, half_width: f64) -> f64 {
    let y = (x - center) / half_width;
    if y.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - y * y)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleKind {
    SmoothRandom,
    Bump,
    Trig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub seed: u64,
    pub count: usize,
    pub m: usize,
    pub delta: f64,
    pub amplitude: f64,
    pub kind: EnsembleKind,
    pub symmetry: Symmetry,
}

impl EnsembleSpec {
    pub fn new(seed: u64, count: usize, m: usize) -> Self {
        EnsembleSpec {
            seed,
            count,
            m,
            delta: 0.2,
            amplitude: 1.0,
            kind: EnsembleKind::SmoothRandom,
            symmetry: Symmetry::Symmetric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(LabError::Hypothesis("ensemble count must be >= 1".into()));
        }
        if !(self.delta > 0.0) {
            return Err(LabError::Hypothesis(format!("spectral decay delta must be > 0, got {}", self.delta)));
        }
        if self.m == 0 {
            return Err(LabError::Hypothesis("dimension m must be >= 1".into()));
        }
        Ok(())
    }
}

/// Number of window modes in a smooth-random draw; fixed so that samples do
/// not depend on n.
pub const SMOOTH_MODES: usize = 24;

/// Per-trial generator: the trial index selects an independent ChaCha stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn smooth_random_series(grid: &Grid, rng: &mut ChaCha8Rng, delta: f64) -> Vec<f64> {
    let r = grid.radius();
    let coef: Vec<(f64, f64, f64)> = (1..=SMOOTH_MODES)
        .map(|k| {
            let decay = (1.0 + k as f64).powf(-1.0 - delta / 2.0);
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            (std::f64::consts::PI * k as f64 / r, decay * a, decay * b)
        })
        .collect();
    (0..grid.n())
        .map(|i| {
            let x = grid.point(i);
            let s: f64 = coef.iter().map(|(w, a, b)| a * (w * x).cos() + b * (w * x).sin()).sum();
            s * bump(x, 0.0, r / 2.0)
        })
        .collect()
}

fn draw_series(spec: &EnsembleSpec, grid: &Grid, rng: &mut ChaCha8Rng, shape: (f64, f64, usize)) -> Vec<f64> {
    let (center, phase, k) = shape;
    let r = grid.radius();
    match spec.kind {
        EnsembleKind::SmoothRandom => smooth_random_series(grid, rng, spec.delta),
        EnsembleKind::Bump => {
            let a: f64 = rng.sample(StandardNormal);
            (0..grid.n()).map(|i| a * bump(grid.point(i), center, r / 4.0)).collect()
        }
        EnsembleKind::Trig => {
            let a: f64 = rng.sample(StandardNormal);
            let w = std::f64::consts::PI * k as f64 / r;
            (0..grid.n()).map(|i| a * (w * grid.point(i) + phase).cos()).collect()
        }
    }
}

fn cayley(s: &[f64], m: usize) -> Vec<f64> {
    let sm = DMatrix::from_row_slice(m, m, s);
    let id = DMatrix::<f64>::identity(m, m);
    let inv = (&id - &sm).try_inverse().expect("I - S is invertible for antisymmetric S");
    let q = inv * (&id + &sm);
    let mut out = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            out[a * m + b] = q[(a, b)];
        }
    }
    out
}

/// Trial `trial` of the ensemble: a matrix field tagged per the spec and a
/// mean-zero vector field. Pure function of (spec, grid, trial).
pub fn sample_trial(spec: &EnsembleSpec, grid: &Arc<Grid>, trial: u64) -> (MatrixField, VectorField) {
    let mut rng = trial_rng(spec.seed, trial);
    let r = grid.radius();
    let center = rng.random_range(-r / 4.0..r / 4.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let k = rng.random_range(1..=8usize);
    let shape = (center, phase, k);
    let m = spec.m;

    let mut raw = vec![vec![0.0; grid.n()]; m * m];
    for series in raw.iter_mut() {
        *series = draw_series(spec, grid, &mut rng, shape);
    }
    let mut q = MatrixField::zeros(grid, m, spec.symmetry);
    for i in 0..grid.n() {
        let block: Vec<f64> = (0..m * m).map(|e| raw[e][i] * spec.amplitude).collect();
        let out = &mut q.data[i * m * m..(i + 1) * m * m];
        for a in 0..m {
            for b in 0..m {
                let (x, y) = (block[a * m + b], block[b * m + a]);
                out[a * m + b] = match spec.symmetry {
                    Symmetry::None => x,
                    Symmetry::Symmetric => 0.5 * (x + y),
                    Symmetry::Antisymmetric | Symmetry::Orthogonal => 0.5 * (x - y),
                };
            }
        }
        if spec.symmetry == Symmetry::Orthogonal {
            let c = cayley(out, m);
            out.copy_from_slice(&c);
        }
    }

    let mut v = VectorField::zeros(grid, m);
    let window: Vec<f64> = (0..grid.n()).map(|i| bump(grid.point(i), 0.0, r / 2.0)).collect();
    let wsum: f64 = window.iter().sum();
    for c in 0..m {
        let s = draw_series(spec, grid, &mut rng, shape);
        let mean = s.iter().sum::<f64>() / wsum;
        let comp: Vec<f64> = s
            .iter()
            .zip(&window)
            .map(|(a, w)| (a - mean * w) * spec.amplitude)
            .collect();
        v.set_component(c, &comp);
    }
    (q, v)
}

/// All trials of the ensemble in order.
pub fn sample_ensemble<'a>(
    spec: &'a EnsembleSpec,
    grid: &'a Arc<Grid>,
) -> impl Iterator<Item = (MatrixField, VectorField)> + 'a {
    (0..spec.count as u64).map(move |t| sample_trial(spec, grid, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_examples() {
        let g = make_grid(8.0, 16).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert!(g.weights().iter().all(|w| *w == 1.0));
        assert_eq!(g.weights().iter().sum::<f64>(), 16.0);
        let g = make_grid(PI, 8).unwrap();
        let p = g.points();
        assert!((p[0] + PI).abs() < 1e-15 && (p[1] + 3.0 * PI / 4.0).abs() < 1e-15);
        assert!((p[7] - 3.0 * PI / 4.0).abs() < 1e-15);
        assert_eq!(make_grid(8.0, 12).unwrap_err(), LabError::BadGridSize(12));
        assert!(make_grid(8.0, 4).is_err());
        assert!(make_grid(0.0, 16).is_err());
    }

    #[test]
    fn integrate_examples() {
        let g = make_grid(8.0, 16).unwrap();
        assert_eq!(integrate(&VectorField::scalar(&g, |_| 1.0))[0], 16.0);
        let s = VectorField::scalar(&g, |x| (2.0 * PI * x / 16.0).sin());
        assert!(integrate(&s)[0].abs() < 1e-14);
        let g = make_grid(8.0, 1024).unwrap();
        let gauss = VectorField::scalar(&g, |x| (-x * x).exp());
        assert!((integrate(&gauss)[0] - PI.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn shift_examples() {
        let g = make_grid(4.0, 64).unwrap();
        let w = PI * 3.0 / 4.0;
        let f = VectorField::scalar(&g, |x| (w * x).cos());
        assert_eq!(shift(&f, 0), f);
        assert_eq!(shift(&shift(&f, 5), -5), f);
        let s = shift(&f, 7);
        for i in 0..64 {
            let want = (w * (g.point(i) + 7.0 * g.spacing())).cos();
            assert!((s.data[i] - want).abs() < 1e-12);
        }
        assert!((integrate(&s)[0] - integrate(&f)[0]).abs() < 1e-13);
    }

    #[test]
    fn ensemble_is_deterministic_and_tagged() {
        let g = make_grid(16.0, 256).unwrap();
        let mut spec = EnsembleSpec::new(42, 3, 2);
        let a: Vec<_> = sample_ensemble(&spec, &g).collect();
        let b: Vec<_> = sample_ensemble(&spec, &g).collect();
        assert_eq!(a, b);
        for (q, v) in &a {
            q.check_tag(1e-12).unwrap();
            assert!(v.mean().iter().all(|m| m.abs() < 1e-13));
        }
        spec.symmetry = Symmetry::Orthogonal;
        let (p, _) = sample_trial(&spec, &g, 0);
        p.check_tag(1e-12).unwrap();
        spec.amplitude = 0.0;
        spec.symmetry = Symmetry::Symmetric;
        let (q, v) = sample_trial(&spec, &g, 1);
        assert!(q.data.iter().all(|x| *x == 0.0) && v.data.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn ensemble_is_localized() {
        let g = make_grid(16.0, 256).unwrap();
        for kind in [EnsembleKind::SmoothRandom, EnsembleKind::Bump] {
            let spec = EnsembleSpec { kind, ..EnsembleSpec::new(9, 2, 1) };
            let (q, v) = sample_trial(&spec, &g, 1);
            for i in 0..g.n() {
                if g.point(i).abs() >= 8.0 {
                    assert!(q.data[i].abs() < 1e-8 && v.data[i].abs() < 1e-8);
                }
            }
        }
    }
}
