//! Numerical laboratory for fractional operators, singular two-point kernels
//! and multi-commutator estimates on a truncated periodic window.

pub mod conventions;
pub mod error;
pub mod fracops;
pub mod kernelspace;
pub mod lattice;
pub mod multicomm;
pub mod normbank;
pub mod report;
pub mod special;

pub use error::{LabError, Result};
pub use fracops::{Backend, OperatorPipeline, Stage};
pub use rustfft::num_complex::Complex64;
pub use kernelspace::{DiagonalPolicy, Kernel, KernelNormParams, KernelTag};
pub use lattice::{make_grid, EnsembleKind, EnsembleSpec, Grid, MatrixField, Symmetry, VectorField};
pub use normbank::{NormMethod, NormResult};
pub use report::{IdentityReport, RatioReport, RatioTrial};
