//! Shared fixtures for the benchmarks.

use fraclab_core::lattice::sample_trial;
use fraclab_core::{make_grid, EnsembleSpec, MatrixField, VectorField};

/// One smooth ensemble draw at radius 16 with 2×2 matrices.
pub fn fixture(n: usize) -> (MatrixField, VectorField) {
    let grid = make_grid(16.0, n).expect("power-of-two grid");
    sample_trial(&EnsembleSpec::new(7, 1, 2), &grid, 0)
}
