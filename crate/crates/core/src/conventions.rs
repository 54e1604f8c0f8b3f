//! Sign and normalization conventions shared by every module.
//!
//! The Riesz transform is ℜv(x) = (1/π) PV∫ (v(x) − v(y)) / (x − y) dy. Its
//! Fourier symbol is `RIESZ_SIGN · i·sgn(ξ)`, so ℜ(sin) = cos. The sign was
//! fixed by comparing the multiplier against the PV quadrature (see the
//! `riesz_sign_matches_quadrature` test in `fracops`).
//!
//! `frac_laplacian` applies |ξ|^σ. The PV integral without constant equals
//! |ξ|^σ / c_σ; kernels are stored in PV units, so composed-operator routes
//! divide by c_{1/2} when compared against kernel routes.

use serde::Serialize;

use crate::special::c_sigma;

/// Multiplier of the Riesz transform is `RIESZ_SIGN * i * sgn(xi)`.
pub const RIESZ_SIGN: f64 = 1.0;

/// PV-integral units per multiplier unit for (−Δ)^{1/4}: 1/c_{1/2} = 2√(2π).
pub fn kernel_units_per_multiplier() -> f64 {
    1.0 / c_sigma(0.5)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Conventions {
    pub riesz_symbol: String,
    pub riesz_nyquist: String,
    pub frac_laplacian_symbol: String,
    pub zero_mode: String,
    pub kernel_units: String,
    pub c_half: f64,
    pub periodization: String,
    pub code_version: String,
}

impl Conventions {
    pub fn current() -> Self {
        Conventions {
            riesz_symbol: format!("{:+} i sgn(xi)", RIESZ_SIGN),
            riesz_nyquist: "zeroed".into(),
            frac_laplacian_symbol: "|xi|^sigma".into(),
            zero_mode: "annihilated by homogeneous operators".into(),
            kernel_units: "PV integral without constant; multiplier = c_sigma * PV".into(),
            c_half: c_sigma(0.5),
            periodization: "singular kernels summed over periods (Hurwitz zeta)".into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}
