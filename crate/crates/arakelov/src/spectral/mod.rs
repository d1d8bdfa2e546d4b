//! Floating-point kernels for the spectral invariants behind the metrics:
//! Glaisher/zeta'(-1), the Barnes double gamma, the N(s) factor of the
//! Selberg-zeta factorization, truncated Selberg zeta products and the
//! regularized determinant, theta functions with their lattice-invariant
//! norm, and Fuchsian-group utilities (classification, length spectra,
//! Eisenstein series).
//!
//! Truncated quantities always come back together with an explicit error
//! indicator; nothing truncates silently.

pub mod fuchsian;
pub mod selberg;
pub mod special;
pub mod theta;

pub use fuchsian::{
    classify, eisenstein, length_spectrum, translation_length, EisensteinValue, FuchsianGroup,
    Mat2, MatClass, Orientation, SpectrumOutput,
};
pub use selberg::{
    ap_volume, central_derivative, det_delta, det_star, lambda1_metric_value, log_selberg_zeta,
    selberg_zeta, LengthSpectrum, MultiplicityMode,
};
pub use special::{
    barnes_g, e_constant, log_barnes_g, log_glaisher, n_function, zeta_prime_minus_one,
};
pub use theta::{theta, theta_norm, PeriodMatrix, ThetaValue};

/// Truncation depths shared by the numeric kernels.
#[derive(Clone, Copy, Debug)]
pub struct TruncationParams {
    /// Selberg product depth in m.
    pub m_max: u32,
    /// Half-width of the integer box in theta sums.
    pub lattice_radius: u32,
    /// Group word-enumeration depth.
    pub word_length: u32,
    /// Eisenstein coset enumeration depth in the word length; depth 0 keeps
    /// the identity coset alone.
    pub coset_depth: u32,
    /// Requested accuracy for bounded truncations.
    pub tol: f64,
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self {
            m_max: 60,
            lattice_radius: 12,
            word_length: 8,
            coset_depth: 12,
            tol: 1e-9,
        }
    }
}

impl TruncationParams {
    pub fn validate(&self) -> crate::error::Result<()> {
        if self.m_max == 0 || self.lattice_radius == 0 || self.word_length == 0 || !(self.tol > 0.0)
        {
            return Err(crate::error::Error::InvalidInput(
                "truncation parameters must be positive".to_owned(),
            ));
        }
        Ok(())
    }
}
