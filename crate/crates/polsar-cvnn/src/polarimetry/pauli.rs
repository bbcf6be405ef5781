//! Pauli decomposition of reciprocal scatterers.

use num_complex::Complex64;

use super::sinclair::SinclairPixel;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Coefficients of the Sinclair matrix in the three-element Pauli basis:
/// odd bounce (`alpha`), even bounce (`beta`), and 45-degree-oriented even
/// bounce (`gamma`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PauliVector {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
}

impl PauliVector {
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Total power `|alpha|^2 + |beta|^2 + |gamma|^2`, equal to the span of a
    /// reciprocal pixel.
    pub fn power(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr() + self.gamma.norm_sqr()
    }

    /// Component amplitudes `[|alpha|, |beta|, |gamma|]`.
    pub fn amplitudes(&self) -> [f64; 3] {
        [self.alpha.norm(), self.beta.norm(), self.gamma.norm()]
    }
}

/// Projects a pixel onto the Pauli basis:
/// `alpha = (hh + vv) / sqrt(2)`, `beta = (hh - vv) / sqrt(2)`,
/// `gamma = sqrt(2) * hv`.
///
/// Four-channel data should be symmetrized first; only `s_hv` enters `gamma`.
pub fn pauli_decompose(p: &SinclairPixel) -> PauliVector {
    PauliVector::new(
        (p.s_hh + p.s_vv) / SQRT2,
        (p.s_hh - p.s_vv) / SQRT2,
        SQRT2 * p.s_hv,
    )
}

/// Rebuilds the reciprocal Sinclair matrix from its Pauli coefficients; exact
/// inverse of [`pauli_decompose`] on reciprocal pixels.
pub fn pauli_compose(k: &PauliVector) -> SinclairPixel {
    SinclairPixel::reciprocal(
        (k.alpha + k.beta) / SQRT2,
        k.gamma / SQRT2,
        (k.alpha - k.beta) / SQRT2,
    )
}
