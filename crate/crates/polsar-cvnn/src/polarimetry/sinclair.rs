//! Sinclair scattering matrices and canonical point targets.

use num_complex::Complex64;

/// Handedness of a helical scatterer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Helicity {
    Left,
    Right,
}

/// Per-pixel 2x2 complex scattering matrix in the linear (h, v) basis.
///
/// Monostatic (reciprocal) acquisitions satisfy `s_hv == s_vh`; bistatic or
/// noisy four-channel data may not, which is what the Cameron reciprocity
/// test measures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinclairPixel {
    pub s_hh: Complex64,
    pub s_hv: Complex64,
    pub s_vh: Complex64,
    pub s_vv: Complex64,
}

impl SinclairPixel {
    pub fn new(s_hh: Complex64, s_hv: Complex64, s_vh: Complex64, s_vv: Complex64) -> Self {
        Self { s_hh, s_hv, s_vh, s_vv }
    }

    /// Three-channel (monostatic) pixel: the cross-pol channels coincide.
    pub fn reciprocal(s_hh: Complex64, s_hv: Complex64, s_vv: Complex64) -> Self {
        Self::new(s_hh, s_hv, s_hv, s_vv)
    }

    pub fn is_finite(&self) -> bool {
        [self.s_hh, self.s_hv, self.s_vh, self.s_vv]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Total backscattered power `|hh|^2 + |hv|^2 + |vh|^2 + |vv|^2`.
    pub fn span(&self) -> f64 {
        self.s_hh.norm_sqr() + self.s_hv.norm_sqr() + self.s_vh.norm_sqr() + self.s_vv.norm_sqr()
    }

    /// Relative cross-pol mismatch; zero for exactly reciprocal pixels.
    pub fn reciprocity_defect(&self) -> f64 {
        let span = self.span();
        if span == 0.0 {
            return 0.0;
        }
        (self.s_hv - self.s_vh).norm() / span.sqrt()
    }

    /// Averages the cross-pol channels, projecting onto the reciprocal subspace.
    pub fn symmetrized(&self) -> Self {
        let hv = 0.5 * (self.s_hv + self.s_vh);
        Self::new(self.s_hh, hv, hv, self.s_vv)
    }

    /// Multiplies every channel by a global complex factor.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self::new(c * self.s_hh, c * self.s_hv, c * self.s_vh, c * self.s_vv)
    }

    /// Rotates the scatterer by `psi` radians about the line of sight:
    /// `S' = R(psi) S R(psi)^T`.
    pub fn rotated(&self, psi: f64) -> Self {
        let (s, c) = psi.sin_cos();
        // R = [[c, -s], [s, c]]; S' = R S R^T.
        let a = self.s_hh;
        let b = self.s_hv;
        let d = self.s_vh;
        let e = self.s_vv;
        let hh = c * (c * a - s * d) - s * (c * b - s * e);
        let hv = s * (c * a - s * d) + c * (c * b - s * e);
        let vh = c * (c * d + s * a) - s * (c * e + s * b);
        let vv = s * (c * d + s * a) + c * (c * e + s * b);
        Self::new(hh, hv, vh, vv)
    }

    /// Sphere / flat plate / trihedral: the identity matrix.
    pub fn sphere() -> Self {
        Self::reciprocal(1.0.into(), 0.0.into(), 1.0.into())
    }

    /// Diplane (dihedral) oriented at `theta` radians.
    pub fn diplane(theta: f64) -> Self {
        let (s2, c2) = (2.0 * theta).sin_cos();
        Self::reciprocal(c2.into(), s2.into(), (-c2).into())
    }

    /// Helical scatterer of the given handedness, oriented at `theta` radians.
    ///
    /// Rotation only shifts the absolute phase of a helix, so `theta` is a
    /// phase convention rather than a geometric orientation.
    pub fn helix(hand: Helicity, theta: f64) -> Self {
        let j = Complex64::new(0.0, 1.0);
        let (sign, rot) = match hand {
            Helicity::Right => (-j, (2.0 * j * theta).exp()),
            Helicity::Left => (j, (-2.0 * j * theta).exp()),
        };
        let half = 0.5 * rot;
        Self::reciprocal(half, half * sign, -half)
    }

    /// Horizontal dipole: `diag(1, 0)`.
    pub fn dipole() -> Self {
        Self::reciprocal(1.0.into(), 0.0.into(), 0.0.into())
    }

    /// Cylinder: `diag(1, 1/2)`.
    pub fn cylinder() -> Self {
        Self::reciprocal(1.0.into(), 0.0.into(), 0.5.into())
    }

    /// Narrow diplane: `diag(1, -1/2)`.
    pub fn narrow_diplane() -> Self {
        Self::reciprocal(1.0.into(), 0.0.into(), (-0.5).into())
    }

    /// Quarter-wave device: `diag(1, j)`.
    pub fn quarter_wave() -> Self {
        Self::reciprocal(1.0.into(), 0.0.into(), Complex64::new(0.0, 1.0))
    }

    /// Purely antisymmetric (non-reciprocal) target.
    pub fn antisymmetric() -> Self {
        Self::new(0.0.into(), 1.0.into(), (-1.0).into(), 0.0.into())
    }
}
