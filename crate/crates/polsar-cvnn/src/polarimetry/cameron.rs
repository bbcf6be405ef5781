//! Cameron coherent target decomposition and classification.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use super::sinclair::SinclairPixel;
use crate::cxcore::{CxError, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Default angular threshold to the reciprocal subspace.
pub const CAMERON_REC_THRESHOLD: f64 = FRAC_PI_4;
/// Default angular threshold to the nearest maximally symmetric scatterer.
pub const CAMERON_SYM_THRESHOLD: f64 = FRAC_PI_8;

/// Scatterer classes of the Cameron decomposition. Discriminants double as
/// label-plane codes, with 0 reserved for invalid (zero-power) pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CameronClass {
    Trihedral = 1,
    Dihedral = 2,
    NarrowDiplane = 3,
    Dipole = 4,
    Cylinder = 5,
    QuarterWave = 6,
    LeftHelix = 7,
    RightHelix = 8,
    NonReciprocal = 9,
    /// Reserved for conventions that keep non-helix asymmetric targets
    /// separate; never produced by [`cameron_classify`].
    Asymmetric = 10,
}

impl CameronClass {
    pub const ALL: [CameronClass; 10] = [
        CameronClass::Trihedral,
        CameronClass::Dihedral,
        CameronClass::NarrowDiplane,
        CameronClass::Dipole,
        CameronClass::Cylinder,
        CameronClass::QuarterWave,
        CameronClass::LeftHelix,
        CameronClass::RightHelix,
        CameronClass::NonReciprocal,
        CameronClass::Asymmetric,
    ];

    /// Label-plane code (1..=10).
    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_label(label: u8) -> Option<Self> {
        Self::ALL.get(label.wrapping_sub(1) as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CameronClass::Trihedral => "trihedral",
            CameronClass::Dihedral => "dihedral",
            CameronClass::NarrowDiplane => "narrow-diplane",
            CameronClass::Dipole => "dipole",
            CameronClass::Cylinder => "cylinder",
            CameronClass::QuarterWave => "quarter-wave",
            CameronClass::LeftHelix => "left-helix",
            CameronClass::RightHelix => "right-helix",
            CameronClass::NonReciprocal => "non-reciprocal",
            CameronClass::Asymmetric => "asymmetric",
        }
    }
}

/// Classification of one pixel. `class` is `None` for zero-power pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameronResult {
    pub class: Option<CameronClass>,
    /// Angle to the reciprocal subspace, in [0, pi/2].
    pub rec_angle: f64,
    /// Angle to the nearest maximally symmetric scatterer, in [0, pi/4];
    /// zero when the pixel never reached the symmetry test.
    pub sym_angle: f64,
    /// Complex diagonal parameter of the maximal symmetric component,
    /// normalized into the unit disk; zero when undefined.
    pub z: Complex64,
}

impl CameronResult {
    /// Label-plane code: 0 for invalid pixels, the class code otherwise.
    pub fn label(&self) -> u8 {
        self.class.map_or(0, CameronClass::label)
    }
}

/// Canonical symmetric scatterers as `(class, z)` pairs; the quarter-wave
/// device appears with both signs of its diagonal phase.
pub const CANONICAL_Z: [(CameronClass, Complex64); 7] = [
    (CameronClass::Trihedral, Complex64::new(1.0, 0.0)),
    (CameronClass::Dihedral, Complex64::new(-1.0, 0.0)),
    (CameronClass::Dipole, Complex64::new(0.0, 0.0)),
    (CameronClass::Cylinder, Complex64::new(0.5, 0.0)),
    (CameronClass::NarrowDiplane, Complex64::new(-0.5, 0.0)),
    (CameronClass::QuarterWave, Complex64::new(0.0, 1.0)),
    (CameronClass::QuarterWave, Complex64::new(0.0, -1.0)),
];

/// Rotation-invariant distance between symmetric scatterers described by
/// their diagonal parameters; the second disk automorphism term accounts for
/// the 90-degree rotation that swaps the diagonal.
pub fn disk_distance(z1: Complex64, z2: Complex64) -> f64 {
    let num = (1.0 + z1 * z2.conj()).norm().max((z1 + z2.conj()).norm());
    let den = ((1.0 + z1.norm_sqr()) * (1.0 + z2.norm_sqr())).sqrt();
    (num / den).clamp(0.0, 1.0).acos()
}

/// Classifies a pixel by reciprocity, symmetry, and nearest canonical
/// scatterer.
///
/// The scattering vector is first projected onto the reciprocal subspace; if
/// its angle to it exceeds `rec_threshold` the pixel is non-reciprocal.
/// Otherwise the maximally symmetric component is extracted; if the residual
/// angle exceeds `sym_threshold` the pixel is a helix, by handedness of the
/// dominant circular component. Symmetric pixels take the class of the
/// canonical scatterer nearest in the disk metric.
pub fn cameron_classify(
    p: &SinclairPixel,
    rec_threshold: f64,
    sym_threshold: f64,
) -> Result<CameronResult> {
    if !(0.0..FRAC_PI_2).contains(&rec_threshold)
        || rec_threshold <= 0.0
        || !(0.0..FRAC_PI_2).contains(&sym_threshold)
        || sym_threshold <= 0.0
    {
        return Err(CxError::contract("cameron_classify", "thresholds must lie in (0, pi/2)"));
    }
    if !p.is_finite() {
        return Err(CxError::contract("cameron_classify", "non-finite scattering amplitudes"));
    }
    if p.span() == 0.0 {
        return Ok(CameronResult { class: None, rec_angle: 0.0, sym_angle: 0.0, z: 0.0.into() });
    }

    // Split vec(S) into its reciprocal projection and the antisymmetric rest.
    let sym_hv = 0.5 * (p.s_hv + p.s_vh);
    let asym_hv = 0.5 * (p.s_hv - p.s_vh);
    let rec_norm = (p.s_hh.norm_sqr() + p.s_vv.norm_sqr() + 2.0 * sym_hv.norm_sqr()).sqrt();
    let rec_angle = (2.0f64.sqrt() * asym_hv.norm()).atan2(rec_norm);
    if rec_angle > rec_threshold {
        return Ok(CameronResult {
            class: Some(CameronClass::NonReciprocal),
            rec_angle,
            sym_angle: 0.0,
            z: 0.0.into(),
        });
    }

    // Pauli coordinates of the reciprocal part, and its split into left/right
    // helix components of the even-bounce plane.
    let j = Complex64::new(0.0, 1.0);
    let alpha = (p.s_hh + p.s_vv) / SQRT2;
    let beta = (p.s_hh - p.s_vv) / SQRT2;
    let gamma = SQRT2 * sym_hv;
    let a_l = (beta - j * gamma) / SQRT2;
    let a_r = (beta + j * gamma) / SQRT2;

    let rec_pow = alpha.norm_sqr() + beta.norm_sqr() + gamma.norm_sqr();
    let sym_pow = alpha.norm_sqr() + 0.5 * (a_l.norm() + a_r.norm()).powi(2);
    let sym_angle = (sym_pow / rec_pow).clamp(0.0, 1.0).sqrt().acos();

    // Diagonalizing rotation of the maximal symmetric component.
    let cross = 2.0 * (beta * gamma.conj()).re;
    let diff = beta.norm_sqr() - gamma.norm_sqr();
    let x = 0.5 * cross.atan2(diff);
    let eps = beta * x.cos() + gamma * x.sin();
    let d1 = alpha + eps;
    let d2 = alpha - eps;
    let z = if d1.norm() >= d2.norm() {
        if d1.norm() > 0.0 { d2 / d1 } else { Complex64::from(0.0) }
    } else {
        d1 / d2
    };

    if sym_angle > sym_threshold {
        let hand = if a_r.norm() >= a_l.norm() { CameronClass::RightHelix } else { CameronClass::LeftHelix };
        return Ok(CameronResult { class: Some(hand), rec_angle, sym_angle, z });
    }

    let class = CANONICAL_Z
        .iter()
        .min_by(|(_, za), (_, zb)| disk_distance(z, *za).total_cmp(&disk_distance(z, *zb)))
        .map(|(c, _)| *c);
    Ok(CameronResult { class, rec_angle, sym_angle, z })
}
