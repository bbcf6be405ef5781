//! Krogager sphere-diplane-helix decomposition.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use super::sinclair::{Helicity, SinclairPixel};
use crate::cxcore::{CxError, Result};

/// How the sign of the helix term is fixed during estimation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HelicityRule {
    /// Per pixel, from the dominant circular co-polar channel: right-handed
    /// when `|S_rr| >= |S_ll|`, left-handed otherwise.
    #[default]
    Dominance,
}

/// Sphere, diplane and helix amplitudes with the orientation and phase terms
/// of the coherent Krogager model
/// `S = exp(j phi) (exp(j phi_s) k_s S_s + k_d S_d(theta) + k_h S_h(theta))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrogagerVector {
    pub k_s: f64,
    pub k_d: f64,
    pub k_h: f64,
    /// Diplane orientation angle (radians).
    pub theta: f64,
    /// Absolute phase (radians).
    pub phi: f64,
    /// Sphere phase relative to the diplane-helix pair (radians).
    pub phi_s: f64,
    pub helicity: Helicity,
}

impl KrogagerVector {
    /// Component amplitudes `[k_s, k_d, k_h]`.
    pub fn amplitudes(&self) -> [f64; 3] {
        [self.k_s, self.k_d, self.k_h]
    }
}

/// Right/left circular co- and cross-polar channels `(S_rr, S_ll, S_rl)` of a
/// reciprocal pixel.
pub fn circular_basis(p: &SinclairPixel) -> (Complex64, Complex64, Complex64) {
    let j = Complex64::new(0.0, 1.0);
    let srr = 0.5 * (p.s_hh - p.s_vv) + j * p.s_hv;
    let sll = 0.5 * (p.s_vv - p.s_hh) + j * p.s_hv;
    let srl = 0.5 * j * (p.s_hh + p.s_vv);
    (srr, sll, srl)
}

fn wrap_pi(a: f64) -> f64 {
    let mut x = a % TAU;
    if x > PI {
        x -= TAU;
    } else if x <= -PI {
        x += TAU;
    }
    x
}

/// Decomposes a reciprocal pixel into sphere/diplane/helix amplitudes and
/// phases. In the circular basis `k_s = |S_rl|`, `k_d = min(|S_rr|, |S_ll|)`
/// and `k_h = ||S_rr| - |S_ll||`; the orientation and phases are recovered
/// from the channel arguments so that [`krogager_resynthesize`] reproduces
/// the input exactly.
///
/// Errors with a contract violation when the pixel is not reciprocal.
pub fn krogager_decompose(p: &SinclairPixel, rule: HelicityRule) -> Result<KrogagerVector> {
    let HelicityRule::Dominance = rule;
    if p.reciprocity_defect() > 1e-9 {
        return Err(CxError::contract(
            "krogager_decompose",
            format!("non-reciprocal pixel (defect {:.3e})", p.reciprocity_defect()),
        ));
    }
    let (srr, sll, srl) = circular_basis(p);
    let (a_r, a_l, a_s) = (srr.norm(), sll.norm(), srl.norm());

    let helicity = if a_r >= a_l { Helicity::Right } else { Helicity::Left };
    let k_s = a_s;
    let k_d = a_r.min(a_l);
    let k_h = (a_r - a_l).abs();

    // The synthesis model fixes the channel arguments to
    //   arg S_rr = phi + 2 theta,  arg S_ll = phi - 2 theta + pi,
    //   arg S_rl = phi + phi_s + pi/2,
    // which the branches below invert, degenerating gracefully when a
    // channel (and hence its phase) vanishes.
    let (mut phi, mut theta) = if k_d > 0.0 {
        let phi_r = srr.arg();
        let phi_l = sll.arg();
        (wrap_pi(0.5 * (phi_r + phi_l - PI)), wrap_pi(0.25 * (phi_r - phi_l + PI)))
    } else if k_h > 0.0 {
        match helicity {
            Helicity::Right => (srr.arg(), 0.0),
            Helicity::Left => (wrap_pi(sll.arg() - PI), 0.0),
        }
    } else {
        (0.0, 0.0)
    };
    // The diplane orientation is defined modulo pi/2; fold it into
    // (-pi/4, pi/4] and absorb the sign flip of both oriented terms into phi.
    while theta > FRAC_PI_4 {
        theta -= FRAC_PI_2;
        phi = wrap_pi(phi + PI);
    }
    while theta <= -FRAC_PI_4 {
        theta += FRAC_PI_2;
        phi = wrap_pi(phi + PI);
    }
    let phi_s = if k_s > 0.0 { wrap_pi(srl.arg() - FRAC_PI_2 - phi) } else { 0.0 };

    Ok(KrogagerVector { k_s, k_d, k_h, theta, phi, phi_s, helicity })
}

/// Coherently recombines sphere, diplane and helix terms into a reciprocal
/// Sinclair matrix.
pub fn krogager_resynthesize(v: &KrogagerVector) -> SinclairPixel {
    let j = Complex64::new(0.0, 1.0);
    let sphere = SinclairPixel::sphere().scaled((j * v.phi_s).exp() * v.k_s);
    let diplane = SinclairPixel::diplane(v.theta).scaled(v.k_d.into());
    let helix = SinclairPixel::helix(v.helicity, v.theta).scaled(v.k_h.into());
    let sum = SinclairPixel::reciprocal(
        sphere.s_hh + diplane.s_hh + helix.s_hh,
        sphere.s_hv + diplane.s_hv + helix.s_hv,
        sphere.s_vv + diplane.s_vv + helix.s_vv,
    );
    sum.scaled((j * v.phi).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn residual(a: &SinclairPixel, b: &SinclairPixel) -> f64 {
        let num = (a.s_hh - b.s_hh).norm_sqr()
            + 2.0 * (a.s_hv - b.s_hv).norm_sqr()
            + (a.s_vv - b.s_vv).norm_sqr();
        (num / a.span().max(1e-300)).sqrt()
    }

    #[test]
    fn sphere_has_only_a_sphere_term() {
        let v = krogager_decompose(&SinclairPixel::sphere(), HelicityRule::Dominance).unwrap();
        assert!((v.k_s - 1.0).abs() < 1e-15);
        assert_eq!(v.k_d, 0.0);
        assert_eq!(v.k_h, 0.0);
    }

    #[test]
    fn diplane_has_only_a_diplane_term() {
        for theta in [0.0, 0.3, -0.6] {
            let v = krogager_decompose(&SinclairPixel::diplane(theta), HelicityRule::Dominance).unwrap();
            assert!((v.k_d - 1.0).abs() < 1e-12);
            assert!(v.k_s < 1e-12);
            assert!(v.k_h < 1e-12);
        }
    }

    #[test]
    fn helix_has_only_a_helix_term_with_matching_hand() {
        for hand in [Helicity::Left, Helicity::Right] {
            let v = krogager_decompose(&SinclairPixel::helix(hand, 0.4), HelicityRule::Dominance).unwrap();
            assert!((v.k_h - 1.0).abs() < 1e-12);
            assert!(v.k_s < 1e-12);
            assert!(v.k_d < 1e-12);
            assert_eq!(v.helicity, hand);
        }
    }

    #[test]
    fn diplane_orientation_is_recovered() {
        for theta in [-0.7, -0.2, 0.0, 0.35, 0.7] {
            let v = krogager_decompose(&SinclairPixel::diplane(theta), HelicityRule::Dominance).unwrap();
            assert!((v.theta - theta).abs() < 1e-12, "theta {theta} -> {}", v.theta);
        }
    }

    #[test]
    fn random_reciprocal_pixels_round_trip() {
        let mut rng = crate::testkit::rng(43);
        for _ in 0..1000 {
            let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let p = SinclairPixel::reciprocal(c(), c(), c());
            let v = krogager_decompose(&p, HelicityRule::Dominance).unwrap();
            let q = krogager_resynthesize(&v);
            assert!(residual(&p, &q) < 1e-12, "residual {}", residual(&p, &q));
        }
    }

    #[test]
    fn amplitudes_are_non_negative() {
        let mut rng = crate::testkit::rng(44);
        for _ in 0..200 {
            let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let v = krogager_decompose(&SinclairPixel::reciprocal(c(), c(), c()), HelicityRule::Dominance).unwrap();
            assert!(v.k_s >= 0.0 && v.k_d >= 0.0 && v.k_h >= 0.0);
        }
    }

    #[test]
    fn non_reciprocal_input_is_rejected() {
        let err = krogager_decompose(&SinclairPixel::antisymmetric(), HelicityRule::Dominance);
        assert!(err.is_err());
    }

    #[test]
    fn zero_pixel_decomposes_to_zero() {
        let zero = SinclairPixel::reciprocal(0.0.into(), 0.0.into(), 0.0.into());
        let v = krogager_decompose(&zero, HelicityRule::Dominance).unwrap();
        assert_eq!(v.amplitudes(), [0.0, 0.0, 0.0]);
        let q = krogager_resynthesize(&v);
        assert_eq!(q.span(), 0.0);
    }
}
