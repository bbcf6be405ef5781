//! Cloude-Pottier entropy/alpha analysis of local coherency matrices.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::FRAC_PI_2;

use super::eigen::{eigh3, hermitized};
use super::pauli::PauliVector;
use crate::cxcore::{CxError, Result};

/// 3x3 Hermitian second moment of the Pauli vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CoherencyMatrix {
    pub m: [[Complex64; 3]; 3],
}

impl CoherencyMatrix {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        let mut t = Self::default();
        for i in 0..3 {
            t.m[i][i] = Complex64::new(1.0, 0.0);
        }
        t
    }

    /// Rank-1 outer product `k k^H`.
    pub fn from_outer(k: &PauliVector) -> Self {
        let mut t = Self::default();
        t.accumulate(k);
        t
    }

    /// Adds `k k^H` in place.
    pub fn accumulate(&mut self, k: &PauliVector) {
        let v = [k.alpha, k.beta, k.gamma];
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += v[i] * v[j].conj();
            }
        }
    }

    pub fn scale(&mut self, f: f64) {
        for row in &mut self.m {
            for v in row.iter_mut() {
                *v *= f;
            }
        }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re + self.m[2][2].re
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        d
    }
}

/// Sample covariance of the Pauli field over a sliding square window: at each
/// pixel `T = (1/N) sum k k^H` with the window clipped to the raster at the
/// edges. Every output is Hermitian PSD by construction.
pub fn boxcar_scm(
    field: &[PauliVector],
    height: usize,
    width: usize,
    window: usize,
) -> Result<Vec<CoherencyMatrix>> {
    if field.len() != height * width {
        return Err(CxError::contract(
            "boxcar_scm",
            format!("field length {} does not match {height}x{width}", field.len()),
        ));
    }
    if window.is_multiple_of(2) || window < 3 {
        return Err(CxError::contract("boxcar_scm", format!("window {window} must be odd and >= 3")));
    }
    if window > height.min(width) {
        return Err(CxError::contract(
            "boxcar_scm",
            format!("window {window} exceeds raster extent {height}x{width}"),
        ));
    }
    let half = window / 2;
    let mut out = vec![CoherencyMatrix::zero(); height * width];
    out.par_chunks_mut(width).enumerate().for_each(|(i, row)| {
        let i0 = i.saturating_sub(half);
        let i1 = (i + half + 1).min(height);
        for (j, t) in row.iter_mut().enumerate() {
            let j0 = j.saturating_sub(half);
            let j1 = (j + half + 1).min(width);
            for ii in i0..i1 {
                for jj in j0..j1 {
                    t.accumulate(&field[ii * width + jj]);
                }
            }
            t.scale(1.0 / ((i1 - i0) * (j1 - j0)) as f64);
        }
    });
    Ok(out)
}

/// Rectangle partition of the H-alpha plane. Entropy splits select a band;
/// each band has its own alpha splits (degrees) and zone identifiers. Values
/// exactly on a boundary fall into the lower-H / lower-alpha cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ZoneTable {
    pub h_splits: Vec<f64>,
    pub alpha_splits_deg: Vec<Vec<f64>>,
    pub zone_ids: Vec<Vec<u8>>,
}

impl Default for ZoneTable {
    /// Classic nine-zone partition. The high-entropy band keeps only the 55
    /// degree split: its low-alpha cell (zone 3 in the usual numbering) is
    /// not physically reachable, so the identifier 3 is never produced.
    fn default() -> Self {
        Self {
            h_splits: vec![0.5, 0.9],
            alpha_splits_deg: vec![vec![42.5, 47.5], vec![40.0, 50.0], vec![55.0]],
            zone_ids: vec![vec![9, 8, 7], vec![6, 5, 4], vec![2, 1]],
        }
    }
}

impl ZoneTable {
    pub fn validate(&self) -> Result<()> {
        let bands = self.h_splits.len() + 1;
        if self.alpha_splits_deg.len() != bands || self.zone_ids.len() != bands {
            return Err(CxError::contract("zone_table", "one alpha split/id row per entropy band"));
        }
        if !self.h_splits.windows(2).all(|w| w[0] < w[1])
            || self.h_splits.iter().any(|h| !(0.0..1.0).contains(h))
        {
            return Err(CxError::contract("zone_table", "entropy splits must ascend within (0, 1)"));
        }
        let mut seen = [false; 10];
        for (splits, ids) in self.alpha_splits_deg.iter().zip(&self.zone_ids) {
            if ids.len() != splits.len() + 1 {
                return Err(CxError::contract("zone_table", "need one zone id per alpha cell"));
            }
            if !splits.windows(2).all(|w| w[0] < w[1]) || splits.iter().any(|a| !(0.0..90.0).contains(a)) {
                return Err(CxError::contract("zone_table", "alpha splits must ascend within (0, 90)"));
            }
            for &id in ids {
                if !(1..=9).contains(&id) || seen[id as usize] {
                    return Err(CxError::contract("zone_table", "zone ids must be unique and in 1..=9"));
                }
                seen[id as usize] = true;
            }
        }
        Ok(())
    }
}

/// Looks up the zone of an `(entropy, mean alpha)` pair; `alpha` in radians.
pub fn classify_zone(h: f64, alpha: f64, table: &ZoneTable) -> Result<u8> {
    if !(0.0..=1.0).contains(&h) || !(0.0..=FRAC_PI_2).contains(&alpha) {
        return Err(CxError::contract(
            "classify_zone",
            format!("(H, alpha) = ({h}, {alpha}) outside [0,1] x [0, pi/2]"),
        ));
    }
    let band = table.h_splits.iter().position(|s| h <= *s).unwrap_or(table.h_splits.len());
    let deg = alpha.to_degrees();
    let splits = &table.alpha_splits_deg[band];
    let cell = splits.iter().position(|s| deg <= *s).unwrap_or(splits.len());
    Ok(table.zone_ids[band][cell])
}

/// Entropy of three pseudo-probabilities in base 3, with `0 log 0 = 0`.
pub fn entropy3(p: &[f64; 3]) -> f64 {
    let ln3 = 3.0f64.ln();
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln() / ln3).sum::<f64>()
}

/// Per-pixel result of the entropy/alpha decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HAlphaResult {
    /// Scattering randomness in [0, 1].
    pub entropy: f64,
    /// Mean scattering-mechanism angle in [0, pi/2] radians.
    pub alpha_mean: f64,
    /// Zone identifier from the configured table; 0 for invalid pixels.
    pub zone: u8,
    /// Eigenvalues of the coherency matrix, descending.
    pub eigenvalues: [f64; 3],
    /// Eigenvalues normalized to unit sum.
    pub pseudo_probs: [f64; 3],
    /// False when the pixel had zero backscattered power.
    pub valid: bool,
}

impl HAlphaResult {
    fn invalid() -> Self {
        Self {
            entropy: 0.0,
            alpha_mean: 0.0,
            zone: 0,
            eigenvalues: [0.0; 3],
            pseudo_probs: [0.0; 3],
            valid: false,
        }
    }
}

/// Eigen-based entropy/alpha decomposition of one coherency matrix.
///
/// The input is symmetrized; eigenvalues below `-1e-9` relative to the
/// largest are a contract violation, small negatives are clamped to zero.
/// A zero-trace pixel is returned flagged invalid rather than an error.
pub fn h_alpha(t: &CoherencyMatrix, table: &ZoneTable) -> Result<HAlphaResult> {
    let (vals, vecs) = eigh3(&hermitized(&t.m));
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return Ok(HAlphaResult::invalid());
    }
    if vals[2] < -1e-9 * scale {
        return Err(CxError::contract(
            "h_alpha",
            format!("coherency matrix is not PSD: eigenvalue {:.3e}", vals[2]),
        ));
    }
    let lam = [vals[0].max(0.0), vals[1].max(0.0), vals[2].max(0.0)];
    let total: f64 = lam.iter().sum();
    if total <= 0.0 {
        return Ok(HAlphaResult::invalid());
    }
    let p = [lam[0] / total, lam[1] / total, lam[2] / total];
    let entropy = entropy3(&p).clamp(0.0, 1.0);
    let alpha_mean = (0..3)
        .map(|i| p[i] * vecs[i][0].norm().clamp(0.0, 1.0).acos())
        .sum::<f64>()
        .clamp(0.0, FRAC_PI_2);
    let zone = classify_zone(entropy, alpha_mean, table)?;
    Ok(HAlphaResult { entropy, alpha_mean, zone, eigenvalues: lam, pseudo_probs: p, valid: true })
}

/// Boundary of the physically reachable part of the H-alpha plane, swept from
/// the two one-parameter degenerate eigenvalue families `diag(1, m, m)`
/// (lower curve) and `diag(1, 1, m)` (upper curve beyond its entropy knee at
/// `log_3 2`; below the knee the upper bound is `pi/2`).
#[derive(Clone, Debug)]
pub struct FeasibilityCurve {
    lower: Vec<(f64, f64)>,
    upper: Vec<(f64, f64)>,
}

/// Sweeps both degenerate families with `samples` points each.
pub fn feasibility_envelope(samples: usize) -> FeasibilityCurve {
    let n = samples.max(8);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for k in 0..n {
        let m = k as f64 / (n - 1) as f64;
        let p1 = [1.0 / (1.0 + 2.0 * m), m / (1.0 + 2.0 * m), m / (1.0 + 2.0 * m)];
        lower.push((entropy3(&p1), (p1[1] + p1[2]) * FRAC_PI_2));
        let p2 = [1.0 / (2.0 + m), 1.0 / (2.0 + m), m / (2.0 + m)];
        upper.push((entropy3(&p2), (p2[0] + p2[1]) * FRAC_PI_2));
    }
    FeasibilityCurve { lower, upper }
}

fn interp(pts: &[(f64, f64)], h: f64) -> f64 {
    if h <= pts[0].0 {
        return pts[0].1;
    }
    if h >= pts[pts.len() - 1].0 {
        return pts[pts.len() - 1].1;
    }
    let idx = pts.partition_point(|&(x, _)| x < h);
    let (x0, y0) = pts[idx - 1];
    let (x1, y1) = pts[idx];
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (h - x0) / (x1 - x0)
}

impl FeasibilityCurve {
    /// Interpolated `(alpha_min, alpha_max)` at entropy `h`.
    pub fn alpha_bounds(&self, h: f64) -> (f64, f64) {
        let lo = interp(&self.lower, h);
        let hi = if h <= self.upper[0].0 { FRAC_PI_2 } else { interp(&self.upper, h) };
        (lo, hi)
    }

    /// Whether `(h, alpha)` lies inside the envelope, with `slack` radians of
    /// tolerance for interpolation error.
    pub fn contains(&self, h: f64, alpha: f64, slack: f64) -> bool {
        let (lo, hi) = self.alpha_bounds(h);
        (0.0..=1.0).contains(&h) && alpha >= lo - slack && alpha <= hi + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarimetry::pauli::pauli_decompose;
    use crate::polarimetry::sinclair::SinclairPixel;
    use crate::testkit::{rand_psd3, rng};
    use rand::Rng;
    use std::f64::consts::FRAC_PI_3;

    fn random_field(seed: u64, h: usize, w: usize) -> Vec<PauliVector> {
        let mut rng = rng(seed);
        (0..h * w)
            .map(|_| {
                let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                pauli_decompose(&SinclairPixel::reciprocal(c(), c(), c()))
            })
            .collect()
    }

    #[test]
    fn identity_coherency_is_maximally_random() {
        let r = h_alpha(&CoherencyMatrix::identity(), &ZoneTable::default()).unwrap();
        assert!((r.entropy - 1.0).abs() < 1e-12);
        assert!((r.alpha_mean - FRAC_PI_3).abs() < 1e-12);
        assert!(r.valid);
        assert_eq!(r.zone, 1);
    }

    #[test]
    fn rank_one_coherency_is_deterministic() {
        let k = pauli_decompose(&SinclairPixel::sphere());
        let r = h_alpha(&CoherencyMatrix::from_outer(&k), &ZoneTable::default()).unwrap();
        assert!(r.entropy < 1e-12);
        assert!(r.alpha_mean < 1e-9);
        assert_eq!(r.zone, 9);
    }

    #[test]
    fn entropy_and_alpha_ignore_positive_scaling() {
        let mut rng = rng(49);
        for _ in 0..100 {
            let t = CoherencyMatrix { m: rand_psd3(&mut rng, 1e-6) };
            let mut t10 = t;
            t10.scale(rng.gen_range(1e-3..1e3));
            let a = h_alpha(&t, &ZoneTable::default()).unwrap();
            let b = h_alpha(&t10, &ZoneTable::default()).unwrap();
            assert!((a.entropy - b.entropy).abs() < 1e-10);
            assert!((a.alpha_mean - b.alpha_mean).abs() < 1e-10);
            assert_eq!(a.zone, b.zone);
        }
    }

    #[test]
    fn pseudo_probabilities_sum_to_one() {
        let mut rng = rng(50);
        for _ in 0..500 {
            let t = CoherencyMatrix { m: rand_psd3(&mut rng, 1e-9) };
            let r = h_alpha(&t, &ZoneTable::default()).unwrap();
            assert!((r.pseudo_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&r.entropy));
            assert!((0.0..=FRAC_PI_2).contains(&r.alpha_mean));
        }
    }

    #[test]
    fn zero_power_pixel_is_flagged_invalid() {
        let r = h_alpha(&CoherencyMatrix::zero(), &ZoneTable::default()).unwrap();
        assert!(!r.valid);
        assert_eq!(r.zone, 0);
    }

    #[test]
    fn non_psd_matrix_is_rejected() {
        let mut t = CoherencyMatrix::identity();
        t.m[2][2] = Complex64::new(-1.0, 0.0);
        assert!(h_alpha(&t, &ZoneTable::default()).is_err());
    }

    #[test]
    fn constant_field_boxcar_is_the_rank_one_outer_product() {
        let k = pauli_decompose(&SinclairPixel::diplane(0.3));
        let field = vec![k; 25];
        let out = boxcar_scm(&field, 5, 5, 3).unwrap();
        let want = CoherencyMatrix::from_outer(&k);
        for t in &out {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((t.m[i][j] - want.m[i][j]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn boxcar_matches_the_direct_nine_term_sum() {
        let field = random_field(51, 3, 3);
        let out = boxcar_scm(&field, 3, 3, 3).unwrap();
        // The center pixel sees the full 3x3 window.
        let mut want = CoherencyMatrix::zero();
        for k in &field {
            want.accumulate(k);
        }
        want.scale(1.0 / 9.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((out[4].m[i][j] - want.m[i][j]).norm() < 1e-12);
            }
        }
        // A corner sees the clipped 2x2 window.
        let mut corner = CoherencyMatrix::zero();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            corner.accumulate(&field[i * 3 + j]);
        }
        corner.scale(0.25);
        assert!((out[0].m[1][2] - corner.m[1][2]).norm() < 1e-12);
    }

    #[test]
    fn boxcar_outputs_are_hermitian() {
        let field = random_field(52, 9, 7);
        for t in boxcar_scm(&field, 9, 7, 5).unwrap() {
            assert!(t.hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn boxcar_rejects_bad_windows() {
        let field = random_field(53, 4, 4);
        assert!(boxcar_scm(&field, 4, 4, 4).is_err());
        assert!(boxcar_scm(&field, 4, 4, 1).is_err());
        assert!(boxcar_scm(&field, 4, 4, 5).is_err());
    }

    #[test]
    fn default_zone_table_is_valid_and_hits_the_corners() {
        let table = ZoneTable::default();
        table.validate().unwrap();
        assert_eq!(classify_zone(0.0, 0.0, &table).unwrap(), 9);
        assert_eq!(classify_zone(1.0, FRAC_PI_2, &table).unwrap(), 1);
    }

    #[test]
    fn boundaries_fall_into_the_lower_zone() {
        let table = ZoneTable::default();
        assert_eq!(classify_zone(0.5, 0.1, &table).unwrap(), 9);
        assert_eq!(classify_zone(0.5 + 1e-12, 0.1, &table).unwrap(), 6);
        assert_eq!(classify_zone(0.2, 42.4999f64.to_radians(), &table).unwrap(), 9);
        assert_eq!(classify_zone(0.2, 42.5001f64.to_radians(), &table).unwrap(), 8);
    }

    #[test]
    fn zone_lookup_matches_a_rectangle_membership_oracle() {
        let table = ZoneTable::default();
        let mut rng = rng(54);
        for _ in 0..2000 {
            let h: f64 = rng.gen_range(0.0..1.0);
            let a: f64 = rng.gen_range(0.0..FRAC_PI_2);
            let got = classify_zone(h, a, &table).unwrap();
            // Brute force: test every cell rectangle for membership.
            let mut want = None;
            for (band, ids) in table.zone_ids.iter().enumerate() {
                let h_lo = if band == 0 { -f64::INFINITY } else { table.h_splits[band - 1] };
                let h_hi = table.h_splits.get(band).copied().unwrap_or(f64::INFINITY);
                if !(h > h_lo && h <= h_hi) {
                    continue;
                }
                let splits = &table.alpha_splits_deg[band];
                for (cell, &id) in ids.iter().enumerate() {
                    let a_lo = if cell == 0 { -f64::INFINITY } else { splits[cell - 1] };
                    let a_hi = splits.get(cell).copied().unwrap_or(f64::INFINITY);
                    let deg = a.to_degrees();
                    if deg > a_lo && deg <= a_hi {
                        assert!(want.is_none(), "cells overlap");
                        want = Some(id);
                    }
                }
            }
            assert_eq!(got, want.expect("every pair falls in exactly one cell"));
        }
    }

    #[test]
    fn out_of_range_pairs_are_rejected() {
        let table = ZoneTable::default();
        assert!(classify_zone(-0.1, 0.3, &table).is_err());
        assert!(classify_zone(0.3, 1.7, &table).is_err());
    }

    #[test]
    fn invalid_tables_are_rejected() {
        let mut dup = ZoneTable::default();
        dup.zone_ids[0][0] = 8;
        assert!(dup.validate().is_err());
        let unsorted = ZoneTable { h_splits: vec![0.9, 0.5], ..ZoneTable::default() };
        assert!(unsorted.validate().is_err());
    }

    #[test]
    fn envelope_endpoints_match_the_degenerate_families() {
        let env = feasibility_envelope(4096);
        let (lo0, hi0) = env.alpha_bounds(0.0);
        assert!(lo0.abs() < 1e-9);
        assert!((hi0 - FRAC_PI_2).abs() < 1e-9);
        let (lo1, hi1) = env.alpha_bounds(1.0);
        assert!((lo1 - FRAC_PI_3).abs() < 1e-6);
        assert!((hi1 - FRAC_PI_3).abs() < 1e-6);
        // The knee of the upper curve sits at H = log_3(2).
        let knee = 2.0f64.ln() / 3.0f64.ln();
        let (_, hi) = env.alpha_bounds(knee - 1e-3);
        assert!((hi - FRAC_PI_2).abs() < 1e-4);
    }

    #[test]
    fn swept_family_points_lie_on_the_envelope() {
        let env = feasibility_envelope(8192);
        for k in 1..40 {
            let m = k as f64 / 40.0;
            let p = [1.0 / (1.0 + 2.0 * m), m / (1.0 + 2.0 * m), m / (1.0 + 2.0 * m)];
            let (h, a) = (entropy3(&p), (p[1] + p[2]) * FRAC_PI_2);
            assert!(env.contains(h, a, 1e-6));
            let (lo, _) = env.alpha_bounds(h);
            assert!((lo - a).abs() < 1e-6);
        }
    }
}
