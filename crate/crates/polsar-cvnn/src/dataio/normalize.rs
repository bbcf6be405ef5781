//! Invertible amplitude normalization. Both modes are pure complex scalings,
//! so phase and polarimetric structure pass through untouched; the scales are
//! recorded in raster meta for exact undo after reconstruction.

use super::raster::ComplexRaster;
use crate::cxcore::{CxError, Result};

/// Normalization strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// One scale for the whole raster: `1 / max |z|`.
    GlobalAmpMax,
    /// One scale per channel: `1 / (sigma_k * sqrt(2))`, where `sigma_k` pools
    /// the mean-centered real and imaginary components of channel `k`. The
    /// scaled components then have pooled standard deviation `1 / sqrt(2)`,
    /// i.e. unit expected power per pixel for a zero-mean channel.
    PerChannelStd,
}

impl NormMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMode::GlobalAmpMax => "global-amp-max",
            NormMode::PerChannelStd => "per-channel-std",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "global-amp-max" => Some(NormMode::GlobalAmpMax),
            "per-channel-std" => Some(NormMode::PerChannelStd),
            _ => None,
        }
    }
}

/// Scales actually applied to a raster: one entry for `GlobalAmpMax`,
/// `channels` entries for `PerChannelStd`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormParams {
    pub mode: NormMode,
    pub scales: Vec<f64>,
}

const KEY_MODE: &str = "norm.mode";
const KEY_SCALES: &str = "norm.scales";

impl NormParams {
    /// Writes `norm.mode` / `norm.scales` meta entries.
    pub fn to_meta(&self, meta: &mut std::collections::BTreeMap<String, String>) {
        meta.insert(KEY_MODE.into(), self.mode.as_str().into());
        let joined: Vec<String> = self.scales.iter().map(|s| s.to_string()).collect();
        meta.insert(KEY_SCALES.into(), joined.join(","));
    }

    /// Reads the meta entries written by [`NormParams::to_meta`].
    pub fn from_meta(meta: &std::collections::BTreeMap<String, String>) -> Result<Self> {
        const OP: &str = "norm_params";
        let mode = meta
            .get(KEY_MODE)
            .ok_or_else(|| CxError::contract(OP, format!("missing meta key {KEY_MODE}")))?;
        let mode = NormMode::parse(mode)
            .ok_or_else(|| CxError::contract(OP, format!("unknown norm mode `{mode}`")))?;
        let scales = meta
            .get(KEY_SCALES)
            .ok_or_else(|| CxError::contract(OP, format!("missing meta key {KEY_SCALES}")))?;
        let scales: Vec<f64> = scales
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CxError::contract(OP, format!("bad scale `{s}`")))
            })
            .collect::<Result<_>>()?;
        if scales.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(CxError::contract(OP, "scales must be finite and positive"));
        }
        Ok(NormParams { mode, scales })
    }
}

/// Normalizes a raster, returning the scaled copy and the parameters that
/// invert it. The parameters are also stamped into the copy's meta.
pub fn normalize(raster: &ComplexRaster, mode: NormMode) -> Result<(ComplexRaster, NormParams)> {
    const OP: &str = "normalize";
    if !raster.is_finite() {
        return Err(CxError::numeric(OP, "raster contains non-finite samples"));
    }
    let scales = match mode {
        NormMode::GlobalAmpMax => {
            let max = raster.max_amplitude();
            if max <= 0.0 {
                return Err(CxError::numeric(OP, "raster has zero power"));
            }
            vec![1.0 / max]
        }
        NormMode::PerChannelStd => {
            let c = raster.channels;
            let n = (raster.data.len() / c) as f64;
            let mut scales = Vec::with_capacity(c);
            for k in 0..c {
                let mut mean_re = 0.0;
                let mut mean_im = 0.0;
                for z in raster.data.iter().skip(k).step_by(c) {
                    mean_re += z.re;
                    mean_im += z.im;
                }
                mean_re /= n;
                mean_im /= n;
                let mut ss = 0.0;
                for z in raster.data.iter().skip(k).step_by(c) {
                    ss += (z.re - mean_re).powi(2) + (z.im - mean_im).powi(2);
                }
                let sigma = (ss / (2.0 * n)).sqrt();
                if sigma <= 0.0 {
                    return Err(CxError::numeric(OP, format!("channel {k} has zero variance")));
                }
                scales.push(1.0 / (sigma * std::f64::consts::SQRT_2));
            }
            scales
        }
    };
    let mut out = raster.clone();
    apply_scales(&mut out, &scales, false);
    let params = NormParams { mode, scales };
    params.to_meta(&mut out.meta);
    Ok((out, params))
}

/// Undoes [`normalize`] using the raster's own meta; the norm keys are removed
/// from the result.
pub fn denormalize(raster: &ComplexRaster) -> Result<ComplexRaster> {
    let params = NormParams::from_meta(&raster.meta)?;
    let mut out = denormalize_with(raster, &params)?;
    out.meta.remove(KEY_MODE);
    out.meta.remove(KEY_SCALES);
    Ok(out)
}

/// Undoes [`normalize`] with explicit parameters (for rasters whose meta was
/// lost in the model round trip).
pub fn denormalize_with(raster: &ComplexRaster, params: &NormParams) -> Result<ComplexRaster> {
    const OP: &str = "denormalize";
    let want = match params.mode {
        NormMode::GlobalAmpMax => 1,
        NormMode::PerChannelStd => raster.channels,
    };
    if params.scales.len() != want {
        return Err(CxError::contract(
            OP,
            format!("expected {want} scales, got {}", params.scales.len()),
        ));
    }
    if params.scales.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(CxError::contract(OP, "scales must be finite and positive"));
    }
    let mut out = raster.clone();
    apply_scales(&mut out, &params.scales, true);
    Ok(out)
}

fn apply_scales(raster: &mut ComplexRaster, scales: &[f64], invert: bool) {
    if scales.len() == 1 {
        let s = if invert { 1.0 / scales[0] } else { scales[0] };
        for z in &mut raster.data {
            *z *= s;
        }
    } else {
        let c = raster.channels;
        for (i, z) in raster.data.iter_mut().enumerate() {
            let s = scales[i % c];
            *z *= if invert { 1.0 / s } else { s };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::raster::Dtype;
    use crate::testkit;
    use num_complex::Complex64;
    use rand::Rng;

    fn random_raster(seed: u64, h: usize, w: usize, c: usize) -> ComplexRaster {
        let mut rng = testkit::rng(seed);
        let mut r = ComplexRaster::zeros(h, w, c, Dtype::C128).unwrap();
        for z in &mut r.data {
            *z = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        }
        r
    }

    #[test]
    fn global_mode_caps_amplitude_at_one() {
        let r = random_raster(1, 9, 7, 3);
        let (n, p) = normalize(&r, NormMode::GlobalAmpMax).unwrap();
        assert!((n.max_amplitude() - 1.0).abs() < 1e-12);
        assert_eq!(p.scales.len(), 1);
        assert!((p.scales[0] - 1.0 / r.max_amplitude()).abs() < 1e-15);
    }

    #[test]
    fn per_channel_mode_unitizes_expected_power() {
        let r = random_raster(2, 32, 32, 4);
        let (n, p) = normalize(&r, NormMode::PerChannelStd).unwrap();
        assert_eq!(p.scales.len(), 4);
        let count = (n.data.len() / 4) as f64;
        for k in 0..4 {
            let mut mean = Complex64::default();
            for z in n.data.iter().skip(k).step_by(4) {
                mean += z;
            }
            mean /= count;
            let mut ss = 0.0;
            for z in n.data.iter().skip(k).step_by(4) {
                ss += (z - mean).norm_sqr();
            }
            // Pooled component std 1/sqrt(2) <=> mean centered power 1.
            assert!((ss / count - 1.0).abs() < 1e-10, "channel {k}: {}", ss / count);
        }
    }

    #[test]
    fn round_trip_is_exact_through_meta() {
        for mode in [NormMode::GlobalAmpMax, NormMode::PerChannelStd] {
            let r = random_raster(3, 16, 24, 3);
            let (n, _) = normalize(&r, mode).unwrap();
            let back = denormalize(&n).unwrap();
            assert!(!back.meta.contains_key("norm.mode"));
            let worst = r
                .data
                .iter()
                .zip(&back.data)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-12, "{mode:?}: worst {worst}");
        }
    }

    #[test]
    fn meta_round_trips_shortest_float_form() {
        let r = random_raster(4, 12, 12, 4);
        let (n, p) = normalize(&r, NormMode::PerChannelStd).unwrap();
        let q = NormParams::from_meta(&n.meta).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn scaling_commutes_with_phase() {
        let r = random_raster(5, 8, 8, 3);
        let (n, _) = normalize(&r, NormMode::GlobalAmpMax).unwrap();
        for (a, b) in r.data.iter().zip(&n.data) {
            if a.norm() > 1e-9 {
                assert!((a.arg() - b.arg()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_rasters_are_rejected() {
        let r = ComplexRaster::zeros(8, 8, 3, Dtype::C128).unwrap();
        assert!(normalize(&r, NormMode::GlobalAmpMax).is_err());
        assert!(normalize(&r, NormMode::PerChannelStd).is_err());

        let mut flat = ComplexRaster::zeros(8, 8, 3, Dtype::C128).unwrap();
        for z in &mut flat.data {
            *z = Complex64::new(2.5, -1.0);
        }
        // Constant channels have amplitude but no variance.
        assert!(normalize(&flat, NormMode::GlobalAmpMax).is_ok());
        assert!(normalize(&flat, NormMode::PerChannelStd).is_err());
    }

    #[test]
    fn explicit_params_denormalize_metaless_rasters() {
        let r = random_raster(6, 10, 10, 3);
        let (mut n, p) = normalize(&r, NormMode::PerChannelStd).unwrap();
        n.meta.clear();
        assert!(denormalize(&n).is_err());
        let back = denormalize_with(&n, &p).unwrap();
        let worst = r
            .data
            .iter()
            .zip(&back.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-12);

        let short = NormParams { mode: NormMode::PerChannelStd, scales: vec![1.0] };
        assert!(denormalize_with(&n, &short).is_err());
    }
}
