//! Complex-domain reconstruction fidelity: MSE/PSNR on the raw channels,
//! single-scale SSIM on amplitude planes, and error histograms.

use crate::cxcore::{CxError, Result};
use crate::dataio::ComplexRaster;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const PSNR_CLAMP_DB: f64 = 99.0;

/// Scalar fidelity summary of a reconstruction against its reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconMetrics {
    /// Mean squared complex error `mean |x - x_hat|^2`.
    pub mse: f64,
    /// `10 log10(peak^2 / mse)` with peak the reference's maximum amplitude,
    /// clamped to 99 dB for (near-)exact reconstructions.
    pub psnr: f64,
    /// Amplitude-plane SSIM averaged over channels, in [-1, 1].
    pub ssim: f64,
}

fn check_shapes(op: &'static str, x: &ComplexRaster, y: &ComplexRaster) -> Result<()> {
    if x.height != y.height || x.width != y.width || x.channels != y.channels {
        return Err(CxError::contract(
            op,
            format!(
                "shape mismatch: {}x{}x{} vs {}x{}x{}",
                x.height, x.width, x.channels, y.height, y.width, y.channels
            ),
        ));
    }
    Ok(())
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - mid;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.map(|v| v / sum)
}

/// Separable weighted convolution, valid positions only.
fn conv_valid(src: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h - (SSIM_WINDOW - 1), w - (SSIM_WINDOW - 1));
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = k
                .iter()
                .enumerate()
                .map(|(i, &kv)| kv * src[r * w + c + i])
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = k
                .iter()
                .enumerate()
                .map(|(i, &kv)| kv * rows[(r + i) * ow + c])
                .sum();
        }
    }
    out
}

fn ssim_channel(ax: &[f64], ay: &[f64], h: usize, w: usize, c1: f64, c2: f64) -> f64 {
    let k = gaussian_kernel();
    let prod: Vec<f64> = ax.iter().zip(ay).map(|(a, b)| a * b).collect();
    let sq = |v: &[f64]| -> Vec<f64> { v.iter().map(|a| a * a).collect() };
    let mu_x = conv_valid(ax, h, w, &k);
    let mu_y = conv_valid(ay, h, w, &k);
    let e_xx = conv_valid(&sq(ax), h, w, &k);
    let e_yy = conv_valid(&sq(ay), h, w, &k);
    let e_xy = conv_valid(&prod, h, w, &k);
    let mut acc = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = (e_xx[i] - mx * mx).max(0.0);
        let vy = (e_yy[i] - my * my).max(0.0);
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (vx + vy + c2);
        acc += num / den;
    }
    acc / mu_x.len() as f64
}

/// MSE, PSNR and SSIM of a reconstruction against its reference.
///
/// The reference raster defines the peak (its maximum amplitude), which
/// doubles as the SSIM dynamic range `L` with `C1 = (0.01 L)^2` and
/// `C2 = (0.03 L)^2` under an 11x11 Gaussian window of sigma 1.5, evaluated
/// at fully interior positions.
pub fn recon_metrics(x: &ComplexRaster, x_hat: &ComplexRaster) -> Result<ReconMetrics> {
    const OP: &str = "recon_metrics";
    check_shapes(OP, x, x_hat)?;
    if x.height < SSIM_WINDOW || x.width < SSIM_WINDOW {
        return Err(CxError::contract(
            OP,
            format!("raster {}x{} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window", x.height, x.width),
        ));
    }
    let peak = x.max_amplitude();
    if peak <= 0.0 {
        return Err(CxError::numeric(OP, "reference raster has zero power"));
    }

    let n = x.data.len() as f64;
    let mse = x
        .data
        .iter()
        .zip(&x_hat.data)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n;
    let psnr = if mse < 1e-12 {
        PSNR_CLAMP_DB
    } else {
        10.0 * (peak * peak / mse).log10()
    };

    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let (h, w, ch) = (x.height, x.width, x.channels);
    let mut ssim = 0.0;
    for k in 0..ch {
        let plane = |r: &ComplexRaster| -> Vec<f64> {
            r.data.iter().skip(k).step_by(ch).map(|z| z.norm()).collect()
        };
        ssim += ssim_channel(&plane(x), &plane(x_hat), h, w, c1, c2);
    }
    ssim /= ch as f64;

    Ok(ReconMetrics { mse, psnr, ssim })
}

/// Fixed-width histogram over `[lo, hi]`; out-of-range samples are folded
/// into the boundary bins so the total count is conserved.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self { lo, hi, counts: vec![0; bins] }
    }

    fn add(&mut self, v: f64) {
        let bins = self.counts.len();
        let t = (v - self.lo) / (self.hi - self.lo) * bins as f64;
        let idx = (t as usize).min(bins - 1);
        self.counts[idx] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(left, right)` edges of bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let wbin = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + wbin * i as f64, self.lo + wbin * (i + 1) as f64)
    }
}

fn wrap_pi(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut x = a % TAU;
    if x > PI {
        x -= TAU;
    } else if x <= -PI {
        x += TAU;
    }
    x
}

/// Per-sample amplitude-error (`||x| - |x_hat||` over `[0, amp_max]`) and
/// wrapped phase-error (over `(-pi, pi]`) histograms.
pub fn error_histograms(
    x: &ComplexRaster,
    x_hat: &ComplexRaster,
    bins: usize,
    amp_max: f64,
) -> Result<(Histogram, Histogram)> {
    const OP: &str = "error_histograms";
    check_shapes(OP, x, x_hat)?;
    if bins == 0 || !amp_max.is_finite() || amp_max <= 0.0 {
        return Err(CxError::contract(OP, "need bins > 0 and a positive amplitude range"));
    }
    let mut amp = Histogram::new(0.0, amp_max, bins);
    let mut phase = Histogram::new(-std::f64::consts::PI, std::f64::consts::PI, bins);
    for (a, b) in x.data.iter().zip(&x_hat.data) {
        amp.add((a.norm() - b.norm()).abs());
        phase.add(wrap_pi(b.arg() - a.arg()));
    }
    Ok((amp, phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Dtype;
    use num_complex::Complex64;
    use rand::Rng;

    /// Raster whose components are multiples of 1/4, so small dyadic offsets
    /// add exactly.
    fn dyadic_raster(seed: u64, h: usize, w: usize, c: usize) -> ComplexRaster {
        let mut rng = crate::testkit::rng(seed);
        let mut r = ComplexRaster::zeros(h, w, c, Dtype::C128).unwrap();
        for z in &mut r.data {
            *z = Complex64::new(
                rng.gen_range(-8i32..=8) as f64 / 4.0,
                rng.gen_range(-8i32..=8) as f64 / 4.0,
            );
        }
        r
    }

    #[test]
    fn identical_rasters_score_perfectly() {
        let x = dyadic_raster(1, 14, 13, 3);
        let m = recon_metrics(&x, &x.clone()).unwrap();
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.psnr, 99.0);
        assert_eq!(m.ssim, 1.0);
    }

    #[test]
    fn uniform_imaginary_offset_gives_exact_mse() {
        let x = dyadic_raster(2, 16, 12, 3);
        let mut y = x.clone();
        for z in &mut y.data {
            z.im += 0.25;
        }
        let m = recon_metrics(&x, &y).unwrap();
        assert_eq!(m.mse, 0.0625);
        let peak = x.max_amplitude();
        let want = 10.0 * (peak * peak / 0.0625).log10();
        assert!((m.psnr - want).abs() < 1e-12);
    }

    #[test]
    fn psnr_decreases_as_mse_grows() {
        let x = dyadic_raster(3, 12, 12, 3);
        let mut last = f64::INFINITY;
        for &eps in &[0.25, 0.5, 1.0, 2.0] {
            let mut y = x.clone();
            for z in &mut y.data {
                z.re += eps;
            }
            let m = recon_metrics(&x, &y).unwrap();
            assert!(m.psnr < last, "psnr {} at eps {eps}", m.psnr);
            last = m.psnr;
        }
    }

    #[test]
    fn ssim_matches_a_direct_windowed_oracle() {
        let x = dyadic_raster(4, 20, 18, 3);
        let mut y = dyadic_raster(5, 20, 18, 3);
        // Correlate the pair so SSIM is not trivially near zero.
        for (a, b) in y.data.iter_mut().zip(&x.data) {
            *a = 0.7 * b + 0.3 * *a;
        }
        let m = recon_metrics(&x, &y).unwrap();
        assert!((-1.0..=1.0).contains(&m.ssim));

        // Direct 2D weighted-sum oracle over every interior position.
        let peak = x.max_amplitude();
        let (c1, c2) = ((0.01 * peak).powi(2), (0.03 * peak).powi(2));
        let k = gaussian_kernel();
        let (h, w, ch) = (20usize, 18usize, 3usize);
        let mut total = 0.0;
        for chan in 0..ch {
            let ax: Vec<f64> = x.data.iter().skip(chan).step_by(ch).map(|z| z.norm()).collect();
            let ay: Vec<f64> = y.data.iter().skip(chan).step_by(ch).map(|z| z.norm()).collect();
            let mut acc = 0.0;
            let mut count = 0usize;
            for r0 in 0..h - 10 {
                for c0 in 0..w - 10 {
                    let (mut mx, mut my, mut exx, mut eyy, mut exy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for i in 0..11 {
                        for j in 0..11 {
                            let wgt = k[i] * k[j];
                            let a = ax[(r0 + i) * w + c0 + j];
                            let b = ay[(r0 + i) * w + c0 + j];
                            mx += wgt * a;
                            my += wgt * b;
                            exx += wgt * a * a;
                            eyy += wgt * b * b;
                            exy += wgt * a * b;
                        }
                    }
                    let (vx, vy, cov) = (exx - mx * mx, eyy - my * my, exy - mx * my);
                    acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                        / ((mx * mx + my * my + c1) * (vx.max(0.0) + vy.max(0.0) + c2));
                    count += 1;
                }
            }
            total += acc / count as f64;
        }
        let oracle = total / ch as f64;
        assert!((m.ssim - oracle).abs() < 1e-6, "ssim {} vs oracle {oracle}", m.ssim);
    }

    #[test]
    fn undersized_rasters_are_rejected() {
        let x = dyadic_raster(6, 8, 8, 3);
        assert!(recon_metrics(&x, &x.clone()).is_err());
        let y = dyadic_raster(7, 14, 14, 3);
        assert!(recon_metrics(&dyadic_raster(8, 14, 13, 3), &y).is_err());
    }

    #[test]
    fn identical_rasters_put_all_histogram_mass_at_zero() {
        let x = dyadic_raster(9, 10, 10, 3);
        let (amp, phase) = error_histograms(&x, &x.clone(), 16, 1.0).unwrap();
        assert_eq!(amp.counts[0], 300);
        assert_eq!(amp.total(), 300);
        // Zero phase error falls in the first bin right of -pi..: bin holding 0.
        let zero_bin = phase
            .counts
            .iter()
            .enumerate()
            .max_by_key(|(_, &c)| c)
            .unwrap()
            .0;
        assert_eq!(phase.counts[zero_bin], 300);
        let (l, r) = phase.edges(zero_bin);
        assert!(l <= 0.0 && 0.0 < r);
    }

    #[test]
    fn phase_flip_lands_in_the_positive_pi_bin() {
        // Positive-real pixels make the flipped argument exactly -pi, which
        // must wrap onto +pi and land in the closing bin.
        let mut x = ComplexRaster::zeros(9, 9, 3, Dtype::C128).unwrap();
        for (i, z) in x.data.iter_mut().enumerate() {
            *z = Complex64::new(0.25 + (i % 7) as f64, 0.0);
        }
        let mut y = x.clone();
        for z in &mut y.data {
            *z = -*z;
        }
        let (_, phase) = error_histograms(&x, &y, 12, 1.0).unwrap();
        assert_eq!(*phase.counts.last().unwrap(), 9 * 9 * 3);

        // Generic pixels: rounding may land an ulp either side of the wrap,
        // so the mass splits between the two boundary bins only.
        let g = dyadic_raster(10, 9, 9, 3);
        let mut gy = g.clone();
        for z in &mut gy.data {
            *z = -*z;
        }
        let (_, gp) = error_histograms(&g, &gy, 12, 1.0).unwrap();
        assert_eq!(gp.counts[0] + gp.counts.last().unwrap(), 9 * 9 * 3);
    }

    #[test]
    fn histogram_mass_is_conserved_for_any_input() {
        let x = dyadic_raster(11, 7, 11, 4);
        let mut y = dyadic_raster(12, 7, 11, 4);
        for z in &mut y.data {
            *z *= 40.0; // push amplitude errors far past the range
        }
        let (amp, phase) = error_histograms(&x, &y, 5, 0.5).unwrap();
        assert_eq!(amp.total(), 7 * 11 * 4);
        assert_eq!(phase.total(), 7 * 11 * 4);
        assert!(*amp.counts.last().unwrap() > 0);
    }
}
