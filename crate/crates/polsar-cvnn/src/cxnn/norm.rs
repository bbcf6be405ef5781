//! Complex batch normalization by 2x2 whitening.
//!
//! Each channel's (Re, Im) pairs are centered and multiplied by the inverse
//! square root of their regularized 2x2 covariance, scaled so the whitened
//! batch satisfies `E[z z*] = 1` and `E[z z^T] = 0` (covariance diag(1/2,1/2)).
//! A learnable real 2x2 matrix Gamma and complex shift beta follow. Running
//! statistics maintained by exponential moving average serve eval mode. The
//! real twin degenerates to ordinary batch normalization.

use crate::cxcore::{CTensor, CxError, Real, Result};
use crate::cxnn::init::{const_param, zero_param};

/// Covariance regularizer added to both diagonal entries.
pub const BN_EPS: f64 = 1e-5;
/// Running-statistic update weight.
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Clone)]
pub struct BatchNorm<T: Real> {
    /// Gamma entries, row-major; real mode uses `g00` as its gain.
    pub g00: CTensor<T>,
    pub g01: Option<CTensor<T>>,
    pub g10: Option<CTensor<T>>,
    pub g11: Option<CTensor<T>>,
    pub beta: CTensor<T>,
    run_mean_re: Vec<T>,
    run_mean_im: Vec<T>,
    run_vrr: Vec<T>,
    run_vri: Vec<T>,
    run_vii: Vec<T>,
    pub momentum: f64,
    pub eps: f64,
    pub real_mode: bool,
    channels: usize,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(channels: usize, real_mode: bool) -> Self {
        let inv_sqrt2 = 0.5f64.sqrt();
        let gain = if real_mode { 1.0 } else { inv_sqrt2 };
        let half = T::from_f64(0.5);
        BatchNorm {
            g00: const_param(&[channels], gain),
            g01: (!real_mode).then(|| zero_param(&[channels])),
            g10: (!real_mode).then(|| zero_param(&[channels])),
            g11: (!real_mode).then(|| const_param(&[channels], inv_sqrt2)),
            beta: zero_param(&[channels]),
            run_mean_re: vec![T::zero(); channels],
            run_mean_im: vec![T::zero(); channels],
            run_vrr: vec![if real_mode { T::one() } else { half }; channels],
            run_vri: vec![T::zero(); channels],
            run_vii: vec![half; channels],
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
            real_mode,
            channels,
        }
    }

    fn reduce_axes(rank: usize) -> Vec<usize> {
        (0..rank).filter(|d| *d != 1).collect()
    }

    fn param_shape(&self, rank: usize) -> Vec<usize> {
        let mut s = vec![1; rank];
        s[1] = self.channels;
        s
    }

    /// Non-trainable per-channel constant broadcast against the input rank.
    fn chan_const(&self, rank: usize, re: Vec<T>, im: Vec<T>) -> CTensor<T> {
        CTensor::from_parts(&self.param_shape(rank), re, im).expect("channel extent")
    }

    fn check_input(&self, op: &'static str, x: &CTensor<T>) -> Result<(usize, usize)> {
        let sh = x.shape();
        if sh.len() < 2 || sh[1] != self.channels {
            return Err(CxError::shape(
                op,
                format!("expected channel extent {} at axis 1, got {:?}", self.channels, sh),
            ));
        }
        let n: usize = Self::reduce_axes(sh.len()).iter().map(|&d| sh[d]).product();
        Ok((sh.len(), n))
    }

    pub fn forward(&mut self, x: &CTensor<T>, train: bool) -> Result<CTensor<T>> {
        if self.real_mode {
            self.forward_real(x, train)
        } else {
            self.forward_complex(x, train)
        }
    }

    fn forward_complex(&mut self, x: &CTensor<T>, train: bool) -> Result<CTensor<T>> {
        let (rank, n) = self.check_input("cbatchnorm", x)?;
        let (yre, yim) = if train {
            if n < 2 {
                return Err(CxError::contract(
                    "cbatchnorm",
                    "train mode needs at least 2 samples per channel",
                ));
            }
            let reduce = Self::reduce_axes(rank);
            let mu = x.mean_axes(&reduce)?;
            let xc = x.sub(&mu)?;
            let xr = xc.re_part();
            let xi = xc.im_part();
            let vrr = xr.mul(&xr)?.mean_axes(&reduce)?;
            let vri = xr.mul(&xi)?.mean_axes(&reduce)?;
            let vii = xi.mul(&xi)?.mean_axes(&reduce)?;
            self.update_running(&mu, &vrr, &vri, &vii);
            let eps = CTensor::from_parts(&[1], vec![T::from_f64(self.eps)], vec![T::zero()])?;
            let a = vrr.add(&eps)?;
            let c = vii.add(&eps)?;
            // (2M)^{-1/2} for M = [[a,b],[b,c]]: s = sqrt(det), t = sqrt(tr + 2s),
            // M^{-1/2} = [[c+s, -b],[-b, a+s]] / (s t).
            let s = a.mul(&c)?.sub(&vri.mul(&vri)?)?.sqrt_re();
            let t = a.add(&c)?.add(&s.scale(T::from_f64(2.0)))?.sqrt_re();
            let d = s.mul(&t)?;
            let inv_sqrt2 = T::from_f64(0.5f64.sqrt());
            let wrr = c.add(&s)?.div(&d)?.scale(inv_sqrt2);
            let wri = vri.div(&d)?.scale(-inv_sqrt2);
            let wii = a.add(&s)?.div(&d)?.scale(inv_sqrt2);
            let yre = wrr.mul(&xr)?.add(&wri.mul(&xi)?)?;
            let yim = wri.mul(&xr)?.add(&wii.mul(&xi)?)?;
            (yre, yim)
        } else {
            let (wrr, wri, wii) = self.eval_whitener();
            let mu = self.chan_const(rank, self.run_mean_re.clone(), self.run_mean_im.clone());
            let xc = x.sub(&mu)?;
            let xr = xc.re_part();
            let xi = xc.im_part();
            let wrr = self.chan_const(rank, wrr, vec![T::zero(); self.channels]);
            let wri = self.chan_const(rank, wri, vec![T::zero(); self.channels]);
            let wii = self.chan_const(rank, wii, vec![T::zero(); self.channels]);
            let yre = wrr.mul(&xr)?.add(&wri.mul(&xi)?)?;
            let yim = wri.mul(&xr)?.add(&wii.mul(&xi)?)?;
            (yre, yim)
        };
        let shape = self.param_shape(rank);
        let g00 = self.g00.re_part().reshape(&shape)?;
        let g01 = self.g01.as_ref().expect("complex mode").re_part().reshape(&shape)?;
        let g10 = self.g10.as_ref().expect("complex mode").re_part().reshape(&shape)?;
        let g11 = self.g11.as_ref().expect("complex mode").re_part().reshape(&shape)?;
        let fre = g00.mul(&yre)?.add(&g01.mul(&yim)?)?;
        let fim = g10.mul(&yre)?.add(&g11.mul(&yim)?)?;
        CTensor::compose(&fre, &fim)?.add(&self.beta.reshape(&shape)?)
    }

    fn forward_real(&mut self, x: &CTensor<T>, train: bool) -> Result<CTensor<T>> {
        let (rank, n) = self.check_input("batchnorm", x)?;
        let xt = if train {
            if n < 2 {
                return Err(CxError::contract(
                    "batchnorm",
                    "train mode needs at least 2 samples per channel",
                ));
            }
            let reduce = Self::reduce_axes(rank);
            let mu = x.mean_axes(&reduce)?;
            let xc = x.sub(&mu)?;
            let v = xc.mul(&xc)?.mean_axes(&reduce)?;
            let m = T::from_f64(self.momentum);
            let keep = T::one() - m;
            for c in 0..self.channels {
                self.run_mean_re[c] = keep * self.run_mean_re[c] + m * mu.re()[c];
                self.run_vrr[c] = keep * self.run_vrr[c] + m * v.re()[c];
            }
            let eps = CTensor::from_parts(&[1], vec![T::from_f64(self.eps)], vec![T::zero()])?;
            xc.div(&v.add(&eps)?.sqrt_re())?
        } else {
            let mu = self.chan_const(rank, self.run_mean_re.clone(), vec![T::zero(); self.channels]);
            let denom: Vec<T> =
                self.run_vrr.iter().map(|&v| (v + T::from_f64(self.eps)).sqrt()).collect();
            let denom = self.chan_const(rank, denom, vec![T::zero(); self.channels]);
            x.sub(&mu)?.div(&denom)?
        };
        let shape = self.param_shape(rank);
        let gamma = self.g00.re_part().reshape(&shape)?;
        let beta = self.beta.re_part().reshape(&shape)?;
        xt.mul(&gamma)?.add(&beta)
    }

    /// Blends the batch statistics into the running buffers.
    fn update_running(&mut self, mu: &CTensor<T>, vrr: &CTensor<T>, vri: &CTensor<T>, vii: &CTensor<T>) {
        let m = T::from_f64(self.momentum);
        let keep = T::one() - m;
        for c in 0..self.channels {
            self.run_mean_re[c] = keep * self.run_mean_re[c] + m * mu.re()[c];
            self.run_mean_im[c] = keep * self.run_mean_im[c] + m * mu.im()[c];
            self.run_vrr[c] = keep * self.run_vrr[c] + m * vrr.re()[c];
            self.run_vri[c] = keep * self.run_vri[c] + m * vri.re()[c];
            self.run_vii[c] = keep * self.run_vii[c] + m * vii.re()[c];
        }
    }

    /// Per-channel whitening weights from the running covariance.
    fn eval_whitener(&self) -> (Vec<T>, Vec<T>, Vec<T>) {
        let eps = T::from_f64(self.eps);
        let inv_sqrt2 = T::from_f64(0.5f64.sqrt());
        let mut wrr = Vec::with_capacity(self.channels);
        let mut wri = Vec::with_capacity(self.channels);
        let mut wii = Vec::with_capacity(self.channels);
        for c in 0..self.channels {
            let a = self.run_vrr[c] + eps;
            let b = self.run_vri[c];
            let cc = self.run_vii[c] + eps;
            let s = (a * cc - b * b).sqrt();
            let t = (a + cc + T::from_f64(2.0) * s).sqrt();
            let d = T::one() / (s * t);
            wrr.push((cc + s) * d * inv_sqrt2);
            wri.push(-b * d * inv_sqrt2);
            wii.push((a + s) * d * inv_sqrt2);
        }
        (wrr, wri, wii)
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &CTensor<T>, bool)) {
        f(format!("{prefix}.g00"), &self.g00, true);
        if let (Some(g01), Some(g10), Some(g11)) = (&self.g01, &self.g10, &self.g11) {
            f(format!("{prefix}.g01"), g01, true);
            f(format!("{prefix}.g10"), g10, true);
            f(format!("{prefix}.g11"), g11, true);
        }
        f(format!("{prefix}.beta"), &self.beta, self.real_mode);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut CTensor<T>, bool)) {
        f(format!("{prefix}.g00"), &mut self.g00, true);
        if let Some(g01) = &mut self.g01 {
            f(format!("{prefix}.g01"), g01, true);
        }
        if let Some(g10) = &mut self.g10 {
            f(format!("{prefix}.g10"), g10, true);
        }
        if let Some(g11) = &mut self.g11 {
            f(format!("{prefix}.g11"), g11, true);
        }
        f(format!("{prefix}.beta"), &mut self.beta, self.real_mode);
    }

    pub fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(String, &Vec<T>)) {
        f(format!("{prefix}.run_mean_re"), &self.run_mean_re);
        f(format!("{prefix}.run_mean_im"), &self.run_mean_im);
        f(format!("{prefix}.run_vrr"), &self.run_vrr);
        f(format!("{prefix}.run_vri"), &self.run_vri);
        f(format!("{prefix}.run_vii"), &self.run_vii);
    }

    pub fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Vec<T>)) {
        f(format!("{prefix}.run_mean_re"), &mut self.run_mean_re);
        f(format!("{prefix}.run_mean_im"), &mut self.run_mean_im);
        f(format!("{prefix}.run_vrr"), &mut self.run_vrr);
        f(format!("{prefix}.run_vri"), &mut self.run_vri);
        f(format!("{prefix}.run_vii"), &mut self.run_vii);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn two_point_batch_lands_on_the_unit_diagonal() {
        // {1+j, -1-j} has a rank-one covariance; the regularizer keeps the
        // whitening finite and the outputs converge to (1+j)/2 before Gamma.
        let mut bn = BatchNorm::<f64>::new(1, false);
        let x = CTensor::from_parts(&[2, 1], vec![1.0, -1.0], vec![1.0, -1.0]).unwrap();
        let y = bn.forward(&x, true).unwrap();
        let expect = 0.5 * 0.5f64.sqrt(); // (1/2) scaled by the Gamma init 1/sqrt(2)
        assert!((y.re()[0] - expect).abs() < 1e-3, "re {}", y.re()[0]);
        assert!((y.im()[0] - expect).abs() < 1e-3);
        assert!((y.re()[1] + expect).abs() < 1e-3);
        assert!((y.re()[0] + y.re()[1]).abs() < 1e-12, "centered");
    }

    #[test]
    fn whitening_decorrelates_a_noncircular_batch() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let n = 4096;
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen::<f64>() - 0.5;
            let v: f64 = rng.gen::<f64>() - 0.5;
            re.push(3.0 * u + 0.4);
            im.push(1.2 * u + 0.8 * v - 0.9);
        }
        let x = CTensor::from_parts(&[n, 1], re, im).unwrap();
        let mut bn = BatchNorm::<f64>::new(1, false);
        bn.g00 = const_param(&[1], 1.0);
        bn.g11 = Some(const_param(&[1], 1.0));
        let y = bn.forward(&x, true).unwrap();
        let (mut mr, mut mi, mut vrr, mut vri, mut vii) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..n {
            mr += y.re()[k];
            mi += y.im()[k];
            vrr += y.re()[k] * y.re()[k];
            vri += y.re()[k] * y.im()[k];
            vii += y.im()[k] * y.im()[k];
        }
        let nf = n as f64;
        assert!((mr / nf).abs() < 1e-10 && (mi / nf).abs() < 1e-10);
        assert!((vrr / nf - 0.5).abs() < 1e-2, "Vrr {}", vrr / nf);
        assert!((vri / nf).abs() < 1e-2, "Vri {}", vri / nf);
        assert!((vii / nf - 0.5).abs() < 1e-2, "Vii {}", vii / nf);
    }

    #[test]
    fn eval_mode_reproduces_train_output_once_stats_have_settled() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let n = 64;
        let re: Vec<f64> = (0..n * 3).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let im: Vec<f64> = (0..n * 3).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let x = CTensor::from_parts(&[n, 3], re, im).unwrap();
        let mut bn = BatchNorm::<f64>::new(3, false);
        bn.momentum = 1.0; // running stats become the batch stats exactly
        let yt = bn.forward(&x, true).unwrap();
        let ye = bn.forward(&x, false).unwrap();
        for k in 0..n * 3 {
            assert!((yt.re()[k] - ye.re()[k]).abs() < 1e-10);
            assert!((yt.im()[k] - ye.im()[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn real_mode_standardizes_each_channel() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let n = 512;
        let re: Vec<f64> = (0..n * 2).map(|_| rng.gen::<f64>() * 4.0 + 1.5).collect();
        let x = CTensor::from_parts(&[n, 2], re, vec![0.0; n * 2]).unwrap();
        let mut bn = BatchNorm::<f64>::new(2, true);
        let y = bn.forward(&x, true).unwrap();
        for c in 0..2 {
            let vals: Vec<f64> = (0..n).map(|k| y.re()[k * 2 + c]).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-3, "var {var}");
            assert!(y.im().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn single_sample_train_batch_is_rejected() {
        let mut bn = BatchNorm::<f64>::new(2, false);
        let x = CTensor::from_parts(&[1, 2], vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert!(bn.forward(&x, true).is_err());
    }
}
