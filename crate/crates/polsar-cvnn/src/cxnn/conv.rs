//! Complex 2-D cross-correlation via im2col and gemm.
//!
//! `out(i,j) = sum_{p,q} z(i*s+p, j*s+q) * F(p,q)` summed over input channels;
//! stride 2 realizes downsampling fused with filtering. The patch matrix is
//! lowered once per call so the convolution itself is a single complex gemm.

use rand::Rng;

use crate::cxcore::{make_op_output, CTensor, CxError, Real, Result};
use crate::cxnn::init::{init_param, zero_param, Init};

/// Spatial output extent for one axis.
pub(crate) fn conv_out_extent(input: usize, k: usize, stride: usize, pad: usize) -> Result<usize> {
    if k == 0 || stride == 0 {
        return Err(CxError::contract("conv2d", "kernel and stride must be positive"));
    }
    if input + 2 * pad < k {
        return Err(CxError::shape(
            "conv2d",
            format!("kernel {k} exceeds padded extent {}", input + 2 * pad),
        ));
    }
    Ok((input + 2 * pad - k) / stride + 1)
}

/// Lowers `[B,C,H,W]` into the patch matrix `[C*kh*kw, B*Ho*Wo]`; the adjoint
/// scatters gradients back with overlap accumulation.
fn im2col<T: Real>(
    x: &CTensor<T>,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> Result<CTensor<T>> {
    let sh = x.shape();
    let (b_n, c_n, h, w) = (sh[0], sh[1], sh[2], sh[3]);
    let ho = conv_out_extent(h, kh, stride, pad)?;
    let wo = conv_out_extent(w, kw, stride, pad)?;
    let rows = c_n * kh * kw;
    let cols = b_n * ho * wo;
    let mut re = vec![T::zero(); rows * cols];
    let mut im = vec![T::zero(); rows * cols];
    let (xre, xim) = (x.re(), x.im());
    for c in 0..c_n {
        for dy in 0..kh {
            for dx in 0..kw {
                let row_off = ((c * kh + dy) * kw + dx) * cols;
                for b in 0..b_n {
                    let plane = (b * c_n + c) * h * w;
                    for oy in 0..ho {
                        let iy = (oy * stride + dy) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let src_row = plane + iy as usize * w;
                        let dst_row = row_off + (b * ho + oy) * wo;
                        for ox in 0..wo {
                            let ix = (ox * stride + dx) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            re[dst_row + ox] = xre[src_row + ix as usize];
                            im[dst_row + ox] = xim[src_row + ix as usize];
                        }
                    }
                }
            }
        }
    }
    let p = x.clone();
    Ok(make_op_output(vec![rows, cols], re, im, "im2col", vec![x.clone()], move || {
        Box::new(move |g| {
            let mut gre = vec![T::zero(); b_n * c_n * h * w];
            let mut gim = vec![T::zero(); b_n * c_n * h * w];
            for c in 0..c_n {
                for dy in 0..kh {
                    for dx in 0..kw {
                        let row_off = ((c * kh + dy) * kw + dx) * cols;
                        for b in 0..b_n {
                            let plane = (b * c_n + c) * h * w;
                            for oy in 0..ho {
                                let iy = (oy * stride + dy) as isize - pad as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let src_row = plane + iy as usize * w;
                                let dst_row = row_off + (b * ho + oy) * wo;
                                for ox in 0..wo {
                                    let ix = (ox * stride + dx) as isize - pad as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    gre[src_row + ix as usize] =
                                        gre[src_row + ix as usize] + g.re[dst_row + ox];
                                    gim[src_row + ix as usize] =
                                        gim[src_row + ix as usize] + g.im[dst_row + ox];
                                }
                            }
                        }
                    }
                }
            }
            p.accumulate_grad(&gre, &gim);
        })
    }))
}

/// Swaps the two leading axes: `[A,B,rest..] -> [B,A,rest..]`.
pub(crate) fn swap01<T: Real>(x: &CTensor<T>) -> Result<CTensor<T>> {
    let sh = x.shape();
    if sh.len() < 2 {
        return Err(CxError::shape("swap01", format!("rank >= 2 required, got {:?}", sh)));
    }
    let (a_n, b_n) = (sh[0], sh[1]);
    let rest: usize = sh[2..].iter().product();
    let mut out_shape = sh.to_vec();
    out_shape.swap(0, 1);
    let mut re = vec![T::zero(); x.len()];
    let mut im = vec![T::zero(); x.len()];
    for a in 0..a_n {
        for b in 0..b_n {
            let src = (a * b_n + b) * rest;
            let dst = (b * a_n + a) * rest;
            re[dst..dst + rest].copy_from_slice(&x.re()[src..src + rest]);
            im[dst..dst + rest].copy_from_slice(&x.im()[src..src + rest]);
        }
    }
    let p = x.clone();
    Ok(make_op_output(out_shape, re, im, "swap01", vec![x.clone()], move || {
        Box::new(move |g| {
            let n = a_n * b_n * rest;
            let mut gre = vec![T::zero(); n];
            let mut gim = vec![T::zero(); n];
            for b in 0..b_n {
                for a in 0..a_n {
                    let src = (b * a_n + a) * rest;
                    let dst = (a * b_n + b) * rest;
                    gre[dst..dst + rest].copy_from_slice(&g.re[src..src + rest]);
                    gim[dst..dst + rest].copy_from_slice(&g.im[src..src + rest]);
                }
            }
            p.accumulate_grad(&gre, &gim);
        })
    }))
}

/// Complex cross-correlation of `x: [B,C,H,W]` with `w: [Co,C,kh,kw]`.
pub fn conv2d<T: Real>(
    x: &CTensor<T>,
    w: &CTensor<T>,
    bias: Option<&CTensor<T>>,
    stride: usize,
    pad: usize,
) -> Result<CTensor<T>> {
    let (xs, ws) = (x.shape(), w.shape());
    if xs.len() != 4 || ws.len() != 4 {
        return Err(CxError::shape(
            "conv2d",
            format!("rank-4 input and weight required, got {:?} and {:?}", xs, ws),
        ));
    }
    if xs[1] != ws[1] {
        return Err(CxError::shape(
            "conv2d",
            format!("input channels {} != weight channels {}", xs[1], ws[1]),
        ));
    }
    let (b_n, co) = (xs[0], ws[0]);
    let (kh, kw) = (ws[2], ws[3]);
    let ho = conv_out_extent(xs[2], kh, stride, pad)?;
    let wo = conv_out_extent(xs[3], kw, stride, pad)?;

    let col = im2col(x, kh, kw, stride, pad)?;
    let wm = w.reshape(&[co, ws[1] * kh * kw])?;
    let out = wm.matmul(&col)?; // [Co, B*Ho*Wo]
    let out = swap01(&out.reshape(&[co, b_n, ho * wo])?)?.reshape(&[b_n, co, ho, wo])?;
    match bias {
        Some(b) => out.add(&b.reshape(&[1, co, 1, 1])?),
        None => Ok(out),
    }
}

/// Convolution layer owning its filter bank and bias.
#[derive(Clone)]
pub struct Conv2d<T: Real> {
    pub w: CTensor<T>,
    pub b: CTensor<T>,
    pub stride: usize,
    pub pad: usize,
    /// Parameters live on the real plane only (real-valued twin).
    pub real: bool,
}

impl<T: Real> Conv2d<T> {
    pub fn new(
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        init: Init,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let fan_in = cin * k * k;
        let fan_out = cout * k * k;
        Ok(Conv2d {
            w: init_param(&[cout, cin, k, k], init, fan_in, fan_out, rng)?,
            b: zero_param(&[cout]),
            stride,
            pad,
            real: init.is_real(),
        })
    }

    pub fn forward(&self, x: &CTensor<T>) -> Result<CTensor<T>> {
        conv2d(x, &self.w, Some(&self.b), self.stride, self.pad)
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &CTensor<T>, bool)) {
        f(format!("{prefix}.w"), &self.w, self.real);
        f(format!("{prefix}.b"), &self.b, self.real);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut CTensor<T>, bool)) {
        f(format!("{prefix}.w"), &mut self.w, self.real);
        f(format!("{prefix}.b"), &mut self.b, self.real);
    }
}
