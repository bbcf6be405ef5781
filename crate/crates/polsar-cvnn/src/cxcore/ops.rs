//! Tensor operations and their reverse-mode rules.
//!
//! With `g = dL/dx + j*dL/dy` on the output, a holomorphic map `w = f(z)`
//! propagates `g_z = g * conj(f'(z))`; real-valued outputs propagate
//! `g_z = Re(g) * (df/dx + j*df/dy)`. Non-holomorphic maps combine both
//! Wirtinger terms: `g_z = conj(g)*dw/d(conj z) + g*conj(dw/dz)`.

use num_complex::Complex;

use super::error::{CxError, Result};
use super::gemm::{gemm_nn, gemm_nt, gemm_tn};
use super::real::Real;
use super::tensor::{make_op_output, numel, CTensor, GradBuf};

/// True when every element vanishes; used to skip gemms on empty planes.
pub(crate) fn all_zero<T: Real>(v: &[T]) -> bool {
    v.iter().all(|x| *x == T::zero())
}

// ---------------------------------------------------------------------------
// broadcasting machinery
// ---------------------------------------------------------------------------

/// Left-pads `shape` with singleton extents up to `rank`.
fn pad_shape(shape: &[usize], rank: usize) -> Vec<usize> {
    let mut s = vec![1; rank - shape.len()];
    s.extend_from_slice(shape);
    s
}

/// Broadcast result shape; extents must match or be 1.
pub(crate) fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let (pa, pb) = (pad_shape(a, rank), pad_shape(b, rank));
    let mut out = Vec::with_capacity(rank);
    for d in 0..rank {
        let (x, y) = (pa[d], pb[d]);
        if x == y || x == 1 || y == 1 {
            out.push(x.max(y));
        } else {
            return Err(CxError::shape(op, format!("cannot broadcast {:?} with {:?}", a, b)));
        }
    }
    Ok(out)
}

/// Row-major strides with 0 on broadcast (singleton) axes.
fn bcast_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let padded = pad_shape(shape, out.len());
    let mut strides = vec![0usize; out.len()];
    let mut acc = 1usize;
    for d in (0..padded.len()).rev() {
        if padded[d] != 1 {
            strides[d] = acc;
        }
        acc *= padded[d];
    }
    strides
}

/// Odometer walk over `out_shape`, yielding flat indices into both operands.
fn for_each_bcast2(out_shape: &[usize], sa: &[usize], sb: &[usize], mut f: impl FnMut(usize, usize, usize)) {
    let n = numel(out_shape);
    if n == 0 {
        return;
    }
    let rank = out_shape.len();
    if rank == 0 {
        f(0, 0, 0);
        return;
    }
    let mut coords = vec![0usize; rank];
    let (mut ai, mut bi) = (0usize, 0usize);
    for oi in 0..n {
        f(oi, ai, bi);
        // increment odometer from the last axis
        for d in (0..rank).rev() {
            coords[d] += 1;
            ai += sa[d];
            bi += sb[d];
            if coords[d] < out_shape[d] {
                break;
            }
            coords[d] = 0;
            ai -= sa[d] * out_shape[d];
            bi -= sb[d] * out_shape[d];
        }
    }
}

/// Sums `g` (shaped `from`) into a buffer shaped `to` (broadcast-reduced).
pub(crate) fn reduce_grad_to<T: Real>(gre: &[T], gim: &[T], from: &[usize], to: &[usize]) -> (Vec<T>, Vec<T>) {
    let n_to = numel(to);
    let mut out_re = vec![T::zero(); n_to];
    let mut out_im = vec![T::zero(); n_to];
    let st = bcast_strides(to, from);
    let zero = vec![0usize; from.len()];
    for_each_bcast2(from, &st, &zero, |fi, ti, _| {
        out_re[ti] = out_re[ti] + gre[fi];
        out_im[ti] = out_im[ti] + gim[fi];
    });
    (out_re, out_im)
}

// ---------------------------------------------------------------------------
// binary elementwise ops
// ---------------------------------------------------------------------------

enum BinKind {
    Add,
    Sub,
    Mul,
    Div,
}

fn binary<T: Real>(op: &'static str, kind: BinKind, a: &CTensor<T>, b: &CTensor<T>) -> Result<CTensor<T>> {
    let out_shape = broadcast_shape(op, a.shape(), b.shape())?;
    let n = numel(&out_shape);
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    let (ar, ai, br, bi) = (a.re(), a.im(), b.re(), b.im());

    let same = a.shape() == out_shape.as_slice() && b.shape() == out_shape.as_slice();
    let apply = |oi: usize, aj: usize, bj: usize, re: &mut [T], im: &mut [T]| match kind {
        BinKind::Add => {
            re[oi] = ar[aj] + br[bj];
            im[oi] = ai[aj] + bi[bj];
        }
        BinKind::Sub => {
            re[oi] = ar[aj] - br[bj];
            im[oi] = ai[aj] - bi[bj];
        }
        BinKind::Mul => {
            re[oi] = ar[aj] * br[bj] - ai[aj] * bi[bj];
            im[oi] = ar[aj] * bi[bj] + ai[aj] * br[bj];
        }
        BinKind::Div => {
            let d = br[bj] * br[bj] + bi[bj] * bi[bj];
            re[oi] = (ar[aj] * br[bj] + ai[aj] * bi[bj]) / d;
            im[oi] = (ai[aj] * br[bj] - ar[aj] * bi[bj]) / d;
        }
    };
    if same {
        for i in 0..n {
            apply(i, i, i, &mut re, &mut im);
        }
    } else {
        let sa = bcast_strides(a.shape(), &out_shape);
        let sb = bcast_strides(b.shape(), &out_shape);
        for_each_bcast2(&out_shape, &sa, &sb, |oi, aj, bj| apply(oi, aj, bj, &mut re, &mut im));
    }

    let (pa, pb) = (a.clone(), b.clone());
    let shape = out_shape.clone();
    Ok(make_op_output(out_shape, re, im, op, vec![a.clone(), b.clone()], move || {
        Box::new(move |g: &GradBuf<T>| {
            let n = g.re.len();
            let (ar, ai, br, bi) = (pa.re(), pa.im(), pb.re(), pb.im());
            let sa = bcast_strides(pa.shape(), &shape);
            let sb = bcast_strides(pb.shape(), &shape);
            // per-parent contribution at output resolution, then reduced
            let mut gar = vec![T::zero(); n];
            let mut gai = vec![T::zero(); n];
            let mut gbr = vec![T::zero(); n];
            let mut gbi = vec![T::zero(); n];
            for_each_bcast2(&shape, &sa, &sb, |oi, aj, bj| {
                let (gr, gi) = (g.re[oi], g.im[oi]);
                match kind {
                    BinKind::Add => {
                        gar[oi] = gr;
                        gai[oi] = gi;
                        gbr[oi] = gr;
                        gbi[oi] = gi;
                    }
                    BinKind::Sub => {
                        gar[oi] = gr;
                        gai[oi] = gi;
                        gbr[oi] = -gr;
                        gbi[oi] = -gi;
                    }
                    BinKind::Mul => {
                        // g_a = g * conj(b); g_b = g * conj(a)
                        gar[oi] = gr * br[bj] + gi * bi[bj];
                        gai[oi] = gi * br[bj] - gr * bi[bj];
                        gbr[oi] = gr * ar[aj] + gi * ai[aj];
                        gbi[oi] = gi * ar[aj] - gr * ai[aj];
                    }
                    BinKind::Div => {
                        // w = a/b: g_a = g*conj(1/b); g_b = -g*conj(a/b^2)
                        let d = br[bj] * br[bj] + bi[bj] * bi[bj];
                        let (ibr, ibi) = (br[bj] / d, -bi[bj] / d); // 1/b
                        gar[oi] = gr * ibr + gi * ibi;
                        gai[oi] = gi * ibr - gr * ibi;
                        // a/b^2 = a * (1/b)^2
                        let sr = ibr * ibr - ibi * ibi;
                        let si = T::from_f64(2.0) * ibr * ibi;
                        let qr = ar[aj] * sr - ai[aj] * si;
                        let qi = ar[aj] * si + ai[aj] * sr;
                        gbr[oi] = -(gr * qr + gi * qi);
                        gbi[oi] = -(gi * qr - gr * qi);
                    }
                }
            });
            if pa.needs_grad() {
                let (r, i) = reduce_grad_to(&gar, &gai, &shape, pa.shape());
                pa.accumulate_grad(&r, &i);
            }
            if pb.needs_grad() {
                let (r, i) = reduce_grad_to(&gbr, &gbi, &shape, pb.shape());
                pb.accumulate_grad(&r, &i);
            }
        })
    }))
}

impl<T: Real> CTensor<T> {
    pub fn add(&self, other: &CTensor<T>) -> Result<CTensor<T>> {
        binary("add", BinKind::Add, self, other)
    }
    pub fn sub(&self, other: &CTensor<T>) -> Result<CTensor<T>> {
        binary("sub", BinKind::Sub, self, other)
    }
    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &CTensor<T>) -> Result<CTensor<T>> {
        binary("hadamard", BinKind::Mul, self, other)
    }
    pub fn div(&self, other: &CTensor<T>) -> Result<CTensor<T>> {
        binary("div", BinKind::Div, self, other)
    }
}

// ---------------------------------------------------------------------------
// unary elementwise ops
// ---------------------------------------------------------------------------

impl<T: Real> CTensor<T> {
    pub fn neg(&self) -> CTensor<T> {
        let re = self.re().iter().map(|&v| -v).collect();
        let im = self.im().iter().map(|&v| -v).collect();
        let p = self.clone();
        make_op_output(self.shape().to_vec(), re, im, "neg", vec![self.clone()], move || {
            Box::new(move |g| {
                let r: Vec<T> = g.re.iter().map(|&v| -v).collect();
                let i: Vec<T> = g.im.iter().map(|&v| -v).collect();
                p.accumulate_grad(&r, &i);
            })
        })
    }

    /// Multiplication by a real constant.
    pub fn scale(&self, c: T) -> CTensor<T> {
        let re = self.re().iter().map(|&v| v * c).collect();
        let im = self.im().iter().map(|&v| v * c).collect();
        let p = self.clone();
        make_op_output(self.shape().to_vec(), re, im, "scale", vec![self.clone()], move || {
            Box::new(move |g| {
                let r: Vec<T> = g.re.iter().map(|&v| v * c).collect();
                let i: Vec<T> = g.im.iter().map(|&v| v * c).collect();
                p.accumulate_grad(&r, &i);
            })
        })
    }

    /// Multiplication by a complex constant: `g_z = g * conj(c)`.
    pub fn scale_complex(&self, c: Complex<T>) -> CTensor<T> {
        let n = self.len();
        let mut re = vec![T::zero(); n];
        let mut im = vec![T::zero(); n];
        for i in 0..n {
            re[i] = self.re()[i] * c.re - self.im()[i] * c.im;
            im[i] = self.re()[i] * c.im + self.im()[i] * c.re;
        }
        let p = self.clone();
        make_op_output(self.shape().to_vec(), re, im, "scale_complex", vec![self.clone()], move || {
            Box::new(move |g| {
                let n = g.re.len();
                let mut r = vec![T::zero(); n];
                let mut i = vec![T::zero(); n];
                for k in 0..n {
                    r[k] = g.re[k] * c.re + g.im[k] * c.im;
                    i[k] = g.im[k] * c.re - g.re[k] * c.im;
                }
                p.accumulate_grad(&r, &i);
            })
        })
    }

    pub fn conj(&self) -> CTensor<T> {
        let re = self.re().to_vec();
        let im = self.im().iter().map(|&v| -v).collect();
        let p = self.clone();
        make_op_output(self.shape().to_vec(), re, im, "conj", vec![self.clone()], move || {
            Box::new(move |g| {
                let i: Vec<T> = g.im.iter().map(|&v| -v).collect();
                p.accumulate_grad(&g.re, &i);
            })
        })
    }

    pub fn exp(&self) -> CTensor<T> {
        let n = self.len();
        let mut re = vec![T::zero(); n];
        let mut im = vec![T::zero(); n];
        for i in 0..n {
            let m = self.re()[i].exp();
            re[i] = m * self.im()[i].cos();
            im[i] = m * self.im()[i].sin();
        }
        let p = self.clone();
        let (wre, wim) = (re.clone(), im.clone());
        make_op_output(self.shape().to_vec(), re, im, "exp", vec![self.clone()], move || {
            Box::new(move |g| {
                let n = g.re.len();
                let mut r = vec![T::zero(); n];
                let mut i = vec![T::zero(); n];
                for k in 0..n {
                    // g * conj(w)
                    r[k] = g.re[k] * wre[k] + g.im[k] * wim[k];
                    i[k] = g.im[k] * wre[k] - g.re[k] * wim[k];
                }
                p.accumulate_grad(&r, &i);
            })
        })
    }

    /// Modulus; real-valued output, gradient `Re(g) * z/|z|` (0 at the origin).
    pub fn abs(&self) -> CTensor<T> {
        let n = self.len();
        let re: Vec<T> = (0..n).map(|i| self.re()[i].hypot(self.im()[i])).collect();
        let im = vec![T::zero(); n];
        let p = self.clone();
        let mag = re.clone();
        make_op_output(self.shape().to_vec(), re, im, "abs", vec![self.clone()], move || {
            Box::new(move |g| {
                let n = g.re.len();
                let mut r = vec![T::zero(); n];
                let mut i = vec![T::zero(); n];
                for k in 0..n {
                    if mag[k] > T::zero() {
                        let s = g.re[k] / mag[k];
                        r[k] = s * p.re()[k];
                        i[k] = s * p.im()[k];
                    }
                }
                p.accumulate_grad(&r, &i);
            })
        })
    }

    /// Squared modulus; gradient `Re(g) * 2z`.
    pub fn abs_sq(&self) -> CTensor<T> {
        let n = self.len();
        let re: Vec<T> = (0..n)
            .map(|i| self.re()[i] * self.re()[i] + self.im()[i] * self.im()[i])
            .collect();
        let im = vec![T::zero(); n];
        let p = self.clone();
        make_op_output(self.shape().to_vec(), re, im, "abs_sq", vec![self.clone()], move || {
            Box::new(move |g| {
                let n = g.re.len();
                let two = T::from_f64(2.0);
                let mut r = vec![T::zero(); n];
                let mut i = vec![T::zero(); n];
                for k in 0..n {
                    let s = g.re[k] * two;
                    r[k] = s * p.re()[k];
                    i[k] = s * p.im()[k];
                }
                p.accumulate_grad(&r, &i);
            })
        })
    }

    /// Principal argument in (-pi, pi]; 0 at the origin by convention.
    pub fn angle(&self) -> CTensor<T> {
        let n = self.len();
        let re: Vec<T> = (0..n)
            .map(|i| {
                if self.re()[i] == T::zero() && self.im()[i] == T::zero() {
                    T::zero()
                } else {
                    self.im()[i].atan2(self.re()[i])
                }
            })
            .collect();
        let im = vec![T::zero(); n];
        let p = self.clone();
        make_op_output(self.shape().to_vec(), re, im, "angle", vec![self.clone()], move || {
            Box::new(move |g| {
                let n = g.re.len();
                let mut r = vec![T::zero(); n];
                let mut i = vec![T::zero(); n];
                for k in 0..n {
                    let (x, y) = (p.re()[k], p.im()[k]);
                    let d = x * x + y * y;
                    if d > T::zero() {
                        let s = g.re[k] / d;
                        r[k] = -s * y;
                        i[k] = s * x;
                    }
                }
                p.accumulate_grad(&r, &i);
            })
        })
    }

    /// Real part as a real-valued tensor.
    pub fn re_part(&self) -> CTensor<T> {
        let re = self.re().to_vec();
        let im = vec![T::zero(); self.len()];
        let p = self.clone();
        make_op_output(self.shape().to_vec(), re, im, "re_part", vec![self.clone()], move || {
            Box::new(move |g| {
                let zero = vec![T::zero(); g.re.len()];
                p.accumulate_grad(&g.re, &zero);
            })
        })
    }

    /// Imaginary part as a real-valued tensor.
    pub fn im_part(&self) -> CTensor<T> {
        let re = self.im().to_vec();
        let im = vec![T::zero(); self.len()];
        let p = self.clone();
        make_op_output(self.shape().to_vec(), re, im, "im_part", vec![self.clone()], move || {
            Box::new(move |g| {
                let zero = vec![T::zero(); g.re.len()];
                p.accumulate_grad(&zero, &g.re);
            })
        })
    }

    /// Recombines two real-valued tensors into `re(a) + j*re(b)`.
    pub fn compose(re_t: &CTensor<T>, im_t: &CTensor<T>) -> Result<CTensor<T>> {
        if re_t.shape() != im_t.shape() {
            return Err(CxError::shape(
                "compose",
                format!("{:?} vs {:?}", re_t.shape(), im_t.shape()),
            ));
        }
        let re = re_t.re().to_vec();
        let im = im_t.re().to_vec();
        let (pa, pb) = (re_t.clone(), im_t.clone());
        Ok(make_op_output(
            re_t.shape().to_vec(),
            re,
            im,
            "compose",
            vec![re_t.clone(), im_t.clone()],
            move || {
                Box::new(move |g| {
                    let zero = vec![T::zero(); g.re.len()];
                    if pa.needs_grad() {
                        pa.accumulate_grad(&g.re, &zero);
                    }
                    if pb.needs_grad() {
                        pb.accumulate_grad(&g.im, &zero);
                    }
                })
            },
        ))
    }

    /// Elementwise square root of a real-valued tensor. The imaginary plane
    /// is ignored (and must be numerically zero); the output is real-valued.
    pub fn sqrt_re(&self) -> CTensor<T> {
        debug_assert!(
            self.im().iter().all(|v| v.abs() <= T::from_f64(1e-3)),
            "sqrt_re expects a real-valued tensor"
        );
        let re: Vec<T> = self.re().iter().map(|&v| v.sqrt()).collect();
        let im = vec![T::zero(); self.len()];
        let p = self.clone();
        let w = re.clone();
        make_op_output(self.shape().to_vec(), re, im, "sqrt_re", vec![self.clone()], move || {
            Box::new(move |g| {
                let n = g.re.len();
                let half = T::from_f64(0.5);
                let mut r = vec![T::zero(); n];
                let zero = vec![T::zero(); n];
                for k in 0..n {
                    if w[k] > T::zero() {
                        r[k] = g.re[k] * half / w[k];
                    }
                }
                p.accumulate_grad(&r, &zero);
            })
        })
    }
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

impl<T: Real> CTensor<T> {
    /// Sum over `axes`, keeping reduced axes as singleton extents.
    pub fn sum_axes(&self, axes: &[usize]) -> Result<CTensor<T>> {
        let rank = self.shape().len();
        for &ax in axes {
            if ax >= rank {
                return Err(CxError::shape("sum_axes", format!("axis {ax} out of range for rank {rank}")));
            }
        }
        let mut out_shape = self.shape().to_vec();
        for &ax in axes {
            out_shape[ax] = 1;
        }
        let (re, im) = reduce_grad_to(self.re(), self.im(), self.shape(), &out_shape);
        let p = self.clone();
        let in_shape = self.shape().to_vec();
        let oshape = out_shape.clone();
        Ok(make_op_output(out_shape, re, im, "sum_axes", vec![self.clone()], move || {
            Box::new(move |g| {
                // broadcast grad back over the reduced axes
                let n = numel(&in_shape);
                let st = bcast_strides(&oshape, &in_shape);
                let zero = vec![0usize; in_shape.len()];
                let mut r = vec![T::zero(); n];
                let mut i = vec![T::zero(); n];
                for_each_bcast2(&in_shape, &st, &zero, |fi, oi, _| {
                    r[fi] = g.re[oi];
                    i[fi] = g.im[oi];
                });
                p.accumulate_grad(&r, &i);
            })
        }))
    }

    /// Mean over `axes`, keeping reduced axes as singleton extents.
    pub fn mean_axes(&self, axes: &[usize]) -> Result<CTensor<T>> {
        let mut count = 1usize;
        for &ax in axes {
            count *= self.shape().get(ax).copied().unwrap_or(1);
        }
        Ok(self.sum_axes(axes)?.scale(T::one() / T::from_usize(count)))
    }

    /// Sum of all elements as a rank-0 tensor.
    pub fn sum_all(&self) -> CTensor<T> {
        let re = vec![self.re().iter().copied().sum()];
        let im = vec![self.im().iter().copied().sum()];
        let p = self.clone();
        make_op_output(vec![], re, im, "sum_all", vec![self.clone()], move || {
            Box::new(move |g| {
                let n = p.len();
                let r = vec![g.re[0]; n];
                let i = vec![g.im[0]; n];
                p.accumulate_grad(&r, &i);
            })
        })
    }

    /// Mean of all elements as a rank-0 tensor.
    pub fn mean_all(&self) -> CTensor<T> {
        self.sum_all().scale(T::one() / T::from_usize(self.len().max(1)))
    }
}

// ---------------------------------------------------------------------------
// shape ops and matmul
// ---------------------------------------------------------------------------

impl<T: Real> CTensor<T> {
    pub fn reshape(&self, shape: &[usize]) -> Result<CTensor<T>> {
        if numel(shape) != self.len() {
            return Err(CxError::shape(
                "reshape",
                format!("{:?} ({}) -> {:?} ({})", self.shape(), self.len(), shape, numel(shape)),
            ));
        }
        let p = self.clone();
        Ok(make_op_output(
            shape.to_vec(),
            self.re().to_vec(),
            self.im().to_vec(),
            "reshape",
            vec![self.clone()],
            move || Box::new(move |g| p.accumulate_grad(&g.re, &g.im)),
        ))
    }

    /// 2-D transpose.
    pub fn transpose(&self) -> Result<CTensor<T>> {
        let sh = self.shape();
        if sh.len() != 2 {
            return Err(CxError::shape("transpose", format!("rank-2 required, got {:?}", sh)));
        }
        let (m, n) = (sh[0], sh[1]);
        let mut re = vec![T::zero(); m * n];
        let mut im = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                re[j * m + i] = self.re()[i * n + j];
                im[j * m + i] = self.im()[i * n + j];
            }
        }
        let p = self.clone();
        Ok(make_op_output(vec![n, m], re, im, "transpose", vec![self.clone()], move || {
            Box::new(move |g| {
                // grad transposes back: g is n x m
                let mut r = vec![T::zero(); m * n];
                let mut i2 = vec![T::zero(); m * n];
                for j in 0..n {
                    for i in 0..m {
                        r[i * n + j] = g.re[j * m + i];
                        i2[i * n + j] = g.im[j * m + i];
                    }
                }
                p.accumulate_grad(&r, &i2);
            })
        }))
    }

    /// 2-D complex matrix product.
    ///
    /// Backward: `g_a = g * conj(b)^T`, `g_b = conj(a)^T * g`.
    pub fn matmul(&self, other: &CTensor<T>) -> Result<CTensor<T>> {
        let (sa, sb) = (self.shape(), other.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(CxError::shape(
                "matmul",
                format!("incompatible shapes {:?} x {:?}", sa, sb),
            ));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut re = vec![T::zero(); m * n];
        let mut im = vec![T::zero(); m * n];
        // Purely real operands (zero imaginary plane) skip the gemms they
        // cannot contribute to, so real-valued models pay one gemm, not four.
        let ai_zero = all_zero(self.im());
        let bi_zero = all_zero(other.im());
        // (ar + j ai)(br + j bi) = (ar br - ai bi) + j (ar bi + ai br)
        gemm_nn(m, k, n, self.re(), other.re(), &mut re);
        if !ai_zero && !bi_zero {
            let mut tmp = vec![T::zero(); m * n];
            gemm_nn(m, k, n, self.im(), other.im(), &mut tmp);
            for i in 0..m * n {
                re[i] = re[i] - tmp[i];
            }
        }
        if !bi_zero {
            gemm_nn(m, k, n, self.re(), other.im(), &mut im);
        }
        if !ai_zero {
            gemm_nn(m, k, n, self.im(), other.re(), &mut im);
        }

        let (pa, pb) = (self.clone(), other.clone());
        Ok(make_op_output(vec![m, n], re, im, "matmul", vec![self.clone(), other.clone()], move || {
            Box::new(move |g| {
                let gi_zero = all_zero(&g.im);
                if pa.needs_grad() {
                    // g_a[m,k] = g[m,n] * conj(b)[k,n]^T
                    let mut r = vec![T::zero(); m * k];
                    let mut i = vec![T::zero(); m * k];
                    gemm_nt(m, n, k, &g.re, pb.re(), &mut r);
                    if !gi_zero && !bi_zero {
                        gemm_nt(m, n, k, &g.im, pb.im(), &mut r);
                    }
                    if !gi_zero {
                        gemm_nt(m, n, k, &g.im, pb.re(), &mut i);
                    }
                    if !bi_zero {
                        let mut tmp = vec![T::zero(); m * k];
                        gemm_nt(m, n, k, &g.re, pb.im(), &mut tmp);
                        for x in 0..m * k {
                            i[x] = i[x] - tmp[x];
                        }
                    }
                    pa.accumulate_grad(&r, &i);
                }
                if pb.needs_grad() {
                    // g_b[k,n] = conj(a)[m,k]^T * g[m,n]
                    let mut r = vec![T::zero(); k * n];
                    let mut i = vec![T::zero(); k * n];
                    gemm_tn(k, m, n, pa.re(), &g.re, &mut r);
                    if !ai_zero && !gi_zero {
                        gemm_tn(k, m, n, pa.im(), &g.im, &mut r);
                    }
                    if !gi_zero {
                        gemm_tn(k, m, n, pa.re(), &g.im, &mut i);
                    }
                    if !ai_zero {
                        let mut tmp = vec![T::zero(); k * n];
                        gemm_tn(k, m, n, pa.im(), &g.re, &mut tmp);
                        for x in 0..k * n {
                            i[x] = i[x] - tmp[x];
                        }
                    }
                    pb.accumulate_grad(&r, &i);
                }
            })
        }))
    }
}
