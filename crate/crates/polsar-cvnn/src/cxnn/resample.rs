//! Spatial up-sampling: non-trainable nearest interpolation (default) and a
//! bilinear variant, both interpolating Re and Im independently.

use crate::cxcore::{make_op_output, CTensor, CxError, Real, Result};

/// Up-sampling interpolation kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsampleMode {
    Nearest,
    Bilinear,
}

/// `out(i,j) = z(floor(i/f), floor(j/f))`.
pub fn upsample_nearest<T: Real>(x: &CTensor<T>, f: usize) -> Result<CTensor<T>> {
    if x.shape().len() != 4 {
        return Err(CxError::shape("upsample", format!("rank-4 required, got {:?}", x.shape())));
    }
    if f == 0 {
        return Err(CxError::contract("upsample", "factor must be positive"));
    }
    let sh = x.shape();
    let (b_n, c_n, h, w) = (sh[0], sh[1], sh[2], sh[3]);
    let (ho, wo) = (h * f, w * f);
    let mut re = vec![T::zero(); b_n * c_n * ho * wo];
    let mut im = vec![T::zero(); b_n * c_n * ho * wo];
    for bc in 0..b_n * c_n {
        let plane = bc * h * w;
        let out_plane = bc * ho * wo;
        for oy in 0..ho {
            let src_row = plane + (oy / f) * w;
            let dst_row = out_plane + oy * wo;
            for ox in 0..wo {
                re[dst_row + ox] = x.re()[src_row + ox / f];
                im[dst_row + ox] = x.im()[src_row + ox / f];
            }
        }
    }
    let p = x.clone();
    Ok(make_op_output(
        vec![b_n, c_n, ho, wo],
        re,
        im,
        "upsample_nearest",
        vec![x.clone()],
        move || {
            Box::new(move |g| {
                let mut gre = vec![T::zero(); p.len()];
                let mut gim = vec![T::zero(); p.len()];
                for bc in 0..b_n * c_n {
                    let plane = bc * h * w;
                    let out_plane = bc * ho * wo;
                    for oy in 0..ho {
                        let src_row = plane + (oy / f) * w;
                        let dst_row = out_plane + oy * wo;
                        for ox in 0..wo {
                            let s = src_row + ox / f;
                            gre[s] = gre[s] + g.re[dst_row + ox];
                            gim[s] = gim[s] + g.im[dst_row + ox];
                        }
                    }
                }
                p.accumulate_grad(&gre, &gim);
            })
        },
    ))
}

/// Four-tap weights for one output coordinate under half-pixel alignment.
fn bilinear_taps<T: Real>(o: usize, f: usize, extent: usize) -> (usize, usize, T) {
    let src = (o as f64 + 0.5) / f as f64 - 0.5;
    let lo = src.floor();
    let frac = src - lo;
    let i0 = (lo.max(0.0) as usize).min(extent - 1);
    let i1 = ((lo + 1.0).max(0.0) as usize).min(extent - 1);
    (i0, i1, T::from_f64(frac.clamp(0.0, 1.0)))
}

/// Bilinear up-sampling by `f`, Re and Im independently.
pub fn upsample_bilinear<T: Real>(x: &CTensor<T>, f: usize) -> Result<CTensor<T>> {
    if x.shape().len() != 4 {
        return Err(CxError::shape("upsample", format!("rank-4 required, got {:?}", x.shape())));
    }
    if f == 0 {
        return Err(CxError::contract("upsample", "factor must be positive"));
    }
    let sh = x.shape();
    let (b_n, c_n, h, w) = (sh[0], sh[1], sh[2], sh[3]);
    let (ho, wo) = (h * f, w * f);
    let rows: Vec<(usize, usize, T)> = (0..ho).map(|o| bilinear_taps::<T>(o, f, h)).collect();
    let cols: Vec<(usize, usize, T)> = (0..wo).map(|o| bilinear_taps::<T>(o, f, w)).collect();
    let mut re = vec![T::zero(); b_n * c_n * ho * wo];
    let mut im = vec![T::zero(); b_n * c_n * ho * wo];
    for bc in 0..b_n * c_n {
        let plane = bc * h * w;
        let out_plane = bc * ho * wo;
        for (oy, &(y0, y1, fy)) in rows.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in cols.iter().enumerate() {
                let w00 = (T::one() - fy) * (T::one() - fx);
                let w01 = (T::one() - fy) * fx;
                let w10 = fy * (T::one() - fx);
                let w11 = fy * fx;
                let (i00, i01) = (plane + y0 * w + x0, plane + y0 * w + x1);
                let (i10, i11) = (plane + y1 * w + x0, plane + y1 * w + x1);
                let dst = out_plane + oy * wo + ox;
                re[dst] = w00 * x.re()[i00]
                    + w01 * x.re()[i01]
                    + w10 * x.re()[i10]
                    + w11 * x.re()[i11];
                im[dst] = w00 * x.im()[i00]
                    + w01 * x.im()[i01]
                    + w10 * x.im()[i10]
                    + w11 * x.im()[i11];
            }
        }
    }
    let p = x.clone();
    Ok(make_op_output(
        vec![b_n, c_n, ho, wo],
        re,
        im,
        "upsample_bilinear",
        vec![x.clone()],
        move || {
            Box::new(move |g| {
                let rows: Vec<(usize, usize, T)> =
                    (0..ho).map(|o| bilinear_taps::<T>(o, f, h)).collect();
                let cols: Vec<(usize, usize, T)> =
                    (0..wo).map(|o| bilinear_taps::<T>(o, f, w)).collect();
                let mut gre = vec![T::zero(); p.len()];
                let mut gim = vec![T::zero(); p.len()];
                for bc in 0..b_n * c_n {
                    let plane = bc * h * w;
                    let out_plane = bc * ho * wo;
                    for (oy, &(y0, y1, fy)) in rows.iter().enumerate() {
                        for (ox, &(x0, x1, fx)) in cols.iter().enumerate() {
                            let dst = out_plane + oy * wo + ox;
                            let (gr, gi) = (g.re[dst], g.im[dst]);
                            let taps = [
                                (plane + y0 * w + x0, (T::one() - fy) * (T::one() - fx)),
                                (plane + y0 * w + x1, (T::one() - fy) * fx),
                                (plane + y1 * w + x0, fy * (T::one() - fx)),
                                (plane + y1 * w + x1, fy * fx),
                            ];
                            for (idx, wt) in taps {
                                gre[idx] = gre[idx] + gr * wt;
                                gim[idx] = gim[idx] + gi * wt;
                            }
                        }
                    }
                }
                p.accumulate_grad(&gre, &gim);
            })
        },
    ))
}

/// Dispatches on the configured interpolation.
pub fn upsample<T: Real>(x: &CTensor<T>, f: usize, mode: UpsampleMode) -> Result<CTensor<T>> {
    match mode {
        UpsampleMode::Nearest => upsample_nearest(x, f),
        UpsampleMode::Bilinear => upsample_bilinear(x, f),
    }
}
