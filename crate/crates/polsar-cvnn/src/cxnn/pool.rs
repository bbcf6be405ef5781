//! Complex pooling and subsampling.
//!
//! Max pooling returns the window element of largest modulus (the value, not
//! the modulus); ties resolve to the lowest flat window index. Average pooling
//! treats Re and Im independently, preserving the complex structure.

use crate::cxcore::{make_op_output, CTensor, CxError, Real, Result};

fn pool_extent(op: &'static str, input: usize, k: usize, stride: usize) -> Result<usize> {
    if k == 0 || stride == 0 {
        return Err(CxError::contract(op, "window and stride must be positive"));
    }
    if k > input {
        return Err(CxError::shape(op, format!("window {k} exceeds extent {input}")));
    }
    Ok((input - k) / stride + 1)
}

fn check_rank4(op: &'static str, x: &CTensor<impl Real>) -> Result<()> {
    if x.shape().len() != 4 {
        return Err(CxError::shape(op, format!("rank-4 input required, got {:?}", x.shape())));
    }
    Ok(())
}

/// Max pooling by modulus over `k`x`k` windows.
pub fn max_pool2d<T: Real>(x: &CTensor<T>, k: usize, stride: usize) -> Result<CTensor<T>> {
    check_rank4("cmaxpool", x)?;
    let sh = x.shape();
    let (b_n, c_n, h, w) = (sh[0], sh[1], sh[2], sh[3]);
    let ho = pool_extent("cmaxpool", h, k, stride)?;
    let wo = pool_extent("cmaxpool", w, k, stride)?;
    let n = b_n * c_n * ho * wo;
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    let mut winner = vec![0usize; n];
    for bc in 0..b_n * c_n {
        let plane = bc * h * w;
        for oy in 0..ho {
            for ox in 0..wo {
                let mut best = T::from_f64(-1.0);
                let mut best_idx = 0usize;
                for dy in 0..k {
                    for dx in 0..k {
                        let idx = plane + (oy * stride + dy) * w + (ox * stride + dx);
                        let (xr, xi) = (x.re()[idx], x.im()[idx]);
                        let m = xr * xr + xi * xi;
                        if m > best {
                            best = m;
                            best_idx = idx;
                        }
                    }
                }
                let out = (bc * ho + oy) * wo + ox;
                re[out] = x.re()[best_idx];
                im[out] = x.im()[best_idx];
                winner[out] = best_idx;
            }
        }
    }
    let p = x.clone();
    Ok(make_op_output(
        vec![b_n, c_n, ho, wo],
        re,
        im,
        "cmaxpool",
        vec![x.clone()],
        move || {
            Box::new(move |g| {
                let mut gre = vec![T::zero(); p.len()];
                let mut gim = vec![T::zero(); p.len()];
                for (out, &src) in winner.iter().enumerate() {
                    gre[src] = gre[src] + g.re[out];
                    gim[src] = gim[src] + g.im[out];
                }
                p.accumulate_grad(&gre, &gim);
            })
        },
    ))
}

/// Average pooling over `k`x`k` windows, Re and Im independently.
pub fn avg_pool2d<T: Real>(x: &CTensor<T>, k: usize, stride: usize) -> Result<CTensor<T>> {
    check_rank4("cavgpool", x)?;
    let sh = x.shape();
    let (b_n, c_n, h, w) = (sh[0], sh[1], sh[2], sh[3]);
    let ho = pool_extent("cavgpool", h, k, stride)?;
    let wo = pool_extent("cavgpool", w, k, stride)?;
    let n = b_n * c_n * ho * wo;
    let inv = T::one() / T::from_usize(k * k);
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    for bc in 0..b_n * c_n {
        let plane = bc * h * w;
        for oy in 0..ho {
            for ox in 0..wo {
                let mut sr = T::zero();
                let mut si = T::zero();
                for dy in 0..k {
                    for dx in 0..k {
                        let idx = plane + (oy * stride + dy) * w + (ox * stride + dx);
                        sr = sr + x.re()[idx];
                        si = si + x.im()[idx];
                    }
                }
                let out = (bc * ho + oy) * wo + ox;
                re[out] = sr * inv;
                im[out] = si * inv;
            }
        }
    }
    let p = x.clone();
    Ok(make_op_output(
        vec![b_n, c_n, ho, wo],
        re,
        im,
        "cavgpool",
        vec![x.clone()],
        move || {
            Box::new(move |g| {
                let mut gre = vec![T::zero(); p.len()];
                let mut gim = vec![T::zero(); p.len()];
                for bc in 0..b_n * c_n {
                    let plane = bc * h * w;
                    for oy in 0..ho {
                        for ox in 0..wo {
                            let out = (bc * ho + oy) * wo + ox;
                            let (gr, gi) = (g.re[out] * inv, g.im[out] * inv);
                            for dy in 0..k {
                                for dx in 0..k {
                                    let idx =
                                        plane + (oy * stride + dy) * w + (ox * stride + dx);
                                    gre[idx] = gre[idx] + gr;
                                    gim[idx] = gim[idx] + gi;
                                }
                            }
                        }
                    }
                }
                p.accumulate_grad(&gre, &gim);
            })
        },
    ))
}

/// Down-sampling by factor `p`: keeps rows and columns `0, p, 2p, ...`.
pub fn subsample<T: Real>(x: &CTensor<T>, p: usize) -> Result<CTensor<T>> {
    check_rank4("subsample", x)?;
    if p == 0 {
        return Err(CxError::contract("subsample", "factor must be positive"));
    }
    let sh = x.shape();
    let (b_n, c_n, h, w) = (sh[0], sh[1], sh[2], sh[3]);
    let ho = h.div_ceil(p);
    let wo = w.div_ceil(p);
    let n = b_n * c_n * ho * wo;
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    for bc in 0..b_n * c_n {
        let plane = bc * h * w;
        for oy in 0..ho {
            for ox in 0..wo {
                let idx = plane + oy * p * w + ox * p;
                let out = (bc * ho + oy) * wo + ox;
                re[out] = x.re()[idx];
                im[out] = x.im()[idx];
            }
        }
    }
    let px = x.clone();
    Ok(make_op_output(
        vec![b_n, c_n, ho, wo],
        re,
        im,
        "subsample",
        vec![x.clone()],
        move || {
            Box::new(move |g| {
                let mut gre = vec![T::zero(); px.len()];
                let mut gim = vec![T::zero(); px.len()];
                for bc in 0..b_n * c_n {
                    let plane = bc * h * w;
                    for oy in 0..ho {
                        for ox in 0..wo {
                            let idx = plane + oy * p * w + ox * p;
                            let out = (bc * ho + oy) * wo + ox;
                            gre[idx] = g.re[out];
                            gim[idx] = g.im[out];
                        }
                    }
                }
                px.accumulate_grad(&gre, &gim);
            })
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;
    use num_complex::Complex64;

    fn t4(vals: &[(f64, f64)], h: usize, w: usize) -> CTensor<f64> {
        let data: Vec<Complex64> = vals.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        CTensor::from_complex(&[1, 1, h, w], &data).unwrap()
    }

    #[test]
    fn maxpool_picks_largest_modulus_value() {
        // moduli 1, 2, sqrt(2), 0 -> picks 0+2j
        let x = t4(&[(1.0, 0.0), (0.0, 2.0), (-1.0, -1.0), (0.0, 0.0)], 2, 2);
        let y = max_pool2d(&x, 2, 2).unwrap();
        assert_eq!(y.at(0), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn maxpool_tie_takes_lowest_flat_index() {
        let x = t4(&[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (-1.0, 0.0)], 2, 2);
        let y = max_pool2d(&x, 2, 2).unwrap();
        assert_eq!(y.at(0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn avgpool_averages_components_independently() {
        // mean of {1+j, 3-j} = 2+0j, replicated across the window
        let x = t4(&[(1.0, 1.0), (3.0, -1.0), (1.0, 1.0), (3.0, -1.0)], 2, 2);
        let y = avg_pool2d(&x, 2, 2).unwrap();
        assert_eq!(y.at(0), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn subsample_keeps_zero_based_grid() {
        let mut rng = testkit::rng(41);
        let x = testkit::rand_tensor(&mut rng, &[1, 1, 6, 6], 1.0);
        let y = subsample(&x, 2).unwrap();
        assert_eq!(y.shape(), &[1, 1, 3, 3]);
        assert_eq!(y.at(0), x.at(0));
        assert_eq!(y.at(1), x.at(2));
        assert_eq!(y.at(3), x.at(12));
    }

    #[test]
    fn oversized_window_is_rejected() {
        let mut rng = testkit::rng(42);
        let x = testkit::rand_tensor(&mut rng, &[1, 1, 2, 2], 1.0);
        assert!(max_pool2d(&x, 3, 1).is_err());
    }
}
