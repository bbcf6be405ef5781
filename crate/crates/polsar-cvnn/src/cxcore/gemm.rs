//! Row-major real GEMM kernels. Complex products are composed from these on
//! split re/im planes, which vectorizes far better than interleaved storage.

use super::real::Real;

/// C[m x n] += A[m x k] * B[k x n].
///
/// Four-row blocking keeps one pass over B per block instead of per row.
pub fn gemm_nn<T: Real>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let mut i = 0;
    while i + 4 <= m {
        let (a0, a1, a2, a3) = (&a[i * k..], &a[(i + 1) * k..], &a[(i + 2) * k..], &a[(i + 3) * k..]);
        for p in 0..k {
            let (x0, x1, x2, x3) = (a0[p], a1[p], a2[p], a3[p]);
            let brow = &b[p * n..p * n + n];
            // Split borrows: four disjoint output rows.
            let (c01, c23) = c[i * n..(i + 4) * n].split_at_mut(2 * n);
            let (c0, c1) = c01.split_at_mut(n);
            let (c2, c3) = c23.split_at_mut(n);
            for j in 0..n {
                let bj = brow[j];
                c0[j] = c0[j] + x0 * bj;
                c1[j] = c1[j] + x1 * bj;
                c2[j] = c2[j] + x2 * bj;
                c3[j] = c3[j] + x3 * bj;
            }
        }
        i += 4;
    }
    while i < m {
        let arow = &a[i * k..i * k + k];
        let crow = &mut c[i * n..i * n + n];
        for p in 0..k {
            let x = arow[p];
            let brow = &b[p * n..p * n + n];
            for j in 0..n {
                crow[j] = crow[j] + x * brow[j];
            }
        }
        i += 1;
    }
}

/// C[m x n] += A[m x k] * B^T where B is stored row-major [n x k].
///
/// Contiguous dot products over k; used for weight gradients.
pub fn gemm_nt<T: Real>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..i * k + k];
        let crow = &mut c[i * n..i * n + n];
        for j in 0..n {
            let brow = &b[j * k..j * k + k];
            let mut acc0 = T::zero();
            let mut acc1 = T::zero();
            let mut p = 0;
            while p + 2 <= k {
                acc0 = acc0 + arow[p] * brow[p];
                acc1 = acc1 + arow[p + 1] * brow[p + 1];
                p += 2;
            }
            if p < k {
                acc0 = acc0 + arow[p] * brow[p];
            }
            crow[j] = crow[j] + acc0 + acc1;
        }
    }
}

/// C[m x n] += A^T * B where A is stored row-major [k x m], B row-major [k x n].
///
/// Used for input gradients (`grad_col = W^T * grad_out`).
pub fn gemm_tn<T: Real>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for p in 0..k {
        let arow = &a[p * m..p * m + m];
        let brow = &b[p * n..p * n + n];
        for i in 0..m {
            let x = arow[i];
            if x == T::zero() {
                continue;
            }
            let crow = &mut c[i * n..i * n + n];
            for j in 0..n {
                crow[j] = crow[j] + x * brow[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                for j in 0..n {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn kernels_match_naive_product() {
        let (m, k, n) = (7, 5, 9);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.61).cos()).collect();
        let want = naive(m, k, n, &a, &b);

        let mut c = vec![0.0; m * n];
        gemm_nn(m, k, n, &a, &b, &mut c);
        assert!(c.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-12));

        // B^T layout: bt is n x k.
        let mut bt = vec![0.0; n * k];
        for p in 0..k {
            for j in 0..n {
                bt[j * k + p] = b[p * n + j];
            }
        }
        let mut c = vec![0.0; m * n];
        gemm_nt(m, k, n, &a, &bt, &mut c);
        assert!(c.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-12));

        // A^T layout: at is k x m.
        let mut at = vec![0.0; k * m];
        for i in 0..m {
            for p in 0..k {
                at[p * m + i] = a[i * k + p];
            }
        }
        let mut c = vec![0.0; m * n];
        gemm_tn(m, k, n, &at, &b, &mut c);
        assert!(c.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}
