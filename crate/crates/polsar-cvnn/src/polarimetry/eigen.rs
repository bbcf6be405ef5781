//! Eigendecomposition of 3x3 Hermitian matrices.

use num_complex::Complex64;

type M3 = [[Complex64; 3]; 3];

/// Averages a matrix with its conjugate transpose.
pub fn hermitized(a: &M3) -> M3 {
    let mut h = [[Complex64::default(); 3]; 3];
    for (i, row) in h.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 0.5 * (a[i][j] + a[j][i].conj());
        }
    }
    h
}

fn matmul(a: &M3, b: &M3) -> M3 {
    let mut c = [[Complex64::default(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn adjoint(a: &M3) -> M3 {
    let mut c = [[Complex64::default(); 3]; 3];
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            c[j][i] = v.conj();
        }
    }
    c
}

fn det(a: &M3) -> Complex64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn cross(u: &[Complex64; 3], v: &[Complex64; 3]) -> [Complex64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn norm(v: &[Complex64; 3]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn normalized(v: &[Complex64; 3]) -> [Complex64; 3] {
    let n = norm(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Null vector of `a - lambda I` from the largest pairwise cross product of
/// its rows; valid when `lambda` is a simple eigenvalue.
fn shifted_row_cross(a: &M3, lambda: f64) -> Option<[Complex64; 3]> {
    let mut b = *a;
    for (i, row) in b.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let candidates = [cross(&b[0], &b[1]), cross(&b[0], &b[2]), cross(&b[1], &b[2])];
    let best = candidates
        .iter()
        .max_by(|x, y| norm(x).total_cmp(&norm(y)))
        .copied()
        .unwrap();
    (norm(&best) > 0.0).then(|| normalized(&best))
}

/// One cyclic complex Jacobi diagonalization; robust for degenerate spectra.
fn jacobi(a: &M3) -> ([f64; 3], M3) {
    let mut m = *a;
    let mut v: M3 = [[Complex64::default(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    let scale: f64 = m.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..60 {
        let off: f64 = m[0][1].norm_sqr() + m[0][2].norm_sqr() + m[1][2].norm_sqr();
        if off <= 1e-32 * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m[p][q];
            if apq.norm_sqr() <= 1e-64 * scale {
                continue;
            }
            let phase = apq / apq.norm();
            let tau = (m[q][q].re - m[p][p].re) / (2.0 * apq.norm());
            let t = tau.signum() / (tau.abs() + tau.hypot(1.0));
            let c = 1.0 / t.hypot(1.0);
            let s = t * c;
            let mut g: M3 = [[Complex64::default(); 3]; 3];
            for (i, row) in g.iter_mut().enumerate() {
                row[i] = Complex64::new(1.0, 0.0);
            }
            g[p][p] = c.into();
            g[q][q] = c.into();
            g[p][q] = s * phase;
            g[q][p] = -Complex64::from(s) * phase.conj();
            m = matmul(&adjoint(&g), &matmul(&m, &g));
            v = matmul(&v, &g);
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[j][j].re.total_cmp(&m[i][i].re));
    let vals = [m[order[0]][order[0]].re, m[order[1]][order[1]].re, m[order[2]][order[2]].re];
    let mut vecs = [[Complex64::default(); 3]; 3];
    for (out, &col) in vecs.iter_mut().zip(&order) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = v[k][col];
        }
    }
    (vals, vecs)
}

/// Eigenvalues (descending) and orthonormal eigenvectors (as rows) of a 3x3
/// Hermitian matrix. Eigenvalues come from the closed-form trigonometric
/// solution of the characteristic cubic; eigenvectors from cross products of
/// the shifted rows, deflating the middle one from the outer pair. When an
/// eigenvalue gap falls under `1e-6` relative, the whole problem falls back
/// to Jacobi iteration: near a double root the closed form loses half the
/// mantissa (the `acos` derivative blows up as `r -> 1`), so its own output
/// cannot be trusted to judge gaps finer than ~`1e-8`.
pub fn eigh3(a: &M3) -> ([f64; 3], M3) {
    let m = hermitized(a);
    let q = (m[0][0].re + m[1][1].re + m[2][2].re) / 3.0;
    let mut b = m;
    for (i, row) in b.iter_mut().enumerate() {
        row[i] -= q;
    }
    let p = (b.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>() / 6.0).sqrt();
    if p <= f64::MIN_POSITIVE.sqrt() {
        // Scalar matrix: any orthonormal basis works; keep the standard one.
        let mut eye: M3 = [[Complex64::default(); 3]; 3];
        for (i, row) in eye.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        return ([q; 3], eye);
    }
    for row in &mut b {
        for v in row.iter_mut() {
            *v /= p;
        }
    }
    let r = (det(&b).re / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    // phi lies in [0, pi/3], so the k=0 branch of the cubic is the largest
    // root and the k=1 branch the smallest.
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let l2 = 3.0 * q - l1 - l3;
    let scale = l1.abs().max(l3.abs()).max(f64::MIN_POSITIVE);
    if (l1 - l2).min(l2 - l3) < 1e-6 * scale {
        return jacobi(&m);
    }
    let (e1, e3) = match (shifted_row_cross(&m, l1), shifted_row_cross(&m, l3)) {
        (Some(e1), Some(e3)) => (e1, e3),
        _ => return jacobi(&m),
    };
    let e2 = normalized(&[
        (e3[1] * e1[2] - e3[2] * e1[1]).conj(),
        (e3[2] * e1[0] - e3[0] * e1[2]).conj(),
        (e3[0] * e1[1] - e3[1] * e1[0]).conj(),
    ]);
    ([l1, l2, l3], [e1, e2, e3])
}
