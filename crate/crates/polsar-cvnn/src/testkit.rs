//! Test-only oracles and generators. Nothing in the library proper may call
//! into this module; oracles stay independent of the code paths they check.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::cxcore::CTensor;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Uniform complex tensor with components in [-scale, scale].
pub fn rand_tensor(rng: &mut ChaCha12Rng, shape: &[usize], scale: f64) -> CTensor<f64> {
    let n: usize = shape.iter().product();
    let re: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    let im: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    CTensor::from_parts(shape, re, im).unwrap()
}

/// Like [`rand_tensor`] but keeps every component at least `margin` away from
/// zero, so finite differences cannot step across activation boundaries.
pub fn rand_tensor_margin(rng: &mut ChaCha12Rng, shape: &[usize], scale: f64, margin: f64) -> CTensor<f64> {
    let n: usize = shape.iter().product();
    let draw = |rng: &mut ChaCha12Rng| loop {
        let v: f64 = rng.gen_range(-scale..scale);
        if v.abs() >= margin {
            return v;
        }
    };
    let re: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    let im: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    CTensor::from_parts(shape, re, im).unwrap()
}

/// Central-difference gradient oracle.
///
/// `loss_fn` must be a pure function of the given leaves returning a real
/// scalar tensor. Returns the worst norm-relative error across inputs between
/// the reverse-mode gradient and the finite-difference gradient.
pub fn fd_grad_check(
    inputs: &[CTensor<f64>],
    loss_fn: &dyn Fn(&[CTensor<f64>]) -> CTensor<f64>,
    step: f64,
) -> f64 {
    fd_grad_check_subset(inputs, loss_fn, step, usize::MAX, &mut rng(0x5eed))
}

/// Subset variant: checks at most `max_per_input` randomly chosen components
/// per input (both components of each chosen element), for large graphs.
pub fn fd_grad_check_subset(
    inputs: &[CTensor<f64>],
    loss_fn: &dyn Fn(&[CTensor<f64>]) -> CTensor<f64>,
    step: f64,
    max_per_input: usize,
    pick_rng: &mut ChaCha12Rng,
) -> f64 {
    // analytic gradients on grad-enabled copies
    let leaves: Vec<CTensor<f64>> = inputs
        .iter()
        .map(|t| CTensor::from_parts(t.shape(), t.re().to_vec(), t.im().to_vec()).unwrap().requires_grad())
        .collect();
    let loss = loss_fn(&leaves);
    loss.backward().expect("fd_grad_check: backward failed");
    // A leaf the loss never touches legitimately carries a zero gradient.
    let grads: Vec<_> = leaves
        .iter()
        .map(|l| l.grad().unwrap_or_else(|| crate::cxcore::GradBuf::zeros(l.len())))
        .collect();

    let eval = |tensors: &[CTensor<f64>]| -> f64 {
        let l = loss_fn(tensors);
        l.item().expect("loss must be scalar").re
    };

    let mut worst = 0.0f64;
    for (idx, input) in inputs.iter().enumerate() {
        let n = input.len();
        let indices: Vec<usize> = if n <= max_per_input {
            (0..n).collect()
        } else {
            let mut set = std::collections::BTreeSet::new();
            while set.len() < max_per_input {
                set.insert(pick_rng.gen_range(0..n));
            }
            set.into_iter().collect()
        };

        let mut diff_sq = 0.0f64;
        let mut ref_sq = 0.0f64;
        for &k in &indices {
            for comp in 0..2 {
                let mut plus = inputs.to_vec();
                let mut minus = inputs.to_vec();
                let perturb = |t: &CTensor<f64>, delta: f64| {
                    let mut re = t.re().to_vec();
                    let mut im = t.im().to_vec();
                    if comp == 0 {
                        re[k] += delta;
                    } else {
                        im[k] += delta;
                    }
                    CTensor::from_parts(t.shape(), re, im).unwrap()
                };
                plus[idx] = perturb(input, step);
                minus[idx] = perturb(input, -step);
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * step);
                let an = if comp == 0 { grads[idx].re[k] } else { grads[idx].im[k] };
                diff_sq += (an - fd) * (an - fd);
                ref_sq += fd * fd;
            }
        }
        let err = diff_sq.sqrt() / ref_sq.sqrt().max(1e-10);
        worst = worst.max(err);
    }
    worst
}

/// Naive cross-correlation oracle: `out[b,o,i,j] = sum_{c,p,q} z[b,c,i*s+p-pad,j*s+q-pad] * w[o,c,p,q]`.
/// Out-of-range taps read zero.
#[allow(clippy::too_many_arguments)]
pub fn naive_conv2d(
    z: &[Complex64],
    zb: usize,
    zc: usize,
    zh: usize,
    zw: usize,
    w: &[Complex64],
    co: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> (Vec<Complex64>, usize, usize) {
    let oh = (zh + 2 * pad - kh) / stride + 1;
    let ow = (zw + 2 * pad - kw) / stride + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zb * co * oh * ow];
    for b in 0..zb {
        for o in 0..co {
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..zc {
                        for p in 0..kh {
                            for q in 0..kw {
                                let y = (i * stride + p) as isize - pad as isize;
                                let x = (j * stride + q) as isize - pad as isize;
                                if y < 0 || x < 0 || y >= zh as isize || x >= zw as isize {
                                    continue;
                                }
                                let zi = ((b * zc + c) * zh + y as usize) * zw + x as usize;
                                let wi = ((o * zc + c) * kh + p) * kw + q;
                                acc += z[zi] * w[wi];
                            }
                        }
                    }
                    out[((b * co + o) * oh + i) * ow + j] = acc;
                }
            }
        }
    }
    (out, oh, ow)
}

/// Characteristic-polynomial eigenvalue oracle for Hermitian 3x3 matrices.
///
/// Solves det(A - x I) = 0 by bracketing the three real roots between the
/// stationary points of the cubic and bisecting. Independent of the
/// trigonometric closed form used by the implementation.
pub fn eig3_charpoly_oracle(a: &[[Complex64; 3]; 3]) -> [f64; 3] {
    // Monic characteristic polynomial: x^3 - tr x^2 + m x - det, with m the
    // sum of principal 2x2 minors. All three coefficients are real.
    let tr = a[0][0].re + a[1][1].re + a[2][2].re;
    let m = ((a[0][0] * a[1][1] - a[0][1] * a[1][0])
        + (a[0][0] * a[2][2] - a[0][2] * a[2][0])
        + (a[1][1] * a[2][2] - a[1][2] * a[2][1]))
        .re;
    let det = (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))
        .re;
    let p = |x: f64| x * x * x - tr * x * x + m * x - det;

    // Gershgorin bound for a bracket that encloses all roots.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, row) in a.iter().enumerate() {
        let r: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.norm()).sum();
        lo = lo.min(row[i].re - r);
        hi = hi.max(row[i].re + r);
    }
    lo -= 1.0;
    hi += 1.0;

    // Stationary points of the cubic split the bracket into monotone pieces.
    // p'(x) = 3x^2 - 2 tr x + m
    let disc = 4.0 * tr * tr - 12.0 * m;
    let mut cuts = vec![lo, hi];
    if disc > 0.0 {
        let s = disc.sqrt();
        let r1 = (2.0 * tr - s) / 6.0;
        let r2 = (2.0 * tr + s) / 6.0;
        for r in [r1, r2] {
            if r > lo && r < hi {
                cuts.push(r);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut roots: Vec<f64> = Vec::new();
    for w in cuts.windows(2) {
        let (mut a0, mut b0) = (w[0], w[1]);
        let (fa, fb) = (p(a0), p(b0));
        if fa == 0.0 {
            roots.push(a0);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a0 + b0);
            let fm = p(mid);
            if fm == 0.0 {
                a0 = mid;
                b0 = mid;
                break;
            }
            if fa.signum() == fm.signum() {
                a0 = mid;
            } else {
                b0 = mid;
            }
        }
        roots.push(0.5 * (a0 + b0));
    }
    // Repeated roots have even multiplicity across a bracket and are missed
    // by sign changes; recover them from Vieta's formulas.
    if roots.len() == 2 {
        roots.push(tr - roots[0] - roots[1]);
    } else if roots.len() == 1 {
        // (x - s)(x^2 - bx + c): remaining quadratic by deflation.
        let s = roots[0];
        let b = tr - s;
        let c = m - s * b;
        let disc = (b * b - 4.0 * c).max(0.0).sqrt();
        roots.push(0.5 * (b - disc));
        roots.push(0.5 * (b + disc));
    } else if roots.is_empty() {
        roots = vec![tr / 3.0; 3];
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    [roots[0], roots[1], roots[2]]
}

/// Random Hermitian positive semi-definite 3x3 built as G^H G (+ ridge).
pub fn rand_psd3(rng: &mut ChaCha12Rng, ridge: f64) -> [[Complex64; 3]; 3] {
    let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
    for row in &mut g {
        for v in row.iter_mut() {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = g.iter().map(|row| row[i].conj() * row[j]).sum();
        }
        a[i][i] += Complex64::new(ridge, 0.0);
    }
    a
}
