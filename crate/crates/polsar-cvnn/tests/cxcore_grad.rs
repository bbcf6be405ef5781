//! Finite-difference verification of every core op's reverse-mode rule, plus
//! graph-level properties (linearity, single-visit accumulation).

use num_complex::Complex64;
use polsar_cvnn::cxcore::CTensor;
use polsar_cvnn::testkit::{fd_grad_check, rand_tensor, rand_tensor_margin, rng};

const STEP: f64 = 1e-6;
const TOL: f64 = 1e-7;

/// Real scalar probe: mean |w - t|^2 against a fixed random target keeps
/// gradients generic (non-zero, non-symmetric).
fn probe(w: &CTensor<f64>, seed: u64) -> CTensor<f64> {
    let mut r = rng(seed);
    let t = rand_tensor(&mut r, w.shape(), 1.0);
    w.sub(&t).unwrap().abs_sq().mean_all()
}

#[test]
fn elementwise_ops_match_finite_differences() {
    let mut r = rng(11);
    for round in 0..5 {
        let shape = [2 + round % 3, 3, 4];
        let a = rand_tensor(&mut r, &shape, 1.5);
        let b = rand_tensor_margin(&mut r, &shape, 1.5, 0.15);

        type Case = (&'static str, usize, Box<dyn Fn(&[CTensor<f64>]) -> CTensor<f64>>);
        // The arity picks how many of {a, b} feed the graph; the checker must
        // only differentiate inputs the loss actually reaches.
        let cases: Vec<Case> = vec![
            ("add", 2, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].add(&xs[1]).unwrap(), 1))),
            ("sub", 2, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].sub(&xs[1]).unwrap(), 2))),
            ("mul", 2, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].mul(&xs[1]).unwrap(), 3))),
            ("div", 2, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].div(&xs[1]).unwrap(), 4))),
            ("conj", 1, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].conj(), 5))),
            ("neg", 1, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].neg(), 6))),
            ("exp", 1, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].exp(), 7))),
            ("abs", 1, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].abs(), 8))),
            ("abs_sq", 1, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].abs_sq(), 9))),
            ("angle", 1, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].angle(), 10))),
            ("re", 1, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].re_part(), 11))),
            ("im", 1, Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].im_part(), 12))),
            (
                "scale_cx",
                1,
                Box::new(|xs: &[CTensor<f64>]| probe(&xs[0].scale_complex(Complex64::new(0.7, -1.3)), 13)),
            ),
            (
                "compose",
                2,
                Box::new(|xs: &[CTensor<f64>]| {
                    probe(&CTensor::compose(&xs[0].re_part(), &xs[1].re_part()).unwrap(), 14)
                }),
            ),
        ];
        for (name, arity, f) in cases {
            let inputs: Vec<CTensor<f64>> = if arity == 2 { vec![a.clone(), b.clone()] } else { vec![a.clone()] };
            let err = fd_grad_check(&inputs, f.as_ref(), STEP);
            assert!(err < TOL, "{name}: rel err {err}");
        }
    }
}

#[test]
fn sqrt_re_matches_finite_differences() {
    let mut r = rng(21);
    // positive real input bounded away from zero
    let base = rand_tensor(&mut r, &[3, 4], 1.0);
    let pos = base.abs_sq().re_part();
    let input = CTensor::from_parts(pos.shape(), pos.re().iter().map(|v| v + 0.5).collect(), vec![0.0; pos.len()]).unwrap();
    let err = fd_grad_check(
        &[input],
        &|xs: &[CTensor<f64>]| probe(&xs[0].sqrt_re(), 15),
        STEP,
    );
    assert!(err < TOL, "sqrt_re rel err {err}");
}

#[test]
fn reductions_match_finite_differences() {
    let mut r = rng(31);
    let a = rand_tensor(&mut r, &[2, 3, 4, 2], 1.0);
    for (name, f) in [
        ("sum_axes", (|xs: &[CTensor<f64>]| probe(&xs[0].sum_axes(&[0, 2]).unwrap(), 16)) as fn(&[CTensor<f64>]) -> CTensor<f64>),
        ("mean_axes", |xs: &[CTensor<f64>]| probe(&xs[0].mean_axes(&[1, 3]).unwrap(), 17)),
        ("sum_all", |xs: &[CTensor<f64>]| xs[0].abs_sq().sum_all()),
        ("mean_all", |xs: &[CTensor<f64>]| xs[0].abs_sq().mean_all()),
    ] {
        let err = fd_grad_check(std::slice::from_ref(&a), &f, STEP);
        assert!(err < TOL, "{name}: rel err {err}");
    }
}

#[test]
fn broadcast_gradients_match_finite_differences() {
    let mut r = rng(41);
    let a = rand_tensor(&mut r, &[2, 3, 2, 2], 1.0);
    let c = rand_tensor_margin(&mut r, &[1, 3, 1, 1], 1.0, 0.2);
    for (name, f) in [
        ("bcast_add", (|xs: &[CTensor<f64>]| probe(&xs[0].add(&xs[1]).unwrap(), 18)) as fn(&[CTensor<f64>]) -> CTensor<f64>),
        ("bcast_mul", |xs: &[CTensor<f64>]| probe(&xs[0].mul(&xs[1]).unwrap(), 19)),
        ("bcast_div", |xs: &[CTensor<f64>]| probe(&xs[0].div(&xs[1]).unwrap(), 20)),
    ] {
        let err = fd_grad_check(&[a.clone(), c.clone()], &f, STEP);
        assert!(err < TOL, "{name}: rel err {err}");
    }
}

#[test]
fn linalg_ops_match_finite_differences() {
    let mut r = rng(51);
    let a = rand_tensor(&mut r, &[4, 3], 1.0);
    let b = rand_tensor(&mut r, &[3, 5], 1.0);
    let err = fd_grad_check(
        &[a.clone(), b.clone()],
        &|xs: &[CTensor<f64>]| probe(&xs[0].matmul(&xs[1]).unwrap(), 21),
        STEP,
    );
    assert!(err < TOL, "matmul rel err {err}");

    let err = fd_grad_check(
        std::slice::from_ref(&a),
        &|xs: &[CTensor<f64>]| probe(&xs[0].transpose().unwrap(), 22),
        STEP,
    );
    assert!(err < TOL, "transpose rel err {err}");

    let err = fd_grad_check(
        &[a],
        &|xs: &[CTensor<f64>]| probe(&xs[0].reshape(&[2, 6]).unwrap(), 23),
        STEP,
    );
    assert!(err < TOL, "reshape rel err {err}");
}

#[test]
fn matmul_gradient_matches_conjugate_rule() {
    // g_a = g * conj(b)^T with L = Re(sum(matmul)) so g = ones
    let a = CTensor::from_complex(&[1, 2], &[Complex64::new(1.0, 2.0), Complex64::new(-0.5, 1.0)])
        .unwrap()
        .requires_grad();
    let b = CTensor::from_complex(
        &[2, 1],
        &[Complex64::new(0.5, -1.0), Complex64::new(2.0, 0.25)],
    )
    .unwrap()
    .requires_grad();
    let loss = a.matmul(&b).unwrap().re_part().sum_all();
    loss.backward().unwrap();
    let ga = a.grad().unwrap();
    // expected: conj(b)^T
    assert!((ga.at(0) - Complex64::new(0.5, 1.0)).norm() < 1e-12);
    assert!((ga.at(1) - Complex64::new(2.0, -0.25)).norm() < 1e-12);
    let gb = b.grad().unwrap();
    assert!((gb.at(0) - Complex64::new(1.0, -2.0)).norm() < 1e-12);
    assert!((gb.at(1) - Complex64::new(-0.5, -1.0)).norm() < 1e-12);
}

#[test]
fn backward_is_linear_in_the_loss() {
    let mut r = rng(61);
    let data = rand_tensor(&mut r, &[3, 3], 1.0);

    let run = |alpha: f64, beta: f64| -> Vec<Complex64> {
        let leaf = CTensor::from_parts(data.shape(), data.re().to_vec(), data.im().to_vec())
            .unwrap()
            .requires_grad();
        let l1 = leaf.abs_sq().mean_all();
        let l2 = leaf.exp().abs().mean_all();
        let loss = l1.scale(alpha).add(&l2.scale(beta)).unwrap();
        loss.backward().unwrap();
        let g = leaf.grad().unwrap();
        (0..g.re.len()).map(|i| g.at(i)).collect()
    };

    let g1 = run(1.0, 0.0);
    let g2 = run(0.0, 1.0);
    let gc = run(0.7, -2.5);
    for i in 0..g1.len() {
        let want = 0.7 * g1[i] - 2.5 * g2[i];
        assert!((gc[i] - want).norm() < 1e-12 * (1.0 + want.norm()));
    }
}

#[test]
fn angle_gradient_at_one_plus_j() {
    let z = CTensor::from_complex(&[1], &[Complex64::new(1.0, 1.0)]).unwrap().requires_grad();
    let loss = z.angle().sum_all();
    loss.backward().unwrap();
    let g = z.grad().unwrap();
    // d(atan2)/dx = -y/r^2 = -1/2, d/dy = x/r^2 = 1/2
    assert!((g.re[0] + 0.5).abs() < 1e-12);
    assert!((g.im[0] - 0.5).abs() < 1e-12);
}
