//! Dense complex layer: `y = W z + beta`.

use rand::Rng;

use crate::cxcore::{CTensor, CxError, Real, Result};
use crate::cxnn::init::{init_param, zero_param, Init};

/// Applies `W z + beta` to a `[B, n]` batch (or a single `[n]` vector).
pub fn linear<T: Real>(x: &CTensor<T>, w: &CTensor<T>, b: &CTensor<T>) -> Result<CTensor<T>> {
    let ws = w.shape();
    if ws.len() != 2 {
        return Err(CxError::shape("linear", format!("weight must be rank 2, got {:?}", ws)));
    }
    let (m, n) = (ws[0], ws[1]);
    if b.shape() != [m] {
        return Err(CxError::shape("linear", format!("bias {:?} != [{m}]", b.shape())));
    }
    let vector_input = x.shape().len() == 1;
    let x2 = if vector_input { x.reshape(&[1, x.len()])? } else { x.clone() };
    if x2.shape().len() != 2 || x2.shape()[1] != n {
        return Err(CxError::shape(
            "linear",
            format!("input {:?} incompatible with weight [{m}, {n}]", x.shape()),
        ));
    }
    let y = x2.matmul(&w.transpose()?)?.add(b)?;
    if vector_input {
        y.reshape(&[m])
    } else {
        Ok(y)
    }
}

/// Dense layer owning its parameters.
#[derive(Clone)]
pub struct Linear<T: Real> {
    pub w: CTensor<T>,
    pub b: CTensor<T>,
    pub real: bool,
}

impl<T: Real> Linear<T> {
    pub fn new(n_in: usize, n_out: usize, init: Init, rng: &mut impl Rng) -> Result<Self> {
        Ok(Linear {
            w: init_param(&[n_out, n_in], init, n_in, n_out, rng)?,
            b: zero_param(&[n_out]),
            real: init.is_real(),
        })
    }

    pub fn forward(&self, x: &CTensor<T>) -> Result<CTensor<T>> {
        linear(x, &self.w, &self.b)
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    #[test]
    fn identity_weight_passes_through() {
        let n = 4;
        let mut wre = vec![0.0; n * n];
        for i in 0..n {
            wre[i * n + i] = 1.0;
        }
        let w = CTensor::from_parts(&[n, n], wre, vec![0.0; n * n]).unwrap();
        let b = CTensor::zeros(&[n]);
        let mut rng = testkit::rng(21);
        let x = testkit::rand_tensor(&mut rng, &[n], 1.0);
        let y = linear(&x, &w, &b).unwrap();
        for i in 0..n {
            assert!((y.at(i) - x.at(i)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_weight_returns_bias() {
        let mut rng = testkit::rng(22);
        let w = CTensor::zeros(&[3, 5]);
        let b = testkit::rand_tensor(&mut rng, &[3], 1.0);
        let x = testkit::rand_tensor(&mut rng, &[2, 5], 1.0);
        let y = linear(&x, &w, &b).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert!((y.at(r * 3 + c) - b.at(c)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn matches_matmul_plus_add_composition() {
        let mut rng = testkit::rng(23);
        let w = testkit::rand_tensor(&mut rng, &[3, 5], 1.0);
        let b = testkit::rand_tensor(&mut rng, &[3], 1.0);
        let x = testkit::rand_tensor(&mut rng, &[4, 5], 1.0);
        let y = linear(&x, &w, &b).unwrap();
        let want = x.matmul(&w.transpose().unwrap()).unwrap().add(&b).unwrap();
        for i in 0..y.len() {
            assert_eq!(y.at(i), want.at(i));
        }
    }
}
