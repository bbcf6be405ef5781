//! Weight initialization schemes.
//!
//! Complex variants draw Re and Im i.i.d. so each component carries half the
//! variance of the full complex distribution; real variants leave the
//! imaginary plane zero and use the usual fan-in scaling.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::cxcore::{CTensor, CxError, Real, Result};

/// Initialization scheme for a layer parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    ComplexHeNormal,
    ComplexHeUniform,
    ComplexXavierNormal,
    ComplexXavierUniform,
    RealHeNormal,
    RealHeUniform,
}

impl Init {
    /// Per-component standard deviation (normal) or symmetric bound (uniform).
    fn scale(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            Init::ComplexHeNormal => (1.0 / fan_in as f64).sqrt(),
            Init::ComplexHeUniform => (3.0 / fan_in as f64).sqrt(),
            Init::ComplexXavierNormal => (1.0 / (fan_in + fan_out) as f64).sqrt(),
            Init::ComplexXavierUniform => (3.0 / (fan_in + fan_out) as f64).sqrt(),
            Init::RealHeNormal => (2.0 / fan_in as f64).sqrt(),
            Init::RealHeUniform => (6.0 / fan_in as f64).sqrt(),
        }
    }

    fn is_uniform(self) -> bool {
        matches!(
            self,
            Init::ComplexHeUniform | Init::ComplexXavierUniform | Init::RealHeUniform
        )
    }

    /// Real schemes fill only the real plane.
    pub fn is_real(self) -> bool {
        matches!(self, Init::RealHeNormal | Init::RealHeUniform)
    }
}

type Sampler = Box<dyn FnMut(&mut dyn rand::RngCore) -> f64>;

/// Draws a gradient-enabled parameter tensor under `scheme`.
pub fn init_param<T: Real>(
    shape: &[usize],
    scheme: Init,
    fan_in: usize,
    fan_out: usize,
    rng: &mut impl Rng,
) -> Result<CTensor<T>> {
    if fan_in == 0 || fan_out == 0 {
        return Err(CxError::contract("init_param", "fan extents must be positive"));
    }
    let n: usize = shape.iter().product();
    let scale = scheme.scale(fan_in, fan_out);
    let mut draw: Sampler = if scheme.is_uniform() {
        let d = Uniform::new_inclusive(-scale, scale);
        Box::new(move |r| d.sample(r))
    } else {
        let d = Normal::new(0.0, scale).expect("finite sigma");
        Box::new(move |r| d.sample(r))
    };
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for _ in 0..n {
        re.push(T::from_f64(draw(rng)));
        im.push(if scheme.is_real() { T::zero() } else { T::from_f64(draw(rng)) });
    }
    Ok(CTensor::from_parts(shape, re, im)?.requires_grad())
}

/// Zero-filled gradient-enabled parameter (biases and shifts).
pub fn zero_param<T: Real>(shape: &[usize]) -> CTensor<T> {
    CTensor::zeros(shape).requires_grad()
}

/// Constant real-plane parameter (normalization gains).
pub fn const_param<T: Real>(shape: &[usize], value: f64) -> CTensor<T> {
    let n: usize = shape.iter().product();
    let re = vec![T::from_f64(value); n];
    let im = vec![T::zero(); n];
    CTensor::from_parts(shape, re, im).expect("consistent shape").requires_grad()
}
