use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Component precision tag carried by serialized tensors and rasters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    /// Complex with f32 components.
    C64,
    /// Complex with f64 components.
    C128,
}

/// Real component scalar: f32 for training, f64 for oracle-grade numerics.
pub trait Real: Float + Debug + Display + Send + Sync + Sum + 'static {
    const DTYPE: Dtype;
    /// Tolerance for the "loss is real-valued" contract, relative to |Re|.
    const IMAG_TOL: Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_usize(v: usize) -> Self {
        Self::from_f64(v as f64)
    }
}

impl Real for f32 {
    const DTYPE: Dtype = Dtype::C64;
    const IMAG_TOL: f32 = 1e-4;
    #[inline]
    fn from_f64(v: f64) -> f32 {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const DTYPE: Dtype = Dtype::C128;
    const IMAG_TOL: f64 = 1e-9;
    #[inline]
    fn from_f64(v: f64) -> f64 {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}
