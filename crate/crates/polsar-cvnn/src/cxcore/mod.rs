//! Complex tensors with Wirtinger-calculus reverse-mode autodiff.
//!
//! Gradients follow the convention `grad = dL/dx + j*dL/dy` (equivalently
//! `2*dL/d(conj z)`), so steepest descent on a real loss is `w <- w - lr*grad`
//! without further conjugation.

mod error;
mod gemm;
mod ops;
mod real;
mod tensor;

pub use error::{CxError, Result};
pub use gemm::{gemm_nn, gemm_nt, gemm_tn};
pub use real::{Dtype, Real};
pub use tensor::{CTensor, GradBuf};

pub(crate) use tensor::make_op_output;
