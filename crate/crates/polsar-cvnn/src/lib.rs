//! Complex-valued neural networks for polarimetric SAR reconstruction.
//!
//! The crate is organized in six layers:
//!
//! * [`cxcore`] — complex tensors with Wirtinger-calculus reverse-mode autodiff;
//! * [`cxnn`] — complex layers, initializers, AdamW, and the convolutional
//!   autoencoder (plus its real-valued twin);
//! * [`polarimetry`] — Pauli, Krogager, Cameron and H-alpha target decompositions;
//! * [`metrics`] — reconstruction and decomposition-fidelity metrics;
//! * [`dataio`] — raster container, tiling/splitting, synthetic scene generation;
//! * [`cli`] — the `polsar-cvnn` command-line pipeline.

pub(crate) mod bytes;
pub mod cxcore;
pub mod cxnn;
pub mod dataio;
pub mod metrics;
pub mod polarimetry;
pub mod cli;

#[doc(hidden)]
pub mod testkit;

pub use cxcore::{CTensor, Real};
