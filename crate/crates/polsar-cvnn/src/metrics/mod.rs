//! Reconstruction-fidelity and polarimetric-preservation metrics.

mod classify;
mod recon;
mod report;

pub use classify::{classification_metrics, shift_map, ClassificationMetrics, ShiftPair};
pub use recon::{error_histograms, recon_metrics, Histogram, ReconMetrics};
pub use report::{DecompReport, EvalReport};
