//! Polarimetric target decompositions: Pauli, Krogager, Cameron, and the
//! eigenvalue-based H/alpha analysis of the coherency matrix.

mod cameron;
mod eigen;
mod halpha;
mod krogager;
mod pauli;
mod raster;
mod sinclair;

pub use cameron::{
    cameron_classify, disk_distance, CameronClass, CameronResult, CANONICAL_Z,
    CAMERON_REC_THRESHOLD, CAMERON_SYM_THRESHOLD,
};
pub use eigen::{eigh3, hermitized};
pub use halpha::{
    boxcar_scm, classify_zone, entropy3, feasibility_envelope, h_alpha, CoherencyMatrix,
    FeasibilityCurve, HAlphaResult, ZoneTable,
};
pub use krogager::{
    circular_basis, krogager_decompose, krogager_resynthesize, HelicityRule, KrogagerVector,
};
pub use pauli::{pauli_compose, pauli_decompose, PauliVector};
pub use raster::{
    decompose_raster, krogager_from_map, DecomposeOpts, Decomposition, DecompositionMap,
};
pub use sinclair::{Helicity, SinclairPixel};
