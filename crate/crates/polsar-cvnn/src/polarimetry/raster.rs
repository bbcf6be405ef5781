//! Raster-level decomposition drivers: apply a per-pixel decomposition to a
//! whole image, carrying per-pixel validity in a label plane instead of
//! aborting, and serialize the result as a complex raster plus u8 sidecar.

use num_complex::Complex64;
use rayon::prelude::*;
use std::path::Path;

use super::cameron::{cameron_classify, CAMERON_REC_THRESHOLD, CAMERON_SYM_THRESHOLD};
use super::halpha::{boxcar_scm, h_alpha, ZoneTable};
use super::krogager::{krogager_decompose, HelicityRule, KrogagerVector};
use super::pauli::{pauli_decompose, PauliVector};
use super::sinclair::Helicity;
use crate::cxcore::{CxError, Result};
use crate::dataio::{read_labels, read_raster, write_labels, write_raster, ComplexRaster, Dtype, LabelPlane};

/// Which decomposition a map holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decomposition {
    Pauli,
    Krogager,
    Cameron,
    HAlpha,
}

impl Decomposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Decomposition::Pauli => "pauli",
            Decomposition::Krogager => "krogager",
            Decomposition::Cameron => "cameron",
            Decomposition::HAlpha => "halpha",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pauli" => Some(Decomposition::Pauli),
            "krogager" => Some(Decomposition::Krogager),
            "cameron" => Some(Decomposition::Cameron),
            "halpha" => Some(Decomposition::HAlpha),
            _ => None,
        }
    }
}

/// Tunables shared by all decomposition drivers.
#[derive(Clone, Debug)]
pub struct DecomposeOpts {
    /// Boxcar window for the H-alpha sample coherency matrix (odd).
    pub boxcar_window: usize,
    pub rec_threshold: f64,
    pub sym_threshold: f64,
    pub helicity_rule: HelicityRule,
    pub zone_table: ZoneTable,
}

impl Default for DecomposeOpts {
    fn default() -> Self {
        Self {
            boxcar_window: 7,
            rec_threshold: CAMERON_REC_THRESHOLD,
            sym_threshold: CAMERON_SYM_THRESHOLD,
            helicity_rule: HelicityRule::default(),
            zone_table: ZoneTable::default(),
        }
    }
}

/// Per-pixel decomposition outputs over a whole raster.
///
/// `channels` holds complex channels whose meaning depends on the
/// decomposition; `labels` carries classes, zones or validity, with 0 always
/// meaning "invalid pixel":
///
/// - Pauli: channels `(alpha, beta, gamma)`; label 1 when valid.
/// - Krogager: channels `(k_s e^{j phi_s}, k_d e^{j 2 theta}, k_h, e^{j phi})`
///   — four channels, pairing each phase with the amplitude it dies with so
///   the parameter set survives the round trip; label is the helicity
///   (1 left, 2 right).
/// - Cameron: channels `(z, rec_angle + j sym_angle, 0)`; label is the class
///   code.
/// - H-alpha: channels `(H + j alpha, p1 + j p2, p3 + j trace)`; label is the
///   zone identifier.
pub struct DecompositionMap {
    pub which: Decomposition,
    pub channels: ComplexRaster,
    pub labels: LabelPlane,
}

const KEY_KIND: &str = "decomp.kind";
const KEY_WINDOW: &str = "decomp.window";

impl DecompositionMap {
    pub fn height(&self) -> usize {
        self.channels.height
    }

    pub fn width(&self) -> usize {
        self.channels.width
    }

    /// True where the pixel decomposed cleanly.
    pub fn valid(&self, row: usize, col: usize) -> bool {
        self.labels.get(row, col) != 0
    }

    /// Writes the channel raster and the label sidecar.
    pub fn save(&self, raster_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
        write_raster(raster_path, &self.channels)?;
        write_labels(labels_path, &self.labels)
    }

    /// Reads a map saved by [`DecompositionMap::save`], checking that the two
    /// files agree on geometry and that the raster records its decomposition.
    pub fn load(raster_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Self> {
        const OP: &str = "decomposition_map";
        let channels = read_raster(raster_path)?;
        let labels = read_labels(labels_path)?;
        if channels.height != labels.height || channels.width != labels.width {
            return Err(CxError::contract(
                OP,
                format!(
                    "raster is {}x{} but label sidecar is {}x{}",
                    channels.height, channels.width, labels.height, labels.width
                ),
            ));
        }
        let kind = channels
            .meta
            .get(KEY_KIND)
            .ok_or_else(|| CxError::contract(OP, format!("missing meta key {KEY_KIND}")))?;
        let which = Decomposition::parse(kind)
            .ok_or_else(|| CxError::contract(OP, format!("unknown decomposition `{kind}`")))?;
        Ok(Self { which, channels, labels })
    }
}

fn helicity_code(h: Helicity) -> u8 {
    match h {
        Helicity::Left => 1,
        Helicity::Right => 2,
    }
}

/// Rebuilds the full Krogager parameter set from one pixel of a Krogager map.
pub fn krogager_from_map(map: &DecompositionMap, row: usize, col: usize) -> Option<KrogagerVector> {
    if map.which != Decomposition::Krogager || !map.valid(row, col) {
        return None;
    }
    let s = map.channels.get(row, col, 0);
    let d = map.channels.get(row, col, 1);
    let h = map.channels.get(row, col, 2);
    let phase = map.channels.get(row, col, 3);
    let helicity = if map.labels.get(row, col) == 1 { Helicity::Left } else { Helicity::Right };
    Some(KrogagerVector {
        k_s: s.norm(),
        k_d: d.norm(),
        k_h: h.norm(),
        theta: 0.5 * d.arg(),
        phi: phase.arg(),
        phi_s: s.arg(),
        helicity,
    })
}

/// Applies one decomposition to every pixel of a 3- or 4-channel raster.
///
/// Cross-pol channels are symmetrized for the Pauli, Krogager and H-alpha
/// paths (which are defined on reciprocal scatterers); Cameron sees the raw
/// four-channel pixel, since its reciprocity angle is the point. Bad pixels
/// (non-finite samples) are flagged with label 0, never aborting the raster.
pub fn decompose_raster(
    img: &ComplexRaster,
    which: Decomposition,
    opts: &DecomposeOpts,
) -> Result<DecompositionMap> {
    const OP: &str = "decompose_raster";
    let (h, w) = (img.height, img.width);
    let zero = Complex64::new(0.0, 0.0);
    let n_ch = if which == Decomposition::Krogager { 4 } else { 3 };
    let mut channels = ComplexRaster::zeros(h, w, n_ch, Dtype::C128)?;
    let mut labels = LabelPlane::zeros(h, w)?;
    channels.meta.insert(KEY_KIND.into(), which.as_str().into());

    if which == Decomposition::Cameron {
        let (rec, sym) = (opts.rec_threshold, opts.sym_threshold);
        if !(rec > 0.0 && rec < std::f64::consts::FRAC_PI_2 && sym > 0.0 && sym < std::f64::consts::FRAC_PI_2) {
            return Err(CxError::contract(OP, "Cameron thresholds must lie in (0, pi/2)"));
        }
    }

    match which {
        Decomposition::HAlpha => {
            channels.meta.insert(KEY_WINDOW.into(), opts.boxcar_window.to_string());
            opts.zone_table.validate()?;
            let mut field = vec![PauliVector::default(); h * w];
            let mut finite = vec![true; h * w];
            field
                .par_chunks_mut(w)
                .zip(finite.par_chunks_mut(w))
                .enumerate()
                .for_each(|(r, (frow, mrow))| {
                    for c in 0..w {
                        let p = img.pixel(r, c);
                        if p.is_finite() {
                            frow[c] = pauli_decompose(&p.symmetrized());
                        } else {
                            mrow[c] = false;
                        }
                    }
                });
            let scm = boxcar_scm(&field, h, w, opts.boxcar_window)?;
            let table = &opts.zone_table;
            channels
                .data
                .par_chunks_mut(3 * w)
                .zip(labels.data.par_chunks_mut(w))
                .enumerate()
                .for_each(|(r, (crow, lrow))| {
                    for c in 0..w {
                        if !finite[r * w + c] {
                            continue;
                        }
                        match h_alpha(&scm[r * w + c], table) {
                            Ok(res) if res.valid => {
                                let p = res.pseudo_probs;
                                crow[3 * c] = Complex64::new(res.entropy, res.alpha_mean);
                                crow[3 * c + 1] = Complex64::new(p[0], p[1]);
                                crow[3 * c + 2] =
                                    Complex64::new(p[2], res.eigenvalues.iter().sum());
                                lrow[c] = res.zone;
                            }
                            _ => {}
                        }
                    }
                });
        }
        _ => {
            channels
                .data
                .par_chunks_mut(n_ch * w)
                .zip(labels.data.par_chunks_mut(w))
                .enumerate()
                .for_each(|(r, (crow, lrow))| {
                    for c in 0..w {
                        let p = img.pixel(r, c);
                        if !p.is_finite() {
                            continue;
                        }
                        let out = &mut crow[n_ch * c..n_ch * (c + 1)];
                        match which {
                            Decomposition::Pauli => {
                                let k = pauli_decompose(&p.symmetrized());
                                out.copy_from_slice(&[k.alpha, k.beta, k.gamma]);
                                lrow[c] = 1;
                            }
                            Decomposition::Krogager => {
                                if let Ok(v) =
                                    krogager_decompose(&p.symmetrized(), opts.helicity_rule)
                                {
                                    out.copy_from_slice(&[
                                        Complex64::from_polar(v.k_s, v.phi_s),
                                        Complex64::from_polar(v.k_d, 2.0 * v.theta),
                                        v.k_h.into(),
                                        Complex64::from_polar(1.0, v.phi),
                                    ]);
                                    lrow[c] = helicity_code(v.helicity);
                                }
                            }
                            Decomposition::Cameron => {
                                if let Ok(res) =
                                    cameron_classify(&p, opts.rec_threshold, opts.sym_threshold)
                                {
                                    out.copy_from_slice(&[
                                        res.z,
                                        Complex64::new(res.rec_angle, res.sym_angle),
                                        zero,
                                    ]);
                                    lrow[c] = res.label();
                                }
                            }
                            Decomposition::HAlpha => unreachable!("handled above"),
                        }
                    }
                });
        }
    }

    Ok(DecompositionMap { which, channels, labels })
}
