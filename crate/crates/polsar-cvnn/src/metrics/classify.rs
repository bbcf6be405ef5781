//! Agreement metrics between two label planes and the zone-shift analysis of
//! paired entropy/alpha maps.

use std::collections::BTreeMap;

use crate::cxcore::{CxError, Result};
use crate::dataio::LabelPlane;
use crate::polarimetry::{Decomposition, DecompositionMap};

/// Confusion-matrix summary of a label plane against its reference. Pixels
/// whose label is 0 in either plane are excluded pairwise; scores are
/// percentages.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationMetrics {
    pub oa: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    /// `confusion[ref_class - 1][rec_class - 1]` over classes `1..=k`.
    pub confusion: Vec<Vec<u64>>,
    pub valid_pairs: u64,
}

/// Overall accuracy, F1 scores and the confusion matrix of `rec` against
/// `reference` for classes `1..=k`.
///
/// Macro-F1 averages per-class F1 over the classes present in either plane;
/// weighted-F1 weights each class by its reference support.
pub fn classification_metrics(
    reference: &LabelPlane,
    rec: &LabelPlane,
    k: usize,
) -> Result<ClassificationMetrics> {
    const OP: &str = "classification_metrics";
    if reference.height != rec.height || reference.width != rec.width {
        return Err(CxError::contract(
            OP,
            format!(
                "shape mismatch: {}x{} vs {}x{}",
                reference.height, reference.width, rec.height, rec.width
            ),
        ));
    }
    if k == 0 {
        return Err(CxError::contract(OP, "need at least one class"));
    }
    let mut confusion = vec![vec![0u64; k]; k];
    for (&a, &b) in reference.data.iter().zip(&rec.data) {
        if a == 0 || b == 0 {
            continue;
        }
        if a as usize > k || b as usize > k {
            return Err(CxError::contract(
                OP,
                format!("label pair ({a}, {b}) exceeds class count {k}"),
            ));
        }
        confusion[a as usize - 1][b as usize - 1] += 1;
    }

    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let oa = if total > 0 { 100.0 * trace as f64 / total as f64 } else { 0.0 };

    let mut macro_sum = 0.0;
    let mut macro_n = 0u64;
    let mut weighted_sum = 0.0;
    let mut support = 0u64;
    for (c, conf_row) in confusion.iter().enumerate() {
        let row: u64 = conf_row.iter().sum();
        let col: u64 = (0..k).map(|r| confusion[r][c]).sum();
        if row + col == 0 {
            continue;
        }
        let tp = conf_row[c] as f64;
        let precision = if col > 0 { tp / col as f64 } else { 0.0 };
        let recall = if row > 0 { tp / row as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        macro_sum += f1;
        macro_n += 1;
        weighted_sum += f1 * row as f64;
        support += row;
    }
    let macro_f1 = if macro_n > 0 { 100.0 * macro_sum / macro_n as f64 } else { 0.0 };
    let weighted_f1 = if support > 0 { 100.0 * weighted_sum / support as f64 } else { 0.0 };

    Ok(ClassificationMetrics { oa, macro_f1, weighted_f1, confusion, valid_pairs: total })
}

/// One arrow of the zone-shift diagram: pixels that left zone `from` for zone
/// `to`, with their mean `(H, alpha)` position in each map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftPair {
    pub from: u8,
    pub to: u8,
    pub count: u64,
    /// Mean (entropy, alpha) of the shifted pixels in the reference map.
    pub centroid_from: (f64, f64),
    /// Mean (entropy, alpha) of the same pixels in the reconstructed map.
    pub centroid_to: (f64, f64),
}

/// Ordered zone-transition table between two H-alpha maps, for arrow plots.
/// Pixels invalid in either map are skipped; pairs are sorted by `(from, to)`.
pub fn shift_map(reference: &DecompositionMap, rec: &DecompositionMap) -> Result<Vec<ShiftPair>> {
    const OP: &str = "shift_map";
    if reference.which != Decomposition::HAlpha || rec.which != Decomposition::HAlpha {
        return Err(CxError::contract(OP, "shift analysis needs two H-alpha maps"));
    }
    if reference.height() != rec.height() || reference.width() != rec.width() {
        return Err(CxError::contract(
            OP,
            format!(
                "shape mismatch: {}x{} vs {}x{}",
                reference.height(),
                reference.width(),
                rec.height(),
                rec.width()
            ),
        ));
    }
    struct Acc {
        count: u64,
        from: (f64, f64),
        to: (f64, f64),
    }
    let mut pairs: BTreeMap<(u8, u8), Acc> = BTreeMap::new();
    for r in 0..reference.height() {
        for c in 0..reference.width() {
            let (za, zb) = (reference.labels.get(r, c), rec.labels.get(r, c));
            if za == 0 || zb == 0 || za == zb {
                continue;
            }
            let ha = reference.channels.get(r, c, 0);
            let hb = rec.channels.get(r, c, 0);
            let acc = pairs
                .entry((za, zb))
                .or_insert(Acc { count: 0, from: (0.0, 0.0), to: (0.0, 0.0) });
            acc.count += 1;
            acc.from.0 += ha.re;
            acc.from.1 += ha.im;
            acc.to.0 += hb.re;
            acc.to.1 += hb.im;
        }
    }
    Ok(pairs
        .into_iter()
        .map(|((from, to), a)| {
            let n = a.count as f64;
            ShiftPair {
                from,
                to,
                count: a.count,
                centroid_from: (a.from.0 / n, a.from.1 / n),
                centroid_to: (a.to.0 / n, a.to.1 / n),
            }
        })
        .collect())
}
