//! Evaluation report assembly and its on-disk form: a flat key=value summary
//! plus CSV files for confusion matrices, histograms and zone shifts.

use std::fmt::Write as _;
use std::path::Path;

use super::classify::{ClassificationMetrics, ShiftPair};
use super::recon::{Histogram, ReconMetrics};
use crate::cxcore::{CxError, Result};

/// Classification agreement for one decomposition, tagged by its name.
#[derive(Clone, Debug)]
pub struct DecompReport {
    pub name: String,
    pub metrics: ClassificationMetrics,
}

/// Everything `evaluate` measures for one original/reconstruction pair.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub recon: ReconMetrics,
    pub decomps: Vec<DecompReport>,
    pub amp_err: Histogram,
    pub phase_err: Histogram,
    pub shifts: Vec<ShiftPair>,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CxError::io("eval_report", e))
}

fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for (i, &c) in h.counts.iter().enumerate() {
        let (l, r) = h.edges(i);
        writeln!(out, "{l},{r},{c}").expect("string write");
    }
    out
}

impl EvalReport {
    /// Writes `report.txt`, `confusion_<name>.csv` per decomposition,
    /// `amp_err_hist.csv`, `phase_err_hist.csv` and `shifts.csv` under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| CxError::io("eval_report", e))?;

        let mut txt = String::new();
        writeln!(txt, "mse={}", self.recon.mse).expect("string write");
        writeln!(txt, "psnr_db={}", self.recon.psnr).expect("string write");
        writeln!(txt, "ssim={}", self.recon.ssim).expect("string write");
        for d in &self.decomps {
            writeln!(txt, "{}.oa={}", d.name, d.metrics.oa).expect("string write");
            writeln!(txt, "{}.macro_f1={}", d.name, d.metrics.macro_f1).expect("string write");
            writeln!(txt, "{}.weighted_f1={}", d.name, d.metrics.weighted_f1).expect("string write");
            writeln!(txt, "{}.valid_pairs={}", d.name, d.metrics.valid_pairs).expect("string write");
        }
        writeln!(txt, "shift_pairs={}", self.shifts.len()).expect("string write");
        write_file(&dir.join("report.txt"), &txt)?;

        for d in &self.decomps {
            let k = d.metrics.confusion.len();
            let mut csv = String::from("ref_class");
            for c in 1..=k {
                write!(csv, ",rec_{c}").expect("string write");
            }
            csv.push('\n');
            for (r, row) in d.metrics.confusion.iter().enumerate() {
                write!(csv, "{}", r + 1).expect("string write");
                for v in row {
                    write!(csv, ",{v}").expect("string write");
                }
                csv.push('\n');
            }
            write_file(&dir.join(format!("confusion_{}.csv", d.name)), &csv)?;
        }

        write_file(&dir.join("amp_err_hist.csv"), &histogram_csv(&self.amp_err))?;
        write_file(&dir.join("phase_err_hist.csv"), &histogram_csv(&self.phase_err))?;

        let mut csv = String::from("from,to,count,h_from,alpha_from,h_to,alpha_to\n");
        for s in &self.shifts {
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                s.from, s.to, s.count, s.centroid_from.0, s.centroid_from.1, s.centroid_to.0, s.centroid_to.1
            )
            .expect("string write");
        }
        write_file(&dir.join("shifts.csv"), &csv)
    }
}
