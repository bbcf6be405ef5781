//! Non-overlapping tile grids, deterministic fold assignment, and the text
//! manifest tying both to a raster.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

use super::raster::ComplexRaster;
use crate::cxcore::{CxError, Result};

/// Fold assignment of one tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// One square tile anchored at `(row0, col0)` of raster `raster`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileRect {
    pub raster: u32,
    pub row0: u32,
    pub col0: u32,
    pub size: u32,
}

/// Tile list with per-tile fold assignment; `seed` records the shuffle seed
/// once [`split`] has run.
#[derive(Clone, Debug, PartialEq)]
pub struct TileSet {
    pub tiles: Vec<TileRect>,
    pub assignment: Vec<Split>,
    pub seed: Option<u64>,
}

impl TileSet {
    /// Tile counts per fold, `[train, val, test]`.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0usize; 3];
        for s in &self.assignment {
            c[*s as usize] += 1;
        }
        c
    }

    /// Indices of the tiles assigned to `fold`, in tile order.
    pub fn indices_of(&self, fold: Split) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Row-major grid of non-overlapping `size`-aligned tiles; remainders beyond
/// the last full tile are discarded. A size larger than the raster yields an
/// empty grid (the caller decides whether that warrants a warning).
pub fn tile_grid(height: usize, width: usize, size: usize) -> Result<Vec<TileRect>> {
    if size < 8 {
        return Err(CxError::contract("tile", format!("tile size {size} < 8")));
    }
    if height > u32::MAX as usize || width > u32::MAX as usize {
        return Err(CxError::contract("tile", "extent exceeds u32"));
    }
    let rows = height / size;
    let cols = width / size;
    let mut tiles = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            tiles.push(TileRect {
                raster: 0,
                row0: (i * size) as u32,
                col0: (j * size) as u32,
                size: size as u32,
            });
        }
    }
    Ok(tiles)
}

/// Tiles a raster; every tile starts out assigned to the training fold.
pub fn tile(raster: &ComplexRaster, size: usize) -> Result<TileSet> {
    let tiles = tile_grid(raster.height, raster.width, size)?;
    let assignment = vec![Split::Train; tiles.len()];
    Ok(TileSet { tiles, assignment, seed: None })
}

/// Shuffles tiles under `seed` and deals folds by `floor(fraction * N)`,
/// with the remainder going to the training fold. Deterministic: the same
/// `(tiles, fractions, seed)` always produces the same assignment.
pub fn split(set: &TileSet, fractions: [f64; 3], seed: u64) -> Result<TileSet> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(CxError::contract("split", "fractions must be finite and non-negative"));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CxError::contract("split", format!("fractions sum to {sum}, expected 1")));
    }
    let n = set.tiles.len();
    let n_val = (fractions[1] * n as f64).floor() as usize;
    let n_test = (fractions[2] * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![Split::Train; n];
    for &k in order.iter().rev().take(n_test) {
        assignment[k] = Split::Test;
    }
    for &k in order.iter().rev().skip(n_test).take(n_val) {
        assignment[k] = Split::Val;
    }
    Ok(TileSet { tiles: set.tiles.clone(), assignment, seed: Some(seed) })
}

/// Copies one tile window out of a raster; the tile origin is recorded in the
/// copy's meta for later mosaicking.
pub fn extract_tile(raster: &ComplexRaster, rect: &TileRect) -> Result<ComplexRaster> {
    let (r0, c0, sz) = (rect.row0 as usize, rect.col0 as usize, rect.size as usize);
    if r0 + sz > raster.height || c0 + sz > raster.width {
        return Err(CxError::contract(
            "extract_tile",
            format!("tile at ({r0}, {c0}) size {sz} exceeds raster {}x{}", raster.height, raster.width),
        ));
    }
    let mut out = ComplexRaster::zeros(sz, sz, raster.channels, raster.dtype)?;
    for i in 0..sz {
        let src = raster.idx(r0 + i, c0, 0);
        let dst = out.idx(i, 0, 0);
        let row = sz * raster.channels;
        out.data[dst..dst + row].copy_from_slice(&raster.data[src..src + row]);
    }
    out.meta.insert("tile.row0".into(), r0.to_string());
    out.meta.insert("tile.col0".into(), c0.to_string());
    Ok(out)
}

/// Extracts many tiles in parallel.
pub fn extract_tiles(raster: &ComplexRaster, rects: &[TileRect]) -> Result<Vec<ComplexRaster>> {
    rects.par_iter().map(|r| extract_tile(raster, r)).collect()
}

/// Writes the tile manifest: a seed comment line, a header, then one
/// `raster,row0,col0,size,split` row per tile.
pub fn write_manifest(path: impl AsRef<Path>, set: &TileSet) -> Result<()> {
    const OP: &str = "write_manifest";
    if set.tiles.len() != set.assignment.len() {
        return Err(CxError::contract(OP, "tiles and assignment lengths differ"));
    }
    let mut out = String::new();
    match set.seed {
        Some(s) => writeln!(out, "# seed={s}").expect("string write"),
        None => writeln!(out, "# seed=none").expect("string write"),
    }
    out.push_str("raster,row0,col0,size,split\n");
    for (t, s) in set.tiles.iter().zip(&set.assignment) {
        writeln!(out, "{},{},{},{},{}", t.raster, t.row0, t.col0, t.size, s.as_str())
            .expect("string write");
    }
    std::fs::write(path.as_ref(), out).map_err(|e| CxError::io(OP, e))
}

/// Parses a manifest written by [`write_manifest`].
pub fn read_manifest(path: impl AsRef<Path>) -> Result<TileSet> {
    const OP: &str = "read_manifest";
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| CxError::io(OP, e))?;
    let bad = |line: usize, what: &str| CxError::contract(OP, format!("{what} on line {}", line + 1));
    let mut seed = None;
    let mut tiles = Vec::new();
    let mut assignment = Vec::new();
    let mut saw_header = false;
    for (k, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("# seed=") {
            if rest != "none" {
                seed = Some(rest.parse::<u64>().map_err(|_| bad(k, "bad seed"))?);
            }
            continue;
        }
        if !saw_header {
            if line != "raster,row0,col0,size,split" {
                return Err(bad(k, "missing manifest header"));
            }
            saw_header = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad(k, "expected 5 columns"));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| bad(k, "bad integer"));
        tiles.push(TileRect {
            raster: num(cols[0])?,
            row0: num(cols[1])?,
            col0: num(cols[2])?,
            size: num(cols[3])?,
        });
        assignment.push(Split::parse(cols[4]).ok_or_else(|| bad(k, "bad split name"))?);
    }
    if !saw_header {
        return Err(CxError::contract(OP, "empty manifest"));
    }
    Ok(TileSet { tiles, assignment, seed })
}
