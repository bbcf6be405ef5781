//! CPLXR container: bit-exact storage for complex rasters and label planes.
//!
//! Layout: magic `CPLXR`, version u16, dtype u8 (0 = c64, 1 = c128, 2 = u8
//! labels), u32 height/width/channels, u32 meta length + `key=value` lines,
//! then the little-endian payload, channel-fastest. One format serves
//! rasters, tiles and label sidecars.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bytes::{BinReader, BinWriter};
use crate::cxcore::{CxError, Result};
use crate::polarimetry::SinclairPixel;

const MAGIC: &[u8; 5] = b"CPLXR";
const VERSION: u16 = 1;
const LABEL_TAG: u8 = 2;
const META_CAP: u32 = 16 << 20;

/// On-disk component precision of a complex payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    C64,
    C128,
}

impl Dtype {
    pub fn tag(self) -> u8 {
        match self {
            Dtype::C64 => 0,
            Dtype::C128 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Dtype::C64),
            1 => Some(Dtype::C128),
            _ => None,
        }
    }
}

/// Complex raster with row-major pixels and channel-fastest samples, so the
/// sample for `(row, col, channel)` lives at `(row * width + col) * channels
/// + channel`. Channel order is `(hh, hv, vh, vv)` or `(hh, hv, vv)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexRaster {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub dtype: Dtype,
    pub data: Vec<Complex64>,
    pub meta: BTreeMap<String, String>,
}

impl ComplexRaster {
    pub fn zeros(height: usize, width: usize, channels: usize, dtype: Dtype) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(CxError::contract("raster", "height and width must be positive"));
        }
        if channels != 3 && channels != 4 {
            return Err(CxError::contract("raster", format!("channels {channels} not in {{3, 4}}")));
        }
        let n = height
            .checked_mul(width)
            .and_then(|hw| hw.checked_mul(channels))
            .ok_or_else(|| CxError::contract("raster", "extent product overflows"))?;
        Ok(ComplexRaster {
            height,
            width,
            channels,
            dtype,
            data: vec![Complex64::default(); n],
            meta: BTreeMap::new(),
        })
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.width + col) * self.channels + channel
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> Complex64 {
        self.data[self.idx(row, col, channel)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, v: Complex64) {
        let k = self.idx(row, col, channel);
        self.data[k] = v;
    }

    /// Sinclair matrix at one pixel; a 3-channel raster is reciprocal by
    /// construction, so its cross channel fills both off-diagonal slots.
    pub fn pixel(&self, row: usize, col: usize) -> SinclairPixel {
        if self.channels == 4 {
            SinclairPixel::new(
                self.get(row, col, 0),
                self.get(row, col, 1),
                self.get(row, col, 2),
                self.get(row, col, 3),
            )
        } else {
            SinclairPixel::reciprocal(
                self.get(row, col, 0),
                self.get(row, col, 1),
                self.get(row, col, 2),
            )
        }
    }

    /// Stores a pixel; on a 3-channel raster the `hv` slot takes the
    /// symmetrized cross channel.
    pub fn set_pixel(&mut self, row: usize, col: usize, p: &SinclairPixel) {
        self.set(row, col, 0, p.s_hh);
        if self.channels == 4 {
            self.set(row, col, 1, p.s_hv);
            self.set(row, col, 2, p.s_vh);
            self.set(row, col, 3, p.s_vv);
        } else {
            self.set(row, col, 1, 0.5 * (p.s_hv + p.s_vh));
            self.set(row, col, 2, p.s_vv);
        }
    }

    /// Expands a 3-channel reciprocal raster to the four Sinclair channels
    /// with `vh := hv`; a 4-channel raster is returned unchanged.
    pub fn expand_to_four(&self) -> ComplexRaster {
        if self.channels == 4 {
            return self.clone();
        }
        let mut out = ComplexRaster::zeros(self.height, self.width, 4, self.dtype)
            .expect("extents already validated");
        out.meta = self.meta.clone();
        for row in 0..self.height {
            for col in 0..self.width {
                let hv = self.get(row, col, 1);
                out.set(row, col, 0, self.get(row, col, 0));
                out.set(row, col, 1, hv);
                out.set(row, col, 2, hv);
                out.set(row, col, 3, self.get(row, col, 2));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest sample modulus.
    pub fn max_amplitude(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }
}

/// Single-channel u8 plane sharing the CPLXR container (dtype tag 2); used
/// for class and zone labels, with 0 reserved for unlabeled pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelPlane {
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
    pub meta: BTreeMap<String, String>,
}

impl LabelPlane {
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(CxError::contract("labels", "height and width must be positive"));
        }
        Ok(LabelPlane { height, width, data: vec![0; height * width], meta: BTreeMap::new() })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.data[row * self.width + col] = v;
    }
}

fn fmt_err(op: &'static str, pos: u64, detail: impl std::fmt::Display) -> CxError {
    CxError::contract(op, format!("{detail} at byte {pos}"))
}

fn wrap_io(op: &'static str, pos: u64, e: std::io::Error) -> CxError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        fmt_err(op, pos, "truncated file")
    } else {
        CxError::io(op, e)
    }
}

fn encode_meta(op: &'static str, meta: &BTreeMap<String, String>) -> Result<Vec<u8>> {
    let mut out = String::new();
    for (k, v) in meta {
        if k.is_empty() || k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(CxError::contract(op, format!("meta key `{k}` is not encodable")));
        }
        out.push_str(k);
        out.push('=');
        out.push_str(v);
        out.push('\n');
    }
    Ok(out.into_bytes())
}

fn decode_meta(op: &'static str, pos: u64, bytes: &[u8]) -> Result<BTreeMap<String, String>> {
    let text = std::str::from_utf8(bytes).map_err(|_| fmt_err(op, pos, "meta is not utf-8"))?;
    let mut meta = BTreeMap::new();
    for line in text.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| fmt_err(op, pos, format!("meta line `{line}` lacks `=`")))?;
        meta.insert(k.to_string(), v.to_string());
    }
    Ok(meta)
}

struct Header {
    tag: u8,
    height: usize,
    width: usize,
    channels: usize,
    meta: BTreeMap<String, String>,
}

fn read_header<R: Read>(op: &'static str, r: &mut BinReader<R>) -> Result<Header> {
    let magic = r.bytes(5).map_err(|e| wrap_io(op, r.pos(), e))?;
    if magic != MAGIC {
        return Err(fmt_err(op, 0, "bad magic"));
    }
    let pos = r.pos();
    let version = r.u16().map_err(|e| wrap_io(op, pos, e))?;
    if version != VERSION {
        return Err(fmt_err(op, pos, format!("unsupported version {version}")));
    }
    let tag = r.u8().map_err(|e| wrap_io(op, r.pos(), e))?;
    let height = r.u32().map_err(|e| wrap_io(op, r.pos(), e))? as usize;
    let width = r.u32().map_err(|e| wrap_io(op, r.pos(), e))? as usize;
    let channels = r.u32().map_err(|e| wrap_io(op, r.pos(), e))? as usize;
    if height == 0 || width == 0 || channels == 0 {
        return Err(fmt_err(op, 8, "zero extent"));
    }
    let pos = r.pos();
    let meta_len = r.u32().map_err(|e| wrap_io(op, pos, e))?;
    if meta_len > META_CAP {
        return Err(fmt_err(op, pos, format!("meta length {meta_len} exceeds cap")));
    }
    let meta_pos = r.pos();
    let meta_bytes = r.bytes(meta_len as usize).map_err(|e| wrap_io(op, meta_pos, e))?;
    let meta = decode_meta(op, meta_pos, &meta_bytes)?;
    Ok(Header { tag, height, width, channels, meta })
}

fn write_header<W: Write>(
    op: &'static str,
    w: &mut BinWriter<W>,
    tag: u8,
    height: usize,
    width: usize,
    channels: usize,
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    let meta_bytes = encode_meta(op, meta)?;
    if meta_bytes.len() as u64 > META_CAP as u64 {
        return Err(CxError::contract(op, "meta exceeds size cap"));
    }
    let io = |e| CxError::io(op, e);
    w.bytes(MAGIC).map_err(io)?;
    w.u16(VERSION).map_err(io)?;
    w.u8(tag).map_err(io)?;
    w.u32(height as u32).map_err(io)?;
    w.u32(width as u32).map_err(io)?;
    w.u32(channels as u32).map_err(io)?;
    w.u32(meta_bytes.len() as u32).map_err(io)?;
    w.bytes(&meta_bytes).map_err(io)?;
    Ok(())
}

fn expect_end<R: Read>(op: &'static str, r: &mut BinReader<R>) -> Result<()> {
    let pos = r.pos();
    match r.bytes(1) {
        Ok(_) => Err(fmt_err(op, pos, "trailing data")),
        Err(_) => Ok(()),
    }
}

fn sample_count(op: &'static str, h: usize, w: usize, c: usize) -> Result<usize> {
    h.checked_mul(w)
        .and_then(|hw| hw.checked_mul(c))
        .ok_or_else(|| CxError::contract(op, "extent product overflows"))
}

/// Reads a complex raster (dtype 0 or 1); extents over u32 or a label-plane
/// file are rejected.
pub fn read_raster(path: impl AsRef<Path>) -> Result<ComplexRaster> {
    const OP: &str = "read_raster";
    let file = File::open(path.as_ref()).map_err(|e| CxError::io(OP, e))?;
    let mut r = BinReader::new(BufReader::new(file));
    let hd = read_header(OP, &mut r)?;
    let dtype = Dtype::from_tag(hd.tag)
        .ok_or_else(|| fmt_err(OP, 7, format!("dtype tag {} is not a complex raster", hd.tag)))?;
    if hd.channels != 3 && hd.channels != 4 {
        return Err(fmt_err(OP, 16, format!("channels {} not in {{3, 4}}", hd.channels)));
    }
    let n = sample_count(OP, hd.height, hd.width, hd.channels)?;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let pos = r.pos();
        let z = match dtype {
            Dtype::C64 => {
                let re = r.f32().map_err(|e| wrap_io(OP, pos, e))?;
                let im = r.f32().map_err(|e| wrap_io(OP, pos, e))?;
                Complex64::new(re as f64, im as f64)
            }
            Dtype::C128 => {
                let re = r.f64().map_err(|e| wrap_io(OP, pos, e))?;
                let im = r.f64().map_err(|e| wrap_io(OP, pos, e))?;
                Complex64::new(re, im)
            }
        };
        data.push(z);
    }
    expect_end(OP, &mut r)?;
    Ok(ComplexRaster {
        height: hd.height,
        width: hd.width,
        channels: hd.channels,
        dtype,
        data,
        meta: hd.meta,
    })
}

/// Writes a complex raster; a C64 container truncates components to f32.
pub fn write_raster(path: impl AsRef<Path>, raster: &ComplexRaster) -> Result<()> {
    const OP: &str = "write_raster";
    let n = sample_count(OP, raster.height, raster.width, raster.channels)?;
    if raster.data.len() != n {
        return Err(CxError::contract(
            OP,
            format!("data length {} does not match extents", raster.data.len()),
        ));
    }
    if raster.channels != 3 && raster.channels != 4 {
        return Err(CxError::contract(OP, format!("channels {} not in {{3, 4}}", raster.channels)));
    }
    if raster.height > u32::MAX as usize || raster.width > u32::MAX as usize {
        return Err(CxError::contract(OP, "extent exceeds u32"));
    }
    let file = File::create(path.as_ref()).map_err(|e| CxError::io(OP, e))?;
    let mut w = BinWriter::new(BufWriter::new(file));
    write_header(OP, &mut w, raster.dtype.tag(), raster.height, raster.width, raster.channels, &raster.meta)?;
    let io = |e| CxError::io(OP, e);
    for z in &raster.data {
        match raster.dtype {
            Dtype::C64 => {
                w.f32(z.re as f32).map_err(io)?;
                w.f32(z.im as f32).map_err(io)?;
            }
            Dtype::C128 => {
                w.f64(z.re).map_err(io)?;
                w.f64(z.im).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Reads a u8 label plane (dtype tag 2, single channel).
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelPlane> {
    const OP: &str = "read_labels";
    let file = File::open(path.as_ref()).map_err(|e| CxError::io(OP, e))?;
    let mut r = BinReader::new(BufReader::new(file));
    let hd = read_header(OP, &mut r)?;
    if hd.tag != LABEL_TAG {
        return Err(fmt_err(OP, 7, format!("dtype tag {} is not a label plane", hd.tag)));
    }
    if hd.channels != 1 {
        return Err(fmt_err(OP, 16, format!("label plane must have 1 channel, got {}", hd.channels)));
    }
    let n = sample_count(OP, hd.height, hd.width, 1)?;
    let pos = r.pos();
    let data = r.bytes(n).map_err(|e| wrap_io(OP, pos, e))?;
    expect_end(OP, &mut r)?;
    Ok(LabelPlane { height: hd.height, width: hd.width, data, meta: hd.meta })
}

/// Writes a u8 label plane.
pub fn write_labels(path: impl AsRef<Path>, labels: &LabelPlane) -> Result<()> {
    const OP: &str = "write_labels";
    if labels.data.len() != labels.height * labels.width {
        return Err(CxError::contract(OP, "data length does not match extents"));
    }
    let file = File::create(path.as_ref()).map_err(|e| CxError::io(OP, e))?;
    let mut w = BinWriter::new(BufWriter::new(file));
    write_header(OP, &mut w, LABEL_TAG, labels.height, labels.width, 1, &labels.meta)?;
    let io = |e| CxError::io(OP, e);
    w.bytes(&labels.data).map_err(io)?;
    w.flush().map_err(io)
}

/// Imports a header-less interleaved `(re, im)` little-endian float binary
/// with caller-supplied geometry; the file length must match exactly.
pub fn import_raw(
    path: impl AsRef<Path>,
    height: usize,
    width: usize,
    channels: usize,
    dtype: Dtype,
) -> Result<ComplexRaster> {
    const OP: &str = "import_raw";
    let mut out = ComplexRaster::zeros(height, width, channels, dtype)?;
    let file = File::open(path.as_ref()).map_err(|e| CxError::io(OP, e))?;
    let meta_len = file.metadata().map_err(|e| CxError::io(OP, e))?.len();
    let n = out.data.len();
    let sample_bytes = match dtype {
        Dtype::C64 => 8,
        Dtype::C128 => 16,
    };
    let want = n as u64 * sample_bytes;
    if meta_len != want {
        return Err(CxError::contract(
            OP,
            format!("file is {meta_len} bytes, geometry needs {want}"),
        ));
    }
    let mut r = BinReader::new(BufReader::new(file));
    for z in out.data.iter_mut() {
        let pos = r.pos();
        *z = match dtype {
            Dtype::C64 => {
                let re = r.f32().map_err(|e| wrap_io(OP, pos, e))?;
                let im = r.f32().map_err(|e| wrap_io(OP, pos, e))?;
                Complex64::new(re as f64, im as f64)
            }
            Dtype::C128 => {
                let re = r.f64().map_err(|e| wrap_io(OP, pos, e))?;
                let im = r.f64().map_err(|e| wrap_io(OP, pos, e))?;
                Complex64::new(re, im)
            }
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("cplxr-test-{}-{name}", std::process::id()));
        p
    }

    fn random_raster(seed: u64, h: usize, w: usize, c: usize, dtype: Dtype) -> ComplexRaster {
        let mut rng = crate::testkit::rng(seed);
        let mut r = ComplexRaster::zeros(h, w, c, dtype).unwrap();
        for z in r.data.iter_mut() {
            // f32-representable components keep C64 containers lossless.
            let re = rng.gen_range(-2.0f32..2.0f32);
            let im = rng.gen_range(-2.0f32..2.0f32);
            *z = Complex64::new(re as f64, im as f64);
        }
        r.meta.insert("source".into(), "unit-test".into());
        r
    }

    #[test]
    fn raster_round_trip_is_byte_identical() {
        for (seed, dtype) in [(1, Dtype::C64), (2, Dtype::C128)] {
            let r = random_raster(seed, 16, 16, 4, dtype);
            let p1 = temp_path(&format!("rt-{seed}-a.cplxr"));
            let p2 = temp_path(&format!("rt-{seed}-b.cplxr"));
            write_raster(&p1, &r).unwrap();
            let back = read_raster(&p1).unwrap();
            assert_eq!(back, r);
            write_raster(&p2, &back).unwrap();
            assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
            std::fs::remove_file(&p1).unwrap();
            std::fs::remove_file(&p2).unwrap();
        }
    }

    #[test]
    fn truncated_file_reports_an_offset() {
        let r = random_raster(3, 8, 8, 3, Dtype::C128);
        let p = temp_path("trunc.cplxr");
        write_raster(&p, &r).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        let err = read_raster(&p).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
        assert!(err.contains("at byte"), "{err}");
        std::fs::remove_file(&p).unwrap();
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let r = random_raster(4, 4, 4, 3, Dtype::C64);
        let p = temp_path("magic.cplxr");
        write_raster(&p, &r).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[0] = b'X';
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_raster(&p).unwrap_err().to_string().contains("bad magic"));

        let mut bytes = std::fs::read(&p).unwrap();
        bytes[0] = b'C';
        bytes[5] = 9;
        std::fs::write(&p, &bytes).unwrap();
        let err = read_raster(&p).unwrap_err().to_string();
        assert!(err.contains("version") && err.contains("at byte 5"), "{err}");
        std::fs::remove_file(&p).unwrap();
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let r = random_raster(5, 4, 4, 3, Dtype::C64);
        let p = temp_path("trail.cplxr");
        write_raster(&p, &r).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.push(0);
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_raster(&p).unwrap_err().to_string().contains("trailing"));
        std::fs::remove_file(&p).unwrap();
    }

    #[test]
    fn three_channel_raster_expands_reciprocally() {
        let r = random_raster(6, 5, 7, 3, Dtype::C128);
        let four = r.expand_to_four();
        assert_eq!(four.channels, 4);
        for i in 0..r.height {
            for j in 0..r.width {
                assert_eq!(four.get(i, j, 1), four.get(i, j, 2));
                assert_eq!(four.get(i, j, 0), r.get(i, j, 0));
                assert_eq!(four.get(i, j, 3), r.get(i, j, 2));
                assert_eq!(four.pixel(i, j), r.pixel(i, j));
            }
        }
    }

    #[test]
    fn label_plane_round_trips() {
        let mut l = LabelPlane::zeros(9, 5).unwrap();
        let mut rng = crate::testkit::rng(7);
        for v in l.data.iter_mut() {
            *v = rng.gen_range(0..=9);
        }
        l.meta.insert("labels".into(), "zone".into());
        let p = temp_path("labels.cplxr");
        write_labels(&p, &l).unwrap();
        assert_eq!(read_labels(&p).unwrap(), l);
        // A raster reader must refuse the label tag.
        assert!(read_raster(&p).unwrap_err().to_string().contains("not a complex raster"));
        std::fs::remove_file(&p).unwrap();
    }

    #[test]
    fn raw_import_matches_geometry_or_fails() {
        let r = random_raster(8, 6, 4, 4, Dtype::C128);
        let p = temp_path("raw.bin");
        let mut bytes = Vec::new();
        for z in &r.data {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
        std::fs::write(&p, &bytes).unwrap();
        let got = import_raw(&p, 6, 4, 4, Dtype::C128).unwrap();
        assert_eq!(got.data, r.data);
        let err = import_raw(&p, 6, 5, 4, Dtype::C128).unwrap_err().to_string();
        assert!(err.contains("geometry"), "{err}");
        std::fs::remove_file(&p).unwrap();
    }

    #[test]
    fn meta_keys_with_newlines_are_rejected() {
        let mut r = random_raster(9, 2, 2, 3, Dtype::C64);
        r.meta.insert("bad\nkey".into(), "v".into());
        let p = temp_path("badmeta.cplxr");
        assert!(write_raster(&p, &r).is_err());
    }

    #[test]
    fn invalid_channel_counts_are_rejected() {
        assert!(ComplexRaster::zeros(4, 4, 2, Dtype::C64).is_err());
        assert!(ComplexRaster::zeros(0, 4, 3, Dtype::C64).is_err());
    }
}
