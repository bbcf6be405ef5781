//! Binary model checkpoints (`CXAE` container).
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"CXAE"  u16 version  u32 tensor_count
//! tensor:  str16 name, u8 precision (0 = f32, 1 = f64), u8 rank,
//!          rank x u64 extents, numel x (re, im) components
//! trailer: u32 kv_count, kv: str16 key, str16 value
//! ```
//!
//! Components are written as raw IEEE bit patterns so a save/load cycle is
//! bit-exact, which is what makes `--resume` reproduce the original run.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::bytes::{BinReader, BinWriter};
use crate::cxcore::{CTensor, CxError, Real, Result};
use crate::cxnn::model::AutoEncoder;
use crate::cxnn::optim::AdamW;

const MAGIC: &[u8; 4] = b"CXAE";
const VERSION: u16 = 1;

/// Stored tensor record: extents, re components, im components.
pub type TensorRecord<T> = (Vec<usize>, Vec<T>, Vec<T>);

/// In-memory image of a checkpoint file.
#[derive(Clone)]
pub struct Checkpoint<T: Real> {
    pub tensors: BTreeMap<String, TensorRecord<T>>,
    /// Free-form trailer: step counters, RNG state, config fingerprint.
    pub meta: BTreeMap<String, String>,
}

impl<T: Real> Default for Checkpoint<T> {
    fn default() -> Self {
        Checkpoint { tensors: BTreeMap::new(), meta: BTreeMap::new() }
    }
}

fn precision_tag<T: Real>() -> u8 {
    match std::mem::size_of::<T>() {
        4 => 0,
        8 => 1,
        _ => unreachable!("component type is f32 or f64"),
    }
}

impl<T: Real> Checkpoint<T> {
    /// Snapshots parameters, normalization buffers and optimizer moments.
    pub fn capture(model: &AutoEncoder<T>, opt: Option<&AdamW<T>>) -> Self {
        let mut ck = Checkpoint::default();
        model.visit_params(&mut |name, p, _| {
            ck.tensors.insert(name, (p.shape().to_vec(), p.re().to_vec(), p.im().to_vec()));
        });
        model.visit_buffers(&mut |name, buf| {
            ck.tensors.insert(
                format!("buf.{name}"),
                (vec![buf.len()], buf.clone(), vec![T::zero(); buf.len()]),
            );
        });
        if let Some(opt) = opt {
            for (name, record) in opt.export_state() {
                ck.tensors.insert(name, record);
            }
            ck.meta.insert("opt_step".into(), opt.step_count().to_string());
        }
        ck
    }

    /// Writes every tensor back into the model (and optimizer when given).
    /// Unknown or missing names are errors: a checkpoint either matches the
    /// architecture exactly or is rejected.
    pub fn restore(&self, model: &mut AutoEncoder<T>, mut opt: Option<&mut AdamW<T>>) -> Result<()> {
        let mut failed: Option<CxError> = None;
        model.visit_params_mut(&mut |name, p, _| {
            if failed.is_some() {
                return;
            }
            match self.tensors.get(&name) {
                Some((shape, re, im)) if shape == p.shape() => {
                    match CTensor::from_parts(shape, re.clone(), im.clone()) {
                        Ok(t) => *p = t.requires_grad(),
                        Err(e) => failed = Some(e),
                    }
                }
                Some(_) => {
                    failed = Some(CxError::shape(
                        "checkpoint",
                        format!("extent mismatch for parameter `{name}`"),
                    ))
                }
                None => {
                    failed = Some(CxError::contract(
                        "checkpoint",
                        format!("missing parameter `{name}`"),
                    ))
                }
            }
        });
        if let Some(e) = failed {
            return Err(e);
        }
        model.visit_buffers_mut(&mut |name, buf| {
            if failed.is_some() {
                return;
            }
            match self.tensors.get(&format!("buf.{name}")) {
                Some((_, re, _)) if re.len() == buf.len() => {
                    buf.copy_from_slice(re);
                }
                Some(_) => {
                    failed = Some(CxError::shape(
                        "checkpoint",
                        format!("extent mismatch for buffer `{name}`"),
                    ))
                }
                None => {
                    failed =
                        Some(CxError::contract("checkpoint", format!("missing buffer `{name}`")))
                }
            }
        });
        if let Some(e) = failed {
            return Err(e);
        }
        // Every file entry must correspond to something in this architecture;
        // optimizer moments are only consumed when an optimizer was supplied.
        let mut known: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
        model.visit_params(&mut |name, _, _| {
            known.insert(name);
        });
        model.visit_buffers(&mut |name, _| {
            known.insert(format!("buf.{name}"));
        });
        for (name, (_, re, im)) in &self.tensors {
            if name.starts_with("adamw.") {
                if let Some(opt) = opt.as_deref_mut() {
                    opt.import_entry(name, re.clone(), im.clone())?;
                }
            } else if !known.contains(name) {
                return Err(CxError::contract(
                    "checkpoint",
                    format!("entry `{name}` does not belong to this architecture"),
                ));
            }
        }
        if let Some(opt) = opt {
            if let Some(step) = self.meta.get("opt_step") {
                let step = step
                    .parse()
                    .map_err(|_| CxError::contract("checkpoint", "malformed opt_step"))?;
                opt.set_step_count(step);
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| CxError::io("checkpoint", e))?;
        let mut w = BinWriter::new(BufWriter::new(file));
        let wrap = |e| CxError::io("checkpoint", e);
        w.bytes(MAGIC).map_err(wrap)?;
        w.u16(VERSION).map_err(wrap)?;
        w.u32(self.tensors.len() as u32).map_err(wrap)?;
        for (name, (shape, re, im)) in &self.tensors {
            w.str16(name).map_err(wrap)?;
            w.u8(precision_tag::<T>()).map_err(wrap)?;
            w.u8(shape.len() as u8).map_err(wrap)?;
            for &e in shape {
                w.u64(e as u64).map_err(wrap)?;
            }
            for k in 0..re.len() {
                write_component(&mut w, re[k]).map_err(wrap)?;
                write_component(&mut w, im[k]).map_err(wrap)?;
            }
        }
        w.u32(self.meta.len() as u32).map_err(wrap)?;
        for (k, v) in &self.meta {
            w.str16(k).map_err(wrap)?;
            w.str16(v).map_err(wrap)?;
        }
        w.flush().map_err(wrap)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| CxError::io("checkpoint", e))?;
        let mut r = BinReader::new(BufReader::new(file));
        let wrap = |e| CxError::io("checkpoint", e);
        let magic = r.bytes(4).map_err(wrap)?;
        if magic != MAGIC {
            return Err(CxError::contract("checkpoint", "bad magic, not a CXAE file"));
        }
        let version = r.u16().map_err(wrap)?;
        if version != VERSION {
            return Err(CxError::contract("checkpoint", format!("unsupported version {version}")));
        }
        let count = r.u32().map_err(wrap)? as usize;
        let mut ck = Checkpoint::default();
        for _ in 0..count {
            let name = r.str16().map_err(wrap)?;
            let tag = r.u8().map_err(wrap)?;
            if tag != precision_tag::<T>() {
                return Err(CxError::contract(
                    "checkpoint",
                    format!(
                        "component precision mismatch for `{name}` at byte {}: tag {tag}",
                        r.pos() - 1
                    ),
                ));
            }
            let rank = r.u8().map_err(wrap)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64().map_err(wrap)? as usize);
            }
            let n: usize = shape.iter().product();
            let mut re = Vec::with_capacity(n);
            let mut im = Vec::with_capacity(n);
            for _ in 0..n {
                re.push(read_component::<T, _>(&mut r).map_err(wrap)?);
                im.push(read_component::<T, _>(&mut r).map_err(wrap)?);
            }
            ck.tensors.insert(name, (shape, re, im));
        }
        let kv = r.u32().map_err(wrap)? as usize;
        for _ in 0..kv {
            let k = r.str16().map_err(wrap)?;
            let v = r.str16().map_err(wrap)?;
            ck.meta.insert(k, v);
        }
        Ok(ck)
    }
}

fn write_component<T: Real, W: std::io::Write>(w: &mut BinWriter<W>, v: T) -> std::io::Result<()> {
    if std::mem::size_of::<T>() == 4 {
        w.f32(v.to_f64() as f32)
    } else {
        w.f64(v.to_f64())
    }
}

fn read_component<T: Real, R: std::io::Read>(r: &mut BinReader<R>) -> std::io::Result<T> {
    if std::mem::size_of::<T>() == 4 {
        Ok(T::from_f64(r.f32()? as f64))
    } else {
        Ok(T::from_f64(r.f64()?))
    }
}

/// Serializes the generator state into checkpoint metadata.
pub fn rng_to_meta(rng: &ChaCha12Rng, meta: &mut BTreeMap<String, String>) {
    let seed: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
    meta.insert("rng_seed".into(), seed);
    meta.insert("rng_stream".into(), rng.get_stream().to_string());
    meta.insert("rng_word_pos".into(), rng.get_word_pos().to_string());
}

/// Rebuilds the generator exactly where [`rng_to_meta`] captured it.
pub fn rng_from_meta(meta: &BTreeMap<String, String>) -> Result<ChaCha12Rng> {
    let bad = |what: &str| CxError::contract("checkpoint", format!("malformed rng state: {what}"));
    let seed_hex = meta.get("rng_seed").ok_or_else(|| bad("missing seed"))?;
    if seed_hex.len() != 64 {
        return Err(bad("seed length"));
    }
    let mut seed = [0u8; 32];
    for (i, chunk) in seed_hex.as_bytes().chunks(2).enumerate() {
        let s = std::str::from_utf8(chunk).map_err(|_| bad("seed encoding"))?;
        seed[i] = u8::from_str_radix(s, 16).map_err(|_| bad("seed digit"))?;
    }
    let stream: u64 = meta
        .get("rng_stream")
        .ok_or_else(|| bad("missing stream"))?
        .parse()
        .map_err(|_| bad("stream"))?;
    let word_pos: u128 = meta
        .get("rng_word_pos")
        .ok_or_else(|| bad("missing word_pos"))?
        .parse()
        .map_err(|_| bad("word_pos"))?;
    let mut rng = ChaCha12Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);
    Ok(rng)
}
