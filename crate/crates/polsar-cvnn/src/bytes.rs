//! Little-endian binary primitives shared by the raster and checkpoint codecs.

use std::io::{self, Read, Write};

/// Reader that tracks its byte offset so format errors can point at the
/// exact position of the offending field.
pub(crate) struct BinReader<R: Read> {
    inner: R,
    pos: u64,
}

impl<R: Read> BinReader<R> {
    pub fn new(inner: R) -> Self {
        BinReader { inner, pos: 0 }
    }

    /// Offset of the next unread byte.
    pub fn pos(&self) -> u64 {
        self.pos
    }

    pub fn bytes(&mut self, n: usize) -> io::Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf)?;
        self.pos += n as u64;
        Ok(buf)
    }

    pub fn u8(&mut self) -> io::Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u16(&mut self) -> io::Result<u16> {
        let b = self.bytes(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self) -> io::Result<u32> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn u64(&mut self) -> io::Result<u64> {
        let b = self.bytes(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn f32(&mut self) -> io::Result<f32> {
        Ok(f32::from_bits(self.u32()?))
    }

    pub fn f64(&mut self) -> io::Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    /// Length-prefixed (u16) UTF-8 string.
    pub fn str16(&mut self) -> io::Result<String> {
        let n = self.u16()? as usize;
        let b = self.bytes(n)?;
        String::from_utf8(b)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "invalid utf-8"))
    }
}

pub(crate) struct BinWriter<W: Write> {
    inner: W,
}

impl<W: Write> BinWriter<W> {
    pub fn new(inner: W) -> Self {
        BinWriter { inner }
    }

    pub fn bytes(&mut self, b: &[u8]) -> io::Result<()> {
        self.inner.write_all(b)
    }

    pub fn u8(&mut self, v: u8) -> io::Result<()> {
        self.bytes(&[v])
    }

    pub fn u16(&mut self, v: u16) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u32(&mut self, v: u32) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32(&mut self, v: f32) -> io::Result<()> {
        self.u32(v.to_bits())
    }

    pub fn f64(&mut self, v: f64) -> io::Result<()> {
        self.u64(v.to_bits())
    }

    pub fn str16(&mut self, s: &str) -> io::Result<()> {
        assert!(s.len() <= u16::MAX as usize, "string too long for u16 prefix");
        self.u16(s.len() as u16)?;
        self.bytes(s.as_bytes())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_values_and_offsets() {
        let mut buf = Vec::new();
        {
            let mut w = BinWriter::new(&mut buf);
            w.u8(7).unwrap();
            w.u16(300).unwrap();
            w.u32(70_000).unwrap();
            w.u64(1 << 40).unwrap();
            w.f32(1.5).unwrap();
            w.f64(-0.1).unwrap();
            w.str16("hh").unwrap();
        }
        let mut r = BinReader::new(&buf[..]);
        assert_eq!(r.u8().unwrap(), 7);
        assert_eq!(r.u16().unwrap(), 300);
        assert_eq!(r.u32().unwrap(), 70_000);
        assert_eq!(r.u64().unwrap(), 1 << 40);
        assert_eq!(r.f32().unwrap(), 1.5);
        assert_eq!(r.f64().unwrap().to_bits(), (-0.1f64).to_bits());
        assert_eq!(r.str16().unwrap(), "hh");
        assert_eq!(r.pos() as usize, buf.len());
    }

    #[test]
    fn truncated_input_reports_eof() {
        let mut r = BinReader::new(&[1u8, 2][..]);
        assert!(r.u32().is_err());
    }
}
