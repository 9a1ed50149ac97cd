//! VPED binary embedding format.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic        4 bytes  "VPED" (0x56 0x50 0x45 0x44)
//! version      u16      1
//! dim          u32
//! record_count u64
//! record_count times:
//!   id_len     u16, then id_len bytes of UTF-8
//!   label_len  u16, then label_len bytes of UTF-8
//!   dim x f32
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::store::{Dataset, EmbeddingRecord};

pub const MAGIC: [u8; 4] = *b"VPED";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 4 + 8;

pub fn write_binary(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    encode_to(dataset, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn encode_to<W: Write>(dataset: &Dataset, out: &mut W) -> std::io::Result<()> {
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(dataset.dim() as u32).to_le_bytes())?;
    out.write_all(&(dataset.len() as u64).to_le_bytes())?;
    let mut floats = Vec::with_capacity(dataset.dim() * 4);
    for record in dataset.records() {
        // Dataset::push guarantees both fit in u16.
        out.write_all(&(record.id.len() as u16).to_le_bytes())?;
        out.write_all(record.id.as_bytes())?;
        out.write_all(&(record.label.len() as u16).to_le_bytes())?;
        out.write_all(record.label.as_bytes())?;
        floats.clear();
        for x in &record.vector {
            floats.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&floats)?;
    }
    Ok(())
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// True when `bytes` start with the VPED magic.
pub fn has_magic(bytes: &[u8]) -> bool {
    bytes.len() >= 4 && bytes[..4] == MAGIC
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!(
                "need {n} bytes for {what} at offset {}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn string(&mut self, field: &'static str) -> Result<String> {
        let len = self.u16(field)? as usize;
        let raw = self.take(len, field)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::InvalidField {
            field,
            value: String::from_utf8_lossy(raw).into_owned(),
            reason: "not valid UTF-8",
        })
    }

    fn record(&mut self, dim: usize) -> Result<EmbeddingRecord> {
        let id = self.string("id")?;
        let label = self.string("label")?;
        let raw = self.take(dim * 4, "vector")?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(EmbeddingRecord { id, label, vector })
    }
}

pub fn decode(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < 4 {
        return Err(Error::Truncated("file shorter than magic".into()));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let mut cur = Cursor { buf: bytes, pos: 4 };
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dim = u32::from_le_bytes(cur.take(4, "dim")?.try_into().unwrap()) as usize;
    let declared = u64::from_le_bytes(cur.take(8, "record count")?.try_into().unwrap());

    let mut dataset = Dataset::new(dim)?;
    for n in 0..declared {
        if cur.remaining() == 0 {
            return Err(Error::CountMismatch {
                declared,
                actual: n,
            });
        }
        dataset.push(cur.record(dim)?)?;
    }

    if cur.remaining() > 0 {
        // Count whatever whole records follow so the error says how many.
        let mut actual = declared;
        while cur.remaining() > 0 {
            cur.record(dim)?;
            actual += 1;
        }
        return Err(Error::CountMismatch { declared, actual });
    }
    Ok(dataset)
}
