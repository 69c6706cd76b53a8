//! `LRES1` checkpoint container.
//!
//! ```text
//! "LRES1"                       5 bytes
//! record count                  u32 LE
//! per record:
//!   name length, name bytes     u32 LE, UTF-8
//!   dtype tag                   u8 (0 = f32, 1 = f64, 2 = u8)
//!   rank, dims                  u32 LE, rank × u64 LE
//!   payload                     product(dims) little-endian elements
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"LRES1";

#[derive(Clone, Debug, PartialEq)]
pub enum RecordData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
}

impl RecordData {
    fn tag(&self) -> u8 {
        match self {
            RecordData::F32(_) => 0,
            RecordData::F64(_) => 1,
            RecordData::U8(_) => 2,
        }
    }

    fn len(&self) -> usize {
        match self {
            RecordData::F32(v) => v.len(),
            RecordData::F64(v) => v.len(),
            RecordData::U8(v) => v.len(),
        }
    }

    /// Values widened to f64 (u8 payloads included).
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            RecordData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            RecordData::F64(v) => v.clone(),
            RecordData::U8(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: RecordData,
}

impl Record {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: RecordData) -> Result<Self> {
        let name = name.into();
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::shape("checkpoint record", shape, data.len()));
        }
        Ok(Record { name, shape, data })
    }
}

pub fn write_checkpoint<W: Write>(mut w: W, records: &[Record]) -> std::io::Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for r in records {
        buf.extend_from_slice(&(r.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(r.name.as_bytes());
        buf.push(r.data.tag());
        buf.extend_from_slice(&(r.shape.len() as u32).to_le_bytes());
        for &d in &r.shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &r.data {
            RecordData::F32(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
            RecordData::F64(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
            RecordData::U8(v) => buf.extend_from_slice(v),
        }
    }
    w.write_all(&buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("checkpoint", format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<Record>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::format("checkpoint", e.to_string()))?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(MAGIC.len())? != MAGIC {
        return Err(Error::format("checkpoint", "bad magic"));
    }
    let count = c.u32()? as usize;
    let mut records = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = c.u32()? as usize;
        let name = String::from_utf8(c.take(name_len)?.to_vec())
            .map_err(|_| Error::format("checkpoint", "record name is not UTF-8"))?;
        let tag = c.take(1)?[0];
        let rank = c.u32()? as usize;
        let shape = (0..rank).map(|_| c.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let len = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::format("checkpoint", "shape overflow"))?;
        let data = match tag {
            0 => RecordData::F32(
                c.take(len.checked_mul(4).ok_or_else(|| Error::format("checkpoint", "size overflow"))?)?
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
            1 => RecordData::F64(
                c.take(len.checked_mul(8).ok_or_else(|| Error::format("checkpoint", "size overflow"))?)?
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
            2 => RecordData::U8(c.take(len)?.to_vec()),
            t => return Err(Error::format("checkpoint", format!("unknown dtype tag {t} in {name}"))),
        };
        records.push(Record { name, shape, data });
    }
    if c.pos != bytes.len() {
        return Err(Error::format("checkpoint", "trailing bytes"));
    }
    Ok(records)
}
