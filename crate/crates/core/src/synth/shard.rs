//! `LPCH1` packed patch shards.
//!
//! ```text
//! "LPCH1"                          5 bytes
//! record count                     u64 LE
//! per record:
//!   label                          f32 LE (class index or regression target)
//!   manifest entry id              u32 LE
//!   center row, center col         u32 LE each
//!   pixels                         64×64 f32 LE, row-major
//! ```

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::Plane;
use crate::models::PATCH;

const MAGIC: &[u8; 5] = b"LPCH1";
const PIXELS: usize = PATCH * PATCH;

/// A 64×64 crop with its label and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchRecord {
    pub pixels: Plane,
    pub label: f32,
    pub entry: u32,
    /// Center of the crop in the source image.
    pub row: u32,
    pub col: u32,
}

pub fn write_shard(path: &Path, records: &[PatchRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    write(MAGIC)?;
    write(&(records.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 + PIXELS * 4);
    for r in records {
        if r.pixels.h() != PATCH || r.pixels.w() != PATCH {
            return Err(Error::shape("shard record", (PATCH, PATCH), (r.pixels.h(), r.pixels.w())));
        }
        buf.clear();
        buf.extend_from_slice(&r.label.to_le_bytes());
        buf.extend_from_slice(&r.entry.to_le_bytes());
        buf.extend_from_slice(&r.row.to_le_bytes());
        buf.extend_from_slice(&r.col.to_le_bytes());
        for v in r.pixels.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        write(&buf)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_shard(path: &Path) -> Result<Vec<PatchRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut read = |buf: &mut [u8]| {
        r.read_exact(buf)
            .map_err(|e| Error::format("patch shard", format!("{}: {e}", path.display())))
    };
    let mut magic = [0u8; 5];
    read(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format("patch shard", format!("{}: bad magic", path.display())));
    }
    let mut count = [0u8; 8];
    read(&mut count)?;
    let count = u64::from_le_bytes(count) as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    let mut rec = vec![0u8; 16 + PIXELS * 4];
    let word = |b: &[u8], i: usize| -> [u8; 4] { b[i * 4..i * 4 + 4].try_into().unwrap() };
    for _ in 0..count {
        read(&mut rec)?;
        let pixels = (0..PIXELS).map(|i| f32::from_le_bytes(word(&rec[16..], i))).collect();
        out.push(PatchRecord {
            label: f32::from_le_bytes(word(&rec, 0)),
            entry: u32::from_le_bytes(word(&rec, 1)),
            row: u32::from_le_bytes(word(&rec, 2)),
            col: u32::from_le_bytes(word(&rec, 3)),
            pixels: Plane::new(PATCH, PATCH, pixels)?,
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format("patch shard", format!("{}: trailing bytes", path.display())));
    }
    Ok(out)
}
