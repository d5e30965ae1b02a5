//! Binary chain traces: the magic bytes `SGS1`, then `d` and `T` as
//! little-endian `u64`, then `T` rows of `d` little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SGS1";

/// Streaming writer; the row count in the header is patched on `finish`.
pub struct TraceWriter {
    out: BufWriter<File>,
    d: usize,
    rows: u64,
}

impl TraceWriter {
    pub fn create(path: &Path, d: usize) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(MAGIC)?;
        out.write_all(&(d as u64).to_le_bytes())?;
        out.write_all(&0u64.to_le_bytes())?;
        Ok(TraceWriter { out, d, rows: 0 })
    }

    pub fn push(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: theta.len() });
        }
        for v in theta {
            self.out.write_all(&v.to_le_bytes())?;
        }
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush()?;
        let mut file = self.out.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        file.seek(SeekFrom::Start(12))?;
        file.write_all(&self.rows.to_le_bytes())?;
        file.flush()?;
        Ok(self.rows)
    }
}

/// Reads a trace into `(d, rows)`.
pub fn read_trace(path: &Path) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 20];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::Io("bad trace magic".into()));
    }
    let d = u64::from_le_bytes(head[4..12].try_into().expect("8 bytes")) as usize;
    let t = u64::from_le_bytes(head[12..20].try_into().expect("8 bytes")) as usize;
    let mut rows = Vec::with_capacity(t);
    let mut buf = [0u8; 8];
    for _ in 0..t {
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            r.read_exact(&mut buf)?;
            row.push(f64::from_le_bytes(buf));
        }
        rows.push(row);
    }
    Ok((d, rows))
}
