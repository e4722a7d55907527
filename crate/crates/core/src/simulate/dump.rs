//! Raw sample dump: a small header followed by column-major little-endian `f64`.
//!
//! Layout: magic `RLABDUMP` (8 bytes), format version `u32` (= 1), rows `u64`,
//! columns `u64`, then column 0 (all rows), column 1, and so on.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::io::{Read, Write};

pub const MAGIC: &[u8; 8] = b"RLABDUMP";
pub const VERSION: u32 = 1;

fn io(e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("raw dump I/O: {e}"))
}

pub fn write_raw_dump<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(m.ncols() as u64).to_le_bytes()).map_err(io)?;
    // nalgebra storage is already column-major
    let mut buf = Vec::with_capacity(m.len() * 8);
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(io)
}

pub fn read_raw_dump<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not a raw dump (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io)?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(Error::InvalidArgument("unsupported raw dump version".into()));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8).map_err(io)?;
    let rows = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8).map_err(io)?;
    let cols = u64::from_le_bytes(b8) as usize;
    let mut data = vec![0u8; rows * cols * 8];
    r.read_exact(&mut data).map_err(io)?;
    let vals: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(DMatrix::from_vec(rows, cols, vals))
}
