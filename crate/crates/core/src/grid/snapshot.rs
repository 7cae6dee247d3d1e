//! Binary field snapshots.
//!
//! ```text
//! offset  size  content
//! 0       5     magic "NLSF1"
//! 5       8     n, u64 little-endian
//! 13      8     box_length, f64 little-endian
//! 21      1     layout tag, b'X' = x fastest (index = ix + n*(iy + n*iz))
//! 22      16*n^3  samples as (re, im) f64 little-endian pairs
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Field, Grid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"NLSF1";
pub const LAYOUT_X_FASTEST: u8 = b'X';
pub const HEADER_LEN: usize = 22;

pub fn encode(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    out.push(LAYOUT_X_FASTEST);
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

/// Decodes a snapshot; `path` is only used in error messages.
pub fn decode(bytes: &[u8], path: &Path) -> Result<Field> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..5] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let n = u64::from_le_bytes(bytes[5..13].try_into().unwrap()) as usize;
    let box_length = f64::from_le_bytes(bytes[13..21].try_into().unwrap());
    if bytes[21] != LAYOUT_X_FASTEST {
        return Err(bad(format!("unknown layout tag {:#04x}", bytes[21])));
    }
    let grid = Grid::new(n, box_length).map_err(|e| bad(e.to_string()))?;
    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(bad(format!(
            "expected {expected} bytes for n = {n}, found {}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Field::new(grid, values).map_err(|e| bad(e.to_string()))
}

pub fn save_snapshot(field: &Field, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode(field))
        .map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Loads a snapshot and requires it to live on `grid`.
pub fn load_snapshot_on(path: &Path, grid: &Grid) -> Result<Field> {
    let field = load_snapshot(path)?;
    grid.check_same(field.grid())?;
    Ok(field)
}
