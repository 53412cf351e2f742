//! CGSP container: `"CGSP"`, u32 version, u8 kind tag, u32 height,
//! u32 width, u64 count, then `height * width` f64 values row-major.
//! All integers and floats are little-endian.

use std::path::Path;

use super::{CorpusSpectrum, TransformTag};
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"CGSP";
pub const CONTAINER_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 4 + 4 + 8;

pub fn write_container(s: &CorpusSpectrum) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * s.mean.len());
    out.extend_from_slice(CONTAINER_MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.push(s.kind.code());
    out.extend_from_slice(&(s.height as u32).to_le_bytes());
    out.extend_from_slice(&(s.width as u32).to_le_bytes());
    out.extend_from_slice(&s.count.to_le_bytes());
    for v in &s.mean {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn bad(detail: impl ToString) -> Error {
    Error::format("CGSP", detail)
}

pub fn read_container(bytes: &[u8]) -> Result<CorpusSpectrum> {
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != CONTAINER_MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != CONTAINER_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let kind = TransformTag::from_code(bytes[8]).ok_or_else(|| bad(format!("unknown kind tag {}", bytes[8])))?;
    let height = u32_at(9) as usize;
    let width = u32_at(13) as usize;
    let count = u64::from_le_bytes(bytes[17..25].try_into().expect("8 bytes"));
    let body = &bytes[HEADER_LEN..];
    if body.len() != height * width * 8 {
        return Err(bad(format!("{height}x{width} payload needs {} bytes, found {}", height * width * 8, body.len())));
    }
    let mean = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(CorpusSpectrum { kind, height, width, count, mean })
}

pub fn write_container_file(path: &Path, s: &CorpusSpectrum) -> Result<()> {
    crate::artifact::write_atomic(path, &write_container(s))
}

pub fn read_container_file(path: &Path) -> Result<CorpusSpectrum> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_container(&bytes)
}
