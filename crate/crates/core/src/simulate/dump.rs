//! Binary path dump for debugging.
//!
//! Layout: seven little-endian `u64` header words (magic, version, d, n_ref,
//! T as `f64` bits, M, master_seed), then `M · (n_ref + 1) · d` little-endian
//! `f64` values, path by path.

use std::io::{Read, Write};

use super::{Path, PathBatch};
use crate::error::{Error, Result};
use crate::Scalar;

/// `b"FRPATHS\0"` read as a little-endian word.
pub const DUMP_MAGIC: u64 = u64::from_le_bytes(*b"FRPATHS\0");
pub const DUMP_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub dimension: u64,
    pub n_ref: u64,
    pub horizon: f64,
    pub paths: u64,
    pub master_seed: u64,
}

impl DumpHeader {
    fn values_per_path(&self) -> Result<usize> {
        usize::try_from(self.n_ref)
            .ok()
            .and_then(|n| n.checked_add(1))
            .and_then(|n| n.checked_mul(usize::try_from(self.dimension).ok()?))
            .ok_or_else(|| Error::Format("path dump header sizes overflow".into()))
    }
}

/// Write every path of `batch`, generated sequentially.
pub fn write_path_dump<S: Scalar, W: Write>(out: &mut W, batch: &PathBatch<'_, S>) -> Result<DumpHeader> {
    let header = DumpHeader {
        dimension: batch.model().dimension() as u64,
        n_ref: batch.grid().n_ref() as u64,
        horizon: batch.grid().horizon().as_f64(),
        paths: batch.len(),
        master_seed: batch.master_seed(),
    };
    for word in [
        DUMP_MAGIC,
        DUMP_VERSION,
        header.dimension,
        header.n_ref,
        header.horizon.to_bits(),
        header.paths,
        header.master_seed,
    ] {
        out.write_all(&word.to_le_bytes())?;
    }
    let mut bytes = Vec::new();
    batch.for_each(|_, path| {
        bytes.clear();
        for v in path.values() {
            bytes.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        out.write_all(&bytes)?;
        Ok(())
    })?;
    Ok(header)
}

fn read_word<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Read a dump back into memory.
pub fn read_path_dump<R: Read>(input: &mut R) -> Result<(DumpHeader, Vec<Path<f64>>)> {
    let magic = read_word(input)?;
    if magic != DUMP_MAGIC {
        return Err(Error::Format(format!("bad path dump magic {magic:#018x}")));
    }
    let version = read_word(input)?;
    if version != DUMP_VERSION {
        return Err(Error::Format(format!("unsupported path dump version {version}")));
    }
    let header = DumpHeader {
        dimension: read_word(input)?,
        n_ref: read_word(input)?,
        horizon: f64::from_bits(read_word(input)?),
        paths: read_word(input)?,
        master_seed: read_word(input)?,
    };
    if header.dimension == 0 {
        return Err(Error::Format("path dump dimension is zero".into()));
    }
    let per_path = header.values_per_path()?;
    let mut paths = Vec::new();
    let mut buf = vec![0u8; per_path * 8];
    for _ in 0..header.paths {
        input.read_exact(&mut buf)?;
        let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        paths.push(Path::new(header.dimension as usize, values, true)?);
    }
    Ok((header, paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProcessModel;
    use crate::simulate::GridSpec;

    #[test]
    fn round_trip() {
        let model = ProcessModel::brownian(1.0, vec![0.5, -0.5]).unwrap();
        let grid = GridSpec::new(2.0, 1 << 7, vec![2]).unwrap();
        let batch = PathBatch::new(&model, &grid, 17, 5);
        let mut bytes = Vec::new();
        let written = write_path_dump(&mut bytes, &batch).unwrap();
        assert_eq!(bytes.len(), 7 * 8 + 5 * 129 * 2 * 8);
        let (header, paths) = read_path_dump(&mut bytes.as_slice()).unwrap();
        assert_eq!(header, written);
        assert_eq!(header.horizon, 2.0);
        for (i, p) in paths.iter().enumerate() {
            assert_eq!(p.values(), batch.path(i as u64).unwrap().values());
        }
    }

    #[test]
    fn rejects_foreign_data() {
        let bytes = [0u8; 64];
        assert!(matches!(read_path_dump(&mut bytes.as_slice()), Err(Error::Format(_))));
        let mut truncated = Vec::new();
        truncated.extend_from_slice(&DUMP_MAGIC.to_le_bytes());
        truncated.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        assert!(matches!(read_path_dump(&mut truncated.as_slice()), Err(Error::Io(_))));
    }
}
