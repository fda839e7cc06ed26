//! `fvecs` and `ivecs` files.
//!
//! A file is a sequence of records, each a little-endian `i32` dimension `d`
//! followed by `d` little-endian 4-byte values (`f32` or `i32`). Every record
//! in a file has the same `d`.

use std::fs;
use std::path::Path;

use crate::error::{MstmError, Result};

/// Element type of a vecs file.
pub trait VecsElement: Copy {
    const KIND: &'static str;
    fn from_le(bytes: [u8; 4]) -> Self;
    fn to_le(self) -> [u8; 4];
    fn is_valid(self) -> bool;
}

impl VecsElement for f32 {
    const KIND: &'static str = "fvecs";
    fn from_le(bytes: [u8; 4]) -> Self {
        f32::from_le_bytes(bytes)
    }
    fn to_le(self) -> [u8; 4] {
        self.to_le_bytes()
    }
    fn is_valid(self) -> bool {
        self.is_finite()
    }
}

impl VecsElement for i32 {
    const KIND: &'static str = "ivecs";
    fn from_le(bytes: [u8; 4]) -> Self {
        i32::from_le_bytes(bytes)
    }
    fn to_le(self) -> [u8; 4] {
        self.to_le_bytes()
    }
    fn is_valid(self) -> bool {
        true
    }
}

/// Decodes a whole vecs buffer. `path` only labels errors.
pub fn decode_vecs<T: VecsElement>(bytes: &[u8], path: &Path) -> Result<Vec<Vec<T>>> {
    let err = |offset: usize, message: String| MstmError::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        message,
    };
    let word = |at: usize| -> [u8; 4] { bytes[at..at + 4].try_into().expect("4 bytes") };
    let mut out = Vec::new();
    let mut pos = 0;
    let mut dim = None;
    while pos < bytes.len() {
        if bytes.len() - pos < 4 {
            return Err(err(pos, format!("truncated {} record header", T::KIND)));
        }
        let d = i32::from_le_bytes(word(pos));
        if d < 0 {
            return Err(err(pos, format!("negative dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(err(pos, format!("record {} has dimension {d}, expected {expected}", out.len())));
            }
            _ => {}
        }
        pos += 4;
        if (bytes.len() - pos) / 4 < d {
            return Err(err(pos, format!("truncated {} record {}", T::KIND, out.len())));
        }
        let mut record = Vec::with_capacity(d);
        for j in 0..d {
            let v = T::from_le(word(pos + 4 * j));
            if !v.is_valid() {
                return Err(err(pos + 4 * j, format!("record {} has a non-finite component", out.len())));
            }
            record.push(v);
        }
        pos += 4 * d;
        out.push(record);
    }
    Ok(out)
}

/// Encodes records; all must share one dimension.
pub fn encode_vecs<T: VecsElement, R: AsRef<[T]>>(records: &[R]) -> Result<Vec<u8>> {
    let dim = records.first().map_or(0, |r| r.as_ref().len());
    if let Some(i) = records.iter().position(|r| r.as_ref().len() != dim) {
        return Err(MstmError::usage(format!(
            "record {i} has dimension {}, expected {dim}",
            records[i].as_ref().len()
        )));
    }
    if dim > i32::MAX as usize {
        return Err(MstmError::usage("dimension does not fit a 32-bit header"));
    }
    let mut out = Vec::with_capacity(records.len() * (4 + 4 * dim));
    for r in records {
        out.extend_from_slice(&(dim as i32).to_le_bytes());
        for v in r.as_ref() {
            out.extend_from_slice(&v.to_le());
        }
    }
    Ok(out)
}

pub fn read_fvecs(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    let path = path.as_ref();
    decode_vecs(&read(path)?, path)
}

pub fn write_fvecs<R: AsRef<[f32]>>(path: impl AsRef<Path>, records: &[R]) -> Result<()> {
    fs::write(path, encode_vecs(records)?)?;
    Ok(())
}

pub fn read_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    let path = path.as_ref();
    decode_vecs(&read(path)?, path)
}

pub fn write_ivecs<R: AsRef<[i32]>>(path: impl AsRef<Path>, records: &[R]) -> Result<()> {
    fs::write(path, encode_vecs(records)?)?;
    Ok(())
}

/// Reads an ivecs file of object ids, rejecting negative entries.
pub fn read_id_lists(path: impl AsRef<Path>) -> Result<Vec<Vec<u32>>> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let lists = decode_vecs::<i32>(&bytes, path)?;
    let dim = lists.first().map_or(0, Vec::len);
    lists
        .into_iter()
        .enumerate()
        .map(|(r, list)| {
            list.into_iter()
                .enumerate()
                .map(|(j, v)| {
                    u32::try_from(v).map_err(|_| MstmError::Format {
                        path: path.to_path_buf(),
                        offset: (r * (4 + 4 * dim) + 4 + 4 * j) as u64,
                        message: format!("negative id {v}"),
                    })
                })
                .collect()
        })
        .collect()
}

/// Writes id lists as ivecs.
pub fn write_id_lists(path: impl AsRef<Path>, lists: &[Vec<u32>]) -> Result<()> {
    let converted = lists
        .iter()
        .map(|l| {
            l.iter()
                .map(|id| i32::try_from(*id).map_err(|_| MstmError::usage(format!("id {id} does not fit ivecs"))))
                .collect::<Result<Vec<i32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    write_ivecs(path, &converted)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| MstmError::Load(format!("cannot read {}: {e}", path.display())))
}
