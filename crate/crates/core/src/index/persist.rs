//! Binary index file.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic       8 bytes   "MSTMIDX\0"
//! version     u32       1
//! n           u32       vertex count
//! m           u32       modality count
//! gamma       u32       max neighbors
//! flags       u32       bit 0: repair block present
//! epsilon     u32       refinement sweeps
//! rng_seed    u64
//! weights     m × f32   ω_i
//! seed        u32       entry vertex
//! adjacency   n × (u32 count, count × u32 ids)
//! repairs     u32 count, count × (u32 from, u32 to)     [if flags bit 0]
//! fingerprint u64       dataset fingerprint
//! ```

use std::fs;
use std::path::Path;

use super::{BuildParams, FusedIndex};
use crate::dataset::ObjectId;
use crate::error::{MstmError, Result};
use crate::vector::WeightVector;

const MAGIC: &[u8; 8] = b"MSTMIDX\0";
const VERSION: u32 = 1;
const FLAG_REPAIRS: u32 = 1;

impl FusedIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let put = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());
        out.extend_from_slice(MAGIC);
        put(&mut out, VERSION);
        put(&mut out, self.len() as u32);
        put(&mut out, self.weights.len() as u32);
        put(&mut out, self.params.max_neighbors as u32);
        let flags = if self.repair_edges.is_empty() { 0 } else { FLAG_REPAIRS };
        put(&mut out, flags);
        put(&mut out, self.params.iterations as u32);
        out.extend_from_slice(&self.params.seed.to_le_bytes());
        for w in self.weights.omega() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        put(&mut out, self.seed);
        for list in &self.adjacency {
            put(&mut out, list.len() as u32);
            for id in list {
                put(&mut out, *id);
            }
        }
        if flags & FLAG_REPAIRS != 0 {
            put(&mut out, self.repair_edges.len() as u32);
            for (a, b) in &self.repair_edges {
                put(&mut out, *a);
                put(&mut out, *b);
            }
        }
        out.extend_from_slice(&self.fingerprint.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(8)? != MAGIC {
            return Err(r.error("not an index file (bad magic)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(r.error(&format!("unsupported index version {version}")));
        }
        let n = r.u32()? as usize;
        let m = r.u32()? as usize;
        let gamma = r.u32()? as usize;
        let flags = r.u32()?;
        let epsilon = r.u32()? as usize;
        let rng_seed = r.u64()?;
        let omega = (0..m).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        let weights = WeightVector::new(omega).map_err(|e| r.error(&e.to_string()))?;
        let seed = r.u32()?;
        let mut adjacency = Vec::with_capacity(n.min(bytes.len() / 4));
        for _ in 0..n {
            let count = r.u32()? as usize;
            let list = (0..count).map(|_| r.u32()).collect::<Result<Vec<ObjectId>>>()?;
            adjacency.push(list);
        }
        let mut repairs = Vec::new();
        if flags & FLAG_REPAIRS != 0 {
            let count = r.u32()? as usize;
            for _ in 0..count {
                repairs.push((r.u32()?, r.u32()?));
            }
        }
        let fingerprint = r.u64()?;
        if r.pos != bytes.len() {
            return Err(r.error("trailing bytes after fingerprint"));
        }
        let params = BuildParams::new(gamma, epsilon, rng_seed);
        FusedIndex::from_parts(adjacency, repairs, seed, params, weights, fingerprint)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        FusedIndex::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn error(&self, message: &str) -> MstmError {
        MstmError::Format {
            path: self.path.to_path_buf(),
            offset: self.pos as u64,
            message: message.to_string(),
        }
    }

    fn take(&mut self, len: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < len {
            return Err(self.error("truncated index file"));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
