use sha2::{Digest, Sha256};

use crate::error::{MstmError, Result};
use crate::vector::{is_unit, l2_norm, normalize, weighted_ip, MultiModal, MultiVector, WeightVector};

pub type ObjectId = u32;

/// `n` objects, each with one unit vector per modality.
///
/// Vectors of a modality are stored contiguously (`n × d_i` floats).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiModalDataset {
    dims: Vec<usize>,
    len: usize,
    vectors: Vec<Vec<f32>>,
}

impl MultiModalDataset {
    /// Takes flat per-modality buffers. Every vector must already be unit norm.
    pub fn new(dims: Vec<usize>, vectors: Vec<Vec<f32>>) -> Result<Self> {
        Self::assemble(dims, vectors, false)
    }

    /// Like [`MultiModalDataset::new`] but normalizes each vector first.
    /// Zero vectors are rejected.
    pub fn normalized(dims: Vec<usize>, vectors: Vec<Vec<f32>>) -> Result<Self> {
        Self::assemble(dims, vectors, true)
    }

    /// Builds from one `Vec` of records per modality.
    pub fn from_records(records: Vec<Vec<Vec<f32>>>, normalize: bool) -> Result<Self> {
        let mut dims = Vec::with_capacity(records.len());
        let mut flat = Vec::with_capacity(records.len());
        for (i, recs) in records.into_iter().enumerate() {
            let d = recs.first().map_or(0, Vec::len);
            if let Some((j, r)) = recs.iter().enumerate().find(|(_, r)| r.len() != d) {
                return Err(MstmError::Load(format!(
                    "modality {i}: record {j} has dimension {}, expected {d}",
                    r.len()
                )));
            }
            dims.push(d);
            flat.push(recs.into_iter().flatten().collect());
        }
        Self::assemble(dims, flat, normalize)
    }

    fn assemble(dims: Vec<usize>, mut vectors: Vec<Vec<f32>>, normalize_input: bool) -> Result<Self> {
        if dims.is_empty() || dims.len() != vectors.len() {
            return Err(MstmError::Load(format!(
                "{} dimensions given for {} modalities",
                dims.len(),
                vectors.len()
            )));
        }
        if let Some(i) = dims.iter().position(|d| *d == 0) {
            return Err(MstmError::Load(format!("modality {i} has dimension 0")));
        }
        let counts: Vec<usize> = vectors
            .iter()
            .zip(&dims)
            .map(|(v, d)| v.len() / d)
            .collect();
        let bad: Vec<String> = vectors
            .iter()
            .zip(&dims)
            .enumerate()
            .filter(|(_, (v, d))| v.len() % **d != 0 || v.len() / **d != counts[0])
            .map(|(i, (v, d))| format!("modality {i}: {} floats at dimension {d}", v.len()))
            .collect();
        if !bad.is_empty() {
            return Err(MstmError::Load(format!(
                "modalities disagree on object count (modality 0 has {}): {}",
                counts[0],
                bad.join("; ")
            )));
        }
        let len = counts[0];
        for (i, (buf, &d)) in vectors.iter_mut().zip(&dims).enumerate() {
            if let Some(pos) = buf.iter().position(|x| !x.is_finite()) {
                return Err(MstmError::Load(format!(
                    "modality {i}: object {} has a non-finite component",
                    pos / d
                )));
            }
            for (j, v) in buf.chunks_exact_mut(d).enumerate() {
                if normalize_input {
                    if !normalize(v) {
                        return Err(MstmError::Load(format!(
                            "modality {i}: object {j} has zero norm"
                        )));
                    }
                } else if !is_unit(v) {
                    return Err(MstmError::Load(format!(
                        "modality {i}: object {j} has norm {:.6}, expected 1",
                        l2_norm(v)
                    )));
                }
            }
        }
        if len > u32::MAX as usize {
            return Err(MstmError::Load("too many objects for 32-bit ids".into()));
        }
        Ok(MultiModalDataset { dims, len, vectors })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn modalities(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn vector(&self, modality: usize, id: usize) -> &[f32] {
        let d = self.dims[modality];
        &self.vectors[modality][id * d..(id + 1) * d]
    }

    /// Flat storage of one modality.
    pub fn modality_data(&self, modality: usize) -> &[f32] {
        &self.vectors[modality]
    }

    #[inline]
    pub fn object(&self, id: usize) -> ObjectRef<'_> {
        ObjectRef { data: self, id }
    }

    pub fn to_multivector(&self, id: usize) -> MultiVector {
        MultiVector::full((0..self.modalities()).map(|i| self.vector(i, id).to_vec()).collect())
            .expect("dataset vectors are unit norm")
    }

    /// Dataset restricted to a subset of its modalities, in the given order.
    pub fn project(&self, modalities: &[usize]) -> Result<Self> {
        if let Some(i) = modalities.iter().find(|i| **i >= self.modalities()) {
            return Err(MstmError::usage(format!("no modality {i}")));
        }
        Ok(MultiModalDataset {
            dims: modalities.iter().map(|i| self.dims[*i]).collect(),
            len: self.len,
            vectors: modalities.iter().map(|i| self.vectors[*i].clone()).collect(),
        })
    }

    /// 64-bit hash of the dataset's shape and vector bytes.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.modalities() as u64).to_le_bytes());
        h.update((self.len as u64).to_le_bytes());
        for (d, buf) in self.dims.iter().zip(&self.vectors) {
            h.update((*d as u64).to_le_bytes());
            for x in buf {
                h.update(x.to_le_bytes());
            }
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
    }

    /// Checks that a query fits this dataset's modality schema.
    pub fn check_query(&self, q: &MultiVector) -> Result<()> {
        if q.modalities() != self.modalities() {
            return Err(MstmError::usage(format!(
                "query has {} modalities, dataset has {}",
                q.modalities(),
                self.modalities()
            )));
        }
        for (i, d) in self.dims.iter().enumerate() {
            if let Some(v) = q.slot(i) {
                if v.len() != *d {
                    return Err(MstmError::usage(format!(
                        "query modality {i} has dimension {}, dataset has {d}",
                        v.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_weights(&self, w: &WeightVector) -> Result<()> {
        if w.len() != self.modalities() {
            return Err(MstmError::usage(format!(
                "weights cover {} modalities, dataset has {}",
                w.len(),
                self.modalities()
            )));
        }
        Ok(())
    }
}

/// Borrowed view of one dataset object.
#[derive(Debug, Clone, Copy)]
pub struct ObjectRef<'a> {
    data: &'a MultiModalDataset,
    id: usize,
}

impl MultiModal for ObjectRef<'_> {
    fn modalities(&self) -> usize {
        self.data.modalities()
    }

    #[inline]
    fn slot(&self, modality: usize) -> Option<&[f32]> {
        Some(self.data.vector(modality, self.id))
    }
}

/// Object-to-object and query-to-object joint similarity under fixed weights.
#[derive(Debug, Clone)]
pub struct JointSpace<'a> {
    data: &'a MultiModalDataset,
    weights: WeightVector,
    w2: Vec<f64>,
}

impl<'a> JointSpace<'a> {
    pub fn new(data: &'a MultiModalDataset, w: &WeightVector) -> Result<Self> {
        data.check_weights(w)?;
        Ok(JointSpace {
            data,
            weights: w.clone(),
            w2: w.squared(),
        })
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn data(&self) -> &'a MultiModalDataset {
        self.data
    }

    pub fn squared_weights(&self) -> &[f64] {
        &self.w2
    }

    #[inline]
    pub fn sim(&self, a: usize, b: usize) -> f64 {
        weighted_ip(&self.data.object(a), &self.data.object(b), &self.w2)
    }

    #[inline]
    pub fn query_sim<Q: MultiModal + ?Sized>(&self, q: &Q, id: usize) -> f64 {
        weighted_ip(q, &self.data.object(id), &self.w2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_counts() {
        let err = MultiModalDataset::normalized(vec![2, 2], vec![vec![1.0; 200], vec![1.0; 198]])
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("modality 1"), "{msg}");
    }

    #[test]
    fn normalizes_and_rejects_zero_vectors() {
        let d = MultiModalDataset::normalized(vec![2], vec![vec![3.0, 4.0, 0.0, 2.0]]).unwrap();
        assert_eq!(d.vector(0, 0), &[0.6, 0.8]);
        assert!(MultiModalDataset::normalized(vec![2], vec![vec![0.0, 0.0]]).is_err());
        assert!(MultiModalDataset::new(vec![2], vec![vec![3.0, 4.0]]).is_err());
        assert!(MultiModalDataset::normalized(vec![2], vec![vec![f32::NAN, 1.0]]).is_err());
        assert!(MultiModalDataset::normalized(vec![2], vec![vec![f32::INFINITY, 1.0]]).is_err());
    }

    #[test]
    fn fingerprint_tracks_vector_bytes() {
        let a = MultiModalDataset::normalized(vec![2], vec![vec![1.0, 0.0, 0.0, 1.0]]).unwrap();
        let b = MultiModalDataset::normalized(vec![2], vec![vec![1.0, 0.0, 0.6, 0.8]]).unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
