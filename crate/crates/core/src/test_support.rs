use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::MultiModalDataset;
use crate::vector::{MultiModal, MultiVector};

/// Isotropic random unit vectors, no cluster structure.
pub fn random_dataset(n: usize, dims: &[usize], seed: u64) -> MultiModalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = dims
        .iter()
        .map(|d| (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    MultiModalDataset::normalized(dims.to_vec(), vectors).unwrap()
}

pub fn random_query(dims: &[usize], seed: u64) -> MultiVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MultiVector::normalized(
        dims.iter()
            .map(|d| Some((0..*d).map(|_| StandardNormal.sample(&mut rng)).collect()))
            .collect(),
    )
    .unwrap()
}

/// Copy of `data` with `extra` appended as the last object.
pub fn append(data: &MultiModalDataset, extra: &MultiVector) -> MultiModalDataset {
    let vectors = (0..data.modalities())
        .map(|i| {
            let mut v = data.modality_data(i).to_vec();
            v.extend_from_slice(extra.slot(i).unwrap());
            v
        })
        .collect();
    MultiModalDataset::new(data.dims().to_vec(), vectors).unwrap()
}
