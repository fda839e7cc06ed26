//! Cluster-structured synthetic multimodal data.
//!
//! Each object draws a cluster label. In every signal modality its vector is
//! the cluster's center in that modality plus isotropic Gaussian noise of
//! relative scale `spread`, normalized. The noise modality, if any, holds
//! independent random unit vectors that carry no cluster information.
//!
//! Each query copies a random source object: signal modalities are perturbed
//! by `query_noise`, the noise modality gets a fresh random vector, and a
//! separate perturbation of the source's target vector serves as the
//! composition vector.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ModalityEntry, QueryFiles};
use super::vecs::{write_fvecs, write_id_lists};
use crate::dataset::MultiModalDataset;
use crate::error::{MstmError, Result};
use crate::vector::{normalize, MultiVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub objects: usize,
    pub dims: Vec<usize>,
    pub clusters: usize,
    /// Relative noise around cluster centers; 0 puts objects on the centers.
    pub spread: f64,
    /// Modality filled with label-independent random vectors.
    #[serde(default)]
    pub noise_modality: Option<usize>,
    #[serde(default)]
    pub queries: usize,
    #[serde(default)]
    pub query_noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_name() -> String {
    "synthetic".into()
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.objects == 0 {
            return Err(MstmError::usage("synthetic data needs at least one object"));
        }
        if self.dims.is_empty() || self.dims.iter().any(|d| *d < 2) {
            return Err(MstmError::usage("every modality needs dimension ≥ 2"));
        }
        if self.clusters == 0 {
            return Err(MstmError::usage("cluster count must be at least 1"));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite() && self.query_noise >= 0.0 && self.query_noise.is_finite()) {
            return Err(MstmError::usage("noise scales must be finite and non-negative"));
        }
        if let Some(i) = self.noise_modality {
            if i >= self.dims.len() {
                return Err(MstmError::usage(format!("noise modality {i} out of range")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: MultiModalDataset,
    pub labels: Vec<u32>,
    pub queries: Vec<MultiVector>,
    pub composition: Vec<Vec<f32>>,
    /// Source object of each query.
    pub positives: Vec<u32>,
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f32> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f32> {
    loop {
        let mut v = gaussian(rng, d);
        if normalize(&mut v) {
            return v;
        }
    }
}

/// `normalize(base + scale·g/√d)`, falling back to `base` if the sum vanishes.
fn perturb(rng: &mut ChaCha8Rng, base: &[f32], scale: f64) -> Vec<f32> {
    if scale == 0.0 {
        return base.to_vec();
    }
    let s = (scale / (base.len() as f64).sqrt()) as f32;
    let mut v: Vec<f32> = base.iter().zip(gaussian(rng, base.len())).map(|(b, g)| b + s * g).collect();
    if normalize(&mut v) {
        v
    } else {
        base.to_vec()
    }
}

/// Independent stream per purpose so adding queries leaves objects unchanged.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let m = spec.dims.len();
    let mut rng = stream(spec.seed, 0);
    let labels: Vec<u32> = (0..spec.objects).map(|_| rng.random_range(0..spec.clusters as u32)).collect();

    let mut vectors = Vec::with_capacity(m);
    for (i, &d) in spec.dims.iter().enumerate() {
        let mut rng = stream(spec.seed, 1 + i as u64);
        let mut buf = Vec::with_capacity(spec.objects * d);
        if spec.noise_modality == Some(i) {
            for _ in 0..spec.objects {
                buf.extend(unit(&mut rng, d));
            }
        } else {
            let centers: Vec<Vec<f32>> = (0..spec.clusters).map(|_| unit(&mut rng, d)).collect();
            for &label in &labels {
                buf.extend(perturb(&mut rng, &centers[label as usize], spec.spread));
            }
        }
        vectors.push(buf);
    }
    let dataset = MultiModalDataset::new(spec.dims.clone(), vectors)?;

    let mut rng = stream(spec.seed, 1 + m as u64);
    let mut queries = Vec::with_capacity(spec.queries);
    let mut composition = Vec::with_capacity(spec.queries);
    let mut positives = Vec::with_capacity(spec.queries);
    for _ in 0..spec.queries {
        let source = rng.random_range(0..spec.objects);
        let slots = (0..m)
            .map(|i| {
                let d = spec.dims[i];
                Some(if spec.noise_modality == Some(i) {
                    unit(&mut rng, d)
                } else {
                    perturb(&mut rng, dataset.vector(i, source), spec.query_noise)
                })
            })
            .collect();
        queries.push(MultiVector::new(slots)?);
        composition.push(perturb(&mut rng, dataset.vector(0, source), spec.query_noise));
        positives.push(source as u32);
    }
    Ok(SyntheticData {
        dataset,
        labels,
        queries,
        composition,
        positives,
    })
}

/// Writes vectors, queries and a manifest into `dir`; returns the manifest.
///
/// Files: `base_<i>.fvecs`, `query_<i>.fvecs`, `composition.fvecs`,
/// `positives.ivecs` and `manifest.toml`. The manifest points `truth` at
/// `truth.ivecs`, which ground-truth computation fills in later.
pub fn write_synthetic(spec: &SyntheticSpec, dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let data = generate_synthetic(spec)?;
    let mut modalities = Vec::new();
    for (i, &d) in spec.dims.iter().enumerate() {
        let base = format!("base_{i}.fvecs");
        write_fvecs(dir.join(&base), &data.dataset.modality_data(i).chunks_exact(d).collect::<Vec<_>>())?;
        let query = if spec.queries > 0 {
            let name = format!("query_{i}.fvecs");
            let recs: Vec<&[f32]> = data.queries.iter().map(|q| q.slots()[i].as_deref().expect("full query")).collect();
            write_fvecs(dir.join(&name), &recs)?;
            Some(name.into())
        } else {
            None
        };
        modalities.push(ModalityEntry {
            name: Some(if spec.noise_modality == Some(i) { format!("noise{i}") } else { format!("signal{i}") }),
            path: base.into(),
            dim: d,
            normalize: false,
            query,
        });
    }
    let queries = if spec.queries > 0 {
        write_fvecs(dir.join("composition.fvecs"), &data.composition)?;
        write_id_lists(dir.join("positives.ivecs"), &data.positives.iter().map(|p| vec![*p]).collect::<Vec<_>>())?;
        Some(QueryFiles {
            composition: Some("composition.fvecs".into()),
            positives: Some("positives.ivecs".into()),
            truth: Some("truth.ivecs".into()),
        })
    } else {
        None
    };
    let mut manifest = DatasetManifest {
        name: Some(spec.name.clone()),
        objects: Some(spec.objects),
        modalities,
        queries,
        base_dir: dir.to_path_buf(),
    };
    manifest.save(dir.join("manifest.toml"))?;
    manifest.base_dir = dir.to_path_buf();
    Ok(manifest)
}
