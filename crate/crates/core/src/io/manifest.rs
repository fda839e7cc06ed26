//! TOML dataset manifests.
//!
//! ```toml
//! name = "toy"             # optional
//! objects = 1000           # optional; checked against the files
//!
//! [[modality]]             # one table per modality, target modality first
//! name = "image"           # optional
//! path = "base_0.fvecs"    # object vectors
//! dim = 32
//! normalize = true         # normalize at load; otherwise vectors must be unit
//! query = "query_0.fvecs"  # optional; queries lack this modality without it
//!
//! [[modality]]
//! path = "base_1.fvecs"
//! dim = 16
//!
//! [queries]                # optional
//! composition = "composition.fvecs"  # target-space composition vectors
//! positives = "positives.ivecs"      # one source object per query
//! truth = "truth.ivecs"              # exact top-k′ ids per query
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::vecs::{read_fvecs, read_id_lists};
use crate::dataset::MultiModalDataset;
use crate::error::{MstmError, Result};
use crate::vector::{normalize, MultiVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub path: PathBuf,
    pub dim: usize,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFiles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composition: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positives: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objects: Option<usize>,
    #[serde(rename = "modality")]
    pub modalities: Vec<ModalityEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<QueryFiles>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| MstmError::Load(format!("cannot read manifest {}: {e}", path.display())))?;
        let mut manifest: DatasetManifest = toml::from_str(&text)
            .map_err(|e| MstmError::Load(format!("invalid manifest {}: {e}", path.display())))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| MstmError::usage(format!("cannot encode manifest: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.modalities.is_empty() {
            return Err(MstmError::Load("manifest lists no modality".into()));
        }
        if let Some(i) = self.modalities.iter().position(|e| e.dim == 0) {
            return Err(MstmError::Load(format!("modality {i} declares dimension 0")));
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn modality_count(&self) -> usize {
        self.modalities.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modalities.iter().map(|e| e.dim).collect()
    }

    fn query_file(&self, pick: fn(&QueryFiles) -> Option<&PathBuf>) -> Option<PathBuf> {
        self.queries.as_ref().and_then(pick).map(|p| self.resolve(p))
    }

    pub fn truth_path(&self) -> Option<PathBuf> {
        self.query_file(|q| q.truth.as_ref())
    }

    pub fn positives_path(&self) -> Option<PathBuf> {
        self.query_file(|q| q.positives.as_ref())
    }

    pub fn composition_path(&self) -> Option<PathBuf> {
        self.query_file(|q| q.composition.as_ref())
    }
}

fn read_checked(path: &Path, dim: usize, what: &str) -> Result<Vec<Vec<f32>>> {
    let records = read_fvecs(path)?;
    if let Some(r) = records.first() {
        if r.len() != dim {
            return Err(MstmError::Load(format!(
                "{what} file {} has dimension {}, manifest declares {dim}",
                path.display(),
                r.len()
            )));
        }
    }
    Ok(records)
}

/// Loads every modality, normalizing where flagged.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<MultiModalDataset> {
    let records = manifest
        .modalities
        .par_iter()
        .enumerate()
        .map(|(i, e)| read_checked(&manifest.resolve(&e.path), e.dim, &format!("modality {i}")))
        .collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = records.iter().map(Vec::len).collect();
    if counts.iter().any(|c| *c != counts[0]) {
        let listed: Vec<String> = counts
            .iter()
            .enumerate()
            .map(|(i, c)| format!("modality {i} ({}): {c}", manifest.modalities[i].path.display()))
            .collect();
        return Err(MstmError::Load(format!(
            "modality files disagree on object count: {}",
            listed.join(", ")
        )));
    }
    if let Some(n) = manifest.objects {
        if n != counts[0] {
            return Err(MstmError::Load(format!(
                "manifest declares {n} objects, files hold {}",
                counts[0]
            )));
        }
    }
    let dims = manifest.dims();
    let flat: Vec<Vec<f32>> = records
        .into_iter()
        .zip(&manifest.modalities)
        .map(|(recs, e)| {
            let mut buf: Vec<f32> = recs.into_iter().flatten().collect();
            if e.normalize {
                for v in buf.chunks_exact_mut(e.dim) {
                    normalize(v);
                }
            }
            buf
        })
        .collect();
    // Zero vectors survive `normalize` unchanged and are rejected here.
    MultiModalDataset::new(dims, flat)
}

/// Query vectors and their optional companions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub queries: Vec<MultiVector>,
    /// Target-space composition vector per query.
    pub composition: Option<Vec<Vec<f32>>>,
    /// Source object per query.
    pub positives: Option<Vec<u32>>,
}

/// Loads queries from the per-modality `query` files.
pub fn load_queries(manifest: &DatasetManifest) -> Result<QuerySet> {
    let mut slots: Vec<Option<Vec<Vec<f32>>>> = Vec::new();
    for (i, e) in manifest.modalities.iter().enumerate() {
        slots.push(match &e.query {
            Some(p) => Some(prepare(read_checked(&manifest.resolve(p), e.dim, &format!("query modality {i}"))?, e.normalize)),
            None => None,
        });
    }
    let Some(count) = slots.iter().flatten().map(Vec::len).next() else {
        return Err(MstmError::Setup("manifest names no query file".into()));
    };
    if let Some(i) = slots.iter().position(|s| s.as_ref().is_some_and(|s| s.len() != count)) {
        return Err(MstmError::Load(format!(
            "query modality {i} holds {} records, expected {count}",
            slots[i].as_ref().map_or(0, Vec::len)
        )));
    }
    let mut columns: Vec<Option<std::vec::IntoIter<Vec<f32>>>> = slots.into_iter().map(|s| s.map(Vec::into_iter)).collect();
    let queries = (0..count)
        .map(|_| MultiVector::new(columns.iter_mut().map(|c| c.as_mut().and_then(Iterator::next)).collect()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| MstmError::Load(format!("invalid query: {e}")))?;

    let composition = match manifest.composition_path() {
        Some(p) => {
            let recs = prepare(read_checked(&p, manifest.modalities[0].dim, "composition")?, manifest.modalities[0].normalize);
            check_count(recs.len(), count, "composition")?;
            Some(recs)
        }
        None => None,
    };
    let positives = match manifest.positives_path() {
        Some(p) => {
            let lists = read_id_lists(&p)?;
            check_count(lists.len(), count, "positives")?;
            Some(
                lists
                    .into_iter()
                    .enumerate()
                    .map(|(i, l)| match l.as_slice() {
                        [id] => Ok(*id),
                        _ => Err(MstmError::Load(format!("positives record {i} must hold exactly one id"))),
                    })
                    .collect::<Result<_>>()?,
            )
        }
        None => None,
    };
    Ok(QuerySet {
        queries,
        composition,
        positives,
    })
}

fn prepare(mut recs: Vec<Vec<f32>>, normalize_input: bool) -> Vec<Vec<f32>> {
    if normalize_input {
        for r in &mut recs {
            normalize(r);
        }
    }
    recs
}

fn check_count(found: usize, expected: usize, what: &str) -> Result<()> {
    if found != expected {
        return Err(MstmError::Load(format!("{what} file holds {found} records, expected {expected}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::vecs::{write_fvecs, write_id_lists};
    use crate::vector::{l2_norm, MultiModal};

    fn entry(path: &str, dim: usize, normalize: bool) -> ModalityEntry {
        ModalityEntry {
            name: None,
            path: path.into(),
            dim,
            normalize,
            query: None,
        }
    }

    fn manifest(dir: &Path, modalities: Vec<ModalityEntry>) -> DatasetManifest {
        let m = DatasetManifest {
            name: Some("t".into()),
            objects: None,
            modalities,
            queries: None,
            base_dir: PathBuf::new(),
        };
        let path = dir.join("manifest.toml");
        m.save(&path).unwrap();
        DatasetManifest::load(&path).unwrap()
    }

    fn rows(n: usize, dim: usize, scale: f32) -> Vec<Vec<f32>> {
        (0..n).map(|i| (0..dim).map(|j| scale * (1.0 + ((i * 7 + j * 3) % 11) as f32)).collect()).collect()
    }

    #[test]
    fn loads_aligned_files_and_normalizes() {
        let dir = tempfile::tempdir().unwrap();
        write_fvecs(dir.path().join("a.fvecs"), &rows(100, 4, 3.0)).unwrap();
        write_fvecs(dir.path().join("b.fvecs"), &rows(100, 2, 0.1)).unwrap();
        let m = manifest(dir.path(), vec![entry("a.fvecs", 4, true), entry("b.fvecs", 2, true)]);
        let data = load_dataset(&m).unwrap();
        assert_eq!((data.len(), data.modalities()), (100, 2));
        for i in 0..2 {
            for o in 0..100 {
                assert!((l2_norm(data.vector(i, o)) - 1.0).abs() < 1e-4);
            }
        }
        let raw = manifest(dir.path(), vec![entry("a.fvecs", 4, false)]);
        assert!(load_dataset(&raw).is_err());
    }

    #[test]
    fn mismatches_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_fvecs(dir.path().join("a.fvecs"), &rows(100, 4, 1.0)).unwrap();
        write_fvecs(dir.path().join("b.fvecs"), &rows(99, 2, 1.0)).unwrap();
        let m = manifest(dir.path(), vec![entry("a.fvecs", 4, true), entry("b.fvecs", 2, true)]);
        let msg = load_dataset(&m).unwrap_err().to_string();
        assert!(msg.contains("100") && msg.contains("99") && msg.contains("b.fvecs"), "{msg}");
        let m = manifest(dir.path(), vec![entry("a.fvecs", 5, true)]);
        assert!(load_dataset(&m).unwrap_err().to_string().contains("dimension 4"));
        write_fvecs(dir.path().join("z.fvecs"), &[vec![0.0f32, 0.0]]).unwrap();
        let m = manifest(dir.path(), vec![entry("z.fvecs", 2, true)]);
        assert!(load_dataset(&m).is_err());
    }

    #[test]
    fn loads_queries_with_companions() {
        let dir = tempfile::tempdir().unwrap();
        write_fvecs(dir.path().join("a.fvecs"), &rows(10, 3, 1.0)).unwrap();
        write_fvecs(dir.path().join("b.fvecs"), &rows(10, 2, 1.0)).unwrap();
        write_fvecs(dir.path().join("qa.fvecs"), &rows(4, 3, 2.0)).unwrap();
        write_fvecs(dir.path().join("c.fvecs"), &rows(4, 3, 5.0)).unwrap();
        write_id_lists(dir.path().join("p.ivecs"), &[vec![1], vec![2], vec![3], vec![4]]).unwrap();
        let mut a = entry("a.fvecs", 3, true);
        a.query = Some("qa.fvecs".into());
        let mut m = manifest(dir.path(), vec![a, entry("b.fvecs", 2, true)]);
        m.queries = Some(QueryFiles {
            composition: Some("c.fvecs".into()),
            positives: Some("p.ivecs".into()),
            truth: None,
        });
        let q = load_queries(&m).unwrap();
        assert_eq!(q.queries.len(), 4);
        assert!(q.queries.iter().all(|v| v.mask() == vec![true, false]));
        assert_eq!(q.positives, Some(vec![1, 2, 3, 4]));
        assert_eq!(q.composition.unwrap().len(), 4);

        let path = dir.path().join("bad.toml");
        fs::write(&path, "[[modality]]\npath = \"a.fvecs\"\ndim = 3\ncolour = 1\n").unwrap();
        assert!(DatasetManifest::load(&path).is_err());
    }
}
