//! Files: vector data, manifests, synthetic data, weights and training logs.

pub mod manifest;
pub mod synthetic;
pub mod vecs;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{MstmError, Result};
use crate::vector::WeightVector;
use crate::weights::TrainReport;

pub use manifest::{load_dataset, load_queries, DatasetManifest, ModalityEntry, QueryFiles, QuerySet};
pub use synthetic::{generate_synthetic, write_synthetic, SyntheticData, SyntheticSpec};
pub use vecs::{read_fvecs, read_id_lists, read_ivecs, write_fvecs, write_id_lists, write_ivecs};

/// Weights as a JSON object from modality index to `ω_i²`, e.g.
/// `{"0": 0.1199, "1": 0.5572}`. Every index from 0 to m − 1 must appear.
pub fn weights_to_json(w: &WeightVector) -> String {
    let map: BTreeMap<String, f64> = w.squared().iter().enumerate().map(|(i, s)| (i.to_string(), *s)).collect();
    let mut text = serde_json::to_string_pretty(&map).expect("map of floats serializes");
    text.push('\n');
    text
}

pub fn weights_from_json(text: &str) -> Result<WeightVector> {
    let map: BTreeMap<String, f64> =
        serde_json::from_str(text).map_err(|e| MstmError::Load(format!("invalid weights file: {e}")))?;
    let mut squared = vec![None; map.len()];
    for (key, value) in map {
        let i: usize = key
            .parse()
            .map_err(|_| MstmError::Load(format!("weights key {key:?} is not a modality index")))?;
        let slot = squared
            .get_mut(i)
            .ok_or_else(|| MstmError::Load(format!("weights skip modalities below index {i}")))?;
        *slot = Some(value);
    }
    let squared: Vec<f64> = squared.into_iter().map(|s| s.expect("keys are dense")).collect();
    WeightVector::from_squared(&squared)
}

pub fn write_weights(path: impl AsRef<Path>, w: &WeightVector) -> Result<()> {
    fs::write(path, weights_to_json(w))?;
    Ok(())
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<WeightVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| MstmError::Load(format!("cannot read weights {}: {e}", path.display())))?;
    weights_from_json(&text)
}

/// Per-pass loss and recall as CSV with header `iteration,loss,recall`.
pub fn training_log_csv(report: &TrainReport) -> String {
    let mut out = String::from("iteration,loss,recall\n");
    for (i, (loss, recall)) in report.loss.iter().zip(&report.recall).enumerate() {
        writeln!(out, "{},{loss},{recall}", i + 1).expect("write to string");
    }
    out
}
