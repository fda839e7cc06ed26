//! Vector arithmetic and joint similarity in the weighted concatenated space.
//!
//! An object with `m` modalities is scored against another through the inner
//! product of their concatenated vectors `[ω_0·a_0, …, ω_{m-1}·a_{m-1}]`.
//! That product never needs to be materialized: it equals
//! `Σ_i ω_i² · IP(a_i, b_i)`, which is what every routine here computes.

use crate::error::{MstmError, Result};

/// Maximum deviation from unit norm accepted for a stored vector.
pub const NORM_TOLERANCE: f64 = 1e-4;

/// Inner product with 64-bit accumulation.
///
/// Every similarity in the crate funnels through this function so that two
/// code paths scoring the same pair always agree bit for bit.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] as f64 * y[0] as f64;
        acc[1] += x[1] as f64 * y[1] as f64;
        acc[2] += x[2] as f64 * y[2] as f64;
        acc[3] += x[3] as f64 * y[3] as f64;
    }
    let mut tail = 0f64;
    for (x, y) in ta.iter().zip(tb) {
        tail += *x as f64 * *y as f64;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `Σ a_j·b_j` for two vectors of one modality.
pub fn inner_product(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(MstmError::usage(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dot(a, b))
}

/// Similarity measurement error between the target-modality vectors of the
/// true result and a returned result: `1 − IP`.
pub fn sme(truth_target: &[f32], result_target: &[f32]) -> Result<f64> {
    Ok(1.0 - inner_product(truth_target, result_target)?)
}

pub fn l2_norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

/// Scales `v` to unit length in place. Returns `false` for a zero vector.
pub fn normalize(v: &mut [f32]) -> bool {
    let norm = l2_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x = (*x as f64 / norm) as f32;
    }
    true
}

pub fn is_unit(v: &[f32]) -> bool {
    (l2_norm(v) - 1.0).abs() <= NORM_TOLERANCE
}

/// Per-modality weights `ω_i` defining the concatenated space.
///
/// Stored as 32-bit values so that persisted indexes echo the exact weights
/// they were built with.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    omega: Vec<f32>,
}

impl WeightVector {
    pub fn new(omega: Vec<f32>) -> Result<Self> {
        if omega.is_empty() {
            return Err(MstmError::usage("weight vector needs at least one modality"));
        }
        if let Some(w) = omega.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(MstmError::usage(format!(
                "weights must be finite and non-negative, got {w}"
            )));
        }
        let c: f64 = omega.iter().map(|w| (*w as f64).powi(2)).sum();
        if !(c > 0.0 && c.is_finite()) {
            return Err(MstmError::usage("at least one weight must be positive"));
        }
        Ok(WeightVector { omega })
    }

    /// Builds weights from squared values `ω_i²`, the form used in weight files.
    pub fn from_squared(squared: &[f64]) -> Result<Self> {
        if let Some(s) = squared.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(MstmError::usage(format!(
                "squared weights must be finite and non-negative, got {s}"
            )));
        }
        WeightVector::new(squared.iter().map(|s| s.sqrt() as f32).collect())
    }

    pub fn one_hot(m: usize, modality: usize) -> Result<Self> {
        if modality >= m {
            return Err(MstmError::usage(format!(
                "modality {modality} out of range for m = {m}"
            )));
        }
        let mut omega = vec![0.0; m];
        omega[modality] = 1.0;
        WeightVector::new(omega)
    }

    /// Equal weights with `Σ ω_i² = 1`.
    pub fn uniform(m: usize) -> Result<Self> {
        WeightVector::new(vec![(1.0 / m as f64).sqrt() as f32; m])
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega(&self) -> &[f32] {
        &self.omega
    }

    /// `ω_i²` per modality, in 64-bit.
    pub fn squared(&self) -> Vec<f64> {
        self.omega.iter().map(|w| (*w as f64).powi(2)).collect()
    }

    /// Squared norm of a concatenated vector under these weights (all
    /// modalities present).
    pub fn norm_sq(&self) -> f64 {
        self.squared().iter().sum()
    }
}

/// `Σ_{i present} ω_i²`: the squared norm of a concatenated unit-modality
/// vector with the given presence mask.
pub fn concat_norm_sq(w: &WeightVector, mask: &[bool]) -> f64 {
    w.squared()
        .iter()
        .zip(mask)
        .filter(|(_, present)| **present)
        .map(|(s, _)| *s)
        .sum()
}

/// Anything that exposes one optional vector per modality.
pub trait MultiModal {
    fn modalities(&self) -> usize;
    fn slot(&self, modality: usize) -> Option<&[f32]>;

    fn mask(&self) -> Vec<bool> {
        (0..self.modalities()).map(|i| self.slot(i).is_some()).collect()
    }
}

/// One vector per modality, some of which may be absent.
///
/// Used for queries (where the caller may omit modalities) and for detached
/// copies of dataset objects.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    slots: Vec<Option<Vec<f32>>>,
}

pub type MultiModalQuery = MultiVector;

impl MultiVector {
    /// Wraps already-normalized vectors. Rejects empty masks and vectors whose
    /// norm is off by more than [`NORM_TOLERANCE`].
    pub fn new(slots: Vec<Option<Vec<f32>>>) -> Result<Self> {
        if slots.iter().all(Option::is_none) {
            return Err(MstmError::usage("multi-vector has no modality present"));
        }
        for (i, slot) in slots.iter().enumerate() {
            if let Some(v) = slot {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(MstmError::usage(format!(
                        "modality {i} has a non-finite component"
                    )));
                }
                if !is_unit(v) {
                    return Err(MstmError::usage(format!(
                        "modality {i} vector has norm {:.6}, expected 1",
                        l2_norm(v)
                    )));
                }
            }
        }
        Ok(MultiVector { slots })
    }

    /// Normalizes every present slot, then behaves like [`MultiVector::new`].
    pub fn normalized(mut slots: Vec<Option<Vec<f32>>>) -> Result<Self> {
        for (i, slot) in slots.iter_mut().enumerate() {
            if let Some(v) = slot {
                if !normalize(v) {
                    return Err(MstmError::usage(format!(
                        "modality {i} vector has zero or non-finite norm"
                    )));
                }
            }
        }
        MultiVector::new(slots)
    }

    /// Every modality present.
    pub fn full(vectors: Vec<Vec<f32>>) -> Result<Self> {
        MultiVector::new(vectors.into_iter().map(Some).collect())
    }

    pub fn slots(&self) -> &[Option<Vec<f32>>] {
        &self.slots
    }

    /// Replaces the target-modality (slot 0) vector, e.g. with a composition
    /// vector produced by a multimodal encoder.
    pub fn with_target(&self, target: Vec<f32>) -> Result<Self> {
        let mut slots = self.slots.clone();
        slots[0] = Some(target);
        MultiVector::new(slots)
    }

    /// Keeps only the modalities flagged in `mask`.
    pub fn masked(&self, mask: &[bool]) -> Result<Self> {
        let slots = self
            .slots
            .iter()
            .zip(mask)
            .map(|(s, keep)| if *keep { s.clone() } else { None })
            .collect();
        MultiVector::new(slots)
    }
}

impl MultiModal for MultiVector {
    fn modalities(&self) -> usize {
        self.slots.len()
    }

    fn slot(&self, modality: usize) -> Option<&[f32]> {
        self.slots.get(modality).and_then(|s| s.as_deref())
    }
}

/// `Σ_i ω_i² · IP(a_i, b_i)` over modalities present on both sides.
///
/// A modality absent on either side contributes exactly zero, the same as
/// setting its weight to zero.
pub fn joint_similarity<A, B>(a: &A, b: &B, w: &WeightVector) -> Result<f64>
where
    A: MultiModal + ?Sized,
    B: MultiModal + ?Sized,
{
    let m = w.len();
    if a.modalities() != m || b.modalities() != m {
        return Err(MstmError::usage(format!(
            "schema mismatch: {} and {} modalities against {m} weights",
            a.modalities(),
            b.modalities()
        )));
    }
    for i in 0..m {
        if let (Some(x), Some(y)) = (a.slot(i), b.slot(i)) {
            if x.len() != y.len() {
                return Err(MstmError::usage(format!(
                    "modality {i} dimension mismatch: {} vs {}",
                    x.len(),
                    y.len()
                )));
            }
        }
    }
    Ok(weighted_ip(a, b, &w.squared()))
}

/// Unchecked core of [`joint_similarity`]; `w2` holds `ω_i²`.
#[inline]
pub(crate) fn weighted_ip<A, B>(a: &A, b: &B, w2: &[f64]) -> f64
where
    A: MultiModal + ?Sized,
    B: MultiModal + ?Sized,
{
    let mut acc = 0.0;
    for (i, &s) in w2.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        if let (Some(x), Some(y)) = (a.slot(i), b.slot(i)) {
            acc += s * dot(x, y);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(v: &[f32]) -> Vec<f32> {
        let mut v = v.to_vec();
        assert!(normalize(&mut v));
        v
    }

    /// Two-modality vector whose modality IPs against `base()` are `s0`, `s1`.
    fn with_ips(s0: f32, s1: f32) -> MultiVector {
        let make = |s: f32| vec![s, (1.0 - s * s).max(0.0).sqrt()];
        MultiVector::full(vec![make(s0), make(s1)]).unwrap()
    }

    fn base() -> MultiVector {
        MultiVector::full(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(inner_product(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let v = unit(&[3.0, 4.0, 12.0]);
        assert!((inner_product(&v, &v).unwrap() - 1.0).abs() < 1e-6);
        let ip = inner_product(&[0.6, 0.8], &[0.8, 0.6]).unwrap();
        assert!((ip - 0.96).abs() < 1e-6);
        assert!(matches!(
            inner_product(&[1.0], &[1.0, 0.0]),
            Err(MstmError::Usage(_))
        ));
    }

    #[test]
    fn sme_examples() {
        let v = unit(&[1.0, 2.0, 3.0]);
        assert!(sme(&v, &v).unwrap().abs() < 1e-6);
        assert_eq!(sme(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((sme(&[0.6, 0.8], &[0.8, 0.6]).unwrap() - 0.04).abs() < 1e-6);
        assert!(sme(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn zero_weight_eliminates_modality() {
        let w = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let s = joint_similarity(&base(), &with_ips(0.3, 0.9), &w).unwrap();
        assert!((s - 0.3).abs() < 1e-6);
    }

    #[test]
    fn weighted_sum_example() {
        let w = WeightVector::from_squared(&[0.5, 0.5]).unwrap();
        let s = joint_similarity(&base(), &with_ips(0.6, 1.0), &w).unwrap();
        assert!((s - 0.8).abs() < 1e-6);
    }

    #[test]
    fn concat_norm_sq_examples() {
        let w = WeightVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(concat_norm_sq(&w, &[true, true]), 1.0);
        let w = WeightVector::from_squared(&[0.1199, 0.5572]).unwrap();
        assert!((concat_norm_sq(&w, &[true, true]) - 0.6771).abs() < 1e-6);
        assert_eq!(concat_norm_sq(&w, &[false, false]), 0.0);
    }

    #[test]
    fn missing_modality_equals_zero_weight() {
        let q = MultiVector::new(vec![Some(vec![1.0, 0.0]), None]).unwrap();
        let o = with_ips(0.4, 0.9);
        let w = WeightVector::new(vec![0.7, 0.7]).unwrap();
        let masked = joint_similarity(&q, &o, &w).unwrap();
        let zeroed = joint_similarity(&base(), &o, &WeightVector::new(vec![0.7, 0.0]).unwrap())
            .unwrap();
        assert_eq!(masked, zeroed);
    }

    #[test]
    fn schema_and_weight_validation() {
        let w = WeightVector::new(vec![1.0]).unwrap();
        assert!(joint_similarity(&base(), &base(), &w).is_err());
        assert!(WeightVector::new(vec![0.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![-0.1, 1.0]).is_err());
        assert!(WeightVector::new(vec![f32::NAN]).is_err());
        assert!(MultiVector::new(vec![None, None]).is_err());
        assert!(MultiVector::new(vec![Some(vec![2.0, 0.0])]).is_err());
    }

    #[test]
    fn squared_weights_round_trip_exactly() {
        let w = WeightVector::new(vec![0.123_456_7, 0.9, 1e-3]).unwrap();
        assert_eq!(WeightVector::from_squared(&w.squared()).unwrap(), w);
    }

    fn random_instance() -> impl Strategy<Value = (Vec<Vec<f32>>, Vec<Vec<f32>>, Vec<f32>)> {
        (1usize..=4, 1usize..=64).prop_flat_map(|(m, d)| {
            let vecs = proptest::collection::vec(
                proptest::collection::vec(-1.0f32..1.0, d),
                m,
            );
            let weights = proptest::collection::vec(0.0f32..2.0, m);
            (vecs.clone(), vecs, weights)
        })
    }

    fn prepare(raw: Vec<Vec<f32>>) -> Option<MultiVector> {
        MultiVector::normalized(raw.into_iter().map(Some).collect()).ok()
    }

    proptest! {
        #[test]
        fn matches_explicit_concatenation((a, b, w) in random_instance()) {
            prop_assume!(w.iter().any(|x| *x > 1e-3));
            let (Some(a), Some(b)) = (prepare(a), prepare(b)) else { return Ok(()) };
            let w = WeightVector::new(w).unwrap();
            let concat = |v: &MultiVector| -> Vec<f64> {
                v.slots().iter().zip(w.omega()).flat_map(|(s, om)| {
                    s.as_ref().unwrap().iter().map(move |x| *x as f64 * *om as f64)
                }).collect()
            };
            let explicit: f64 = concat(&a).iter().zip(concat(&b)).map(|(x, y)| x * y).sum();
            let joint = joint_similarity(&a, &b, &w).unwrap();
            prop_assert!((joint - explicit).abs() < 1e-5);
            prop_assert_eq!(joint, joint_similarity(&b, &a, &w).unwrap());

            // IP = C − ½·Σ ω_i²·‖a_i − b_i‖²
            let c = w.norm_sq();
            let half_dist: f64 = a.slots().iter().zip(b.slots()).zip(w.squared())
                .map(|((x, y), s)| {
                    let d2: f64 = x.as_ref().unwrap().iter().zip(y.as_ref().unwrap())
                        .map(|(p, q)| (*p as f64 - *q as f64).powi(2)).sum();
                    s * d2
                }).sum::<f64>() * 0.5;
            prop_assert!((joint - (c - half_dist)).abs() < 1e-5);
        }

        #[test]
        fn increasing_a_weight_with_positive_ip_increases_score(
            (a, b, w) in random_instance(), j in 0usize..4, bump in 0.01f32..1.0
        ) {
            let (Some(a), Some(b)) = (prepare(a), prepare(b)) else { return Ok(()) };
            let j = j % w.len();
            prop_assume!(dot(a.slot(j).unwrap(), b.slot(j).unwrap()) > 1e-3);
            let mut w = w;
            w[j] += 0.01;
            let before = joint_similarity(&a, &b, &WeightVector::new(w.clone()).unwrap()).unwrap();
            w[j] += bump;
            let after = joint_similarity(&a, &b, &WeightVector::new(w).unwrap()).unwrap();
            prop_assert!(after > before);
        }
    }
}
