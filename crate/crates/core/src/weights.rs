//! Contrastive learning of modality weights.
//!
//! Each anchor query is paired with a positive object. Negatives are either
//! the exact top-ranked false objects under the current weights (hard) or
//! uniform random objects. The loss is a softmax cross-entropy of the
//! positive against its negatives, with scores given by joint similarity.
//!
//! Per-modality inner products do not depend on the weights, so they are
//! computed once per mining round and every gradient step in between only
//! touches `m`-length vectors.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::exact_topk;
use crate::dataset::{MultiModalDataset, ObjectId};
use crate::error::{MstmError, Result};
use crate::vector::{dot, MultiModal, MultiVector, WeightVector};

/// An anchor query and the id of the object it should retrieve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub anchor: MultiVector,
    pub positive: ObjectId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativeSampling {
    /// Top-ranked false objects under the current weights.
    #[default]
    Hard,
    /// Uniform random objects other than the positive.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Passes over the anchor set.
    pub iterations: usize,
    pub negatives_per_anchor: usize,
    pub minibatch: usize,
    /// Gradient steps between negative re-mining rounds.
    pub remine_every: usize,
    pub sampling: NegativeSampling,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.002,
            iterations: 700,
            negatives_per_anchor: 10,
            minibatch: 64,
            remine_every: 50,
            sampling: NegativeSampling::Hard,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MstmError::usage(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, v) in [
            ("iterations", self.iterations),
            ("negatives per anchor", self.negatives_per_anchor),
            ("minibatch", self.minibatch),
            ("remine interval", self.remine_every),
        ] {
            if v == 0 {
                return Err(MstmError::usage(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub weights: WeightVector,
    /// Mean minibatch loss per pass, measured before each step.
    pub loss: Vec<f64>,
    /// Per pass: fraction of anchors whose positive was inside the exact
    /// top-`|N⁻|` at the latest mining round.
    pub recall: Vec<f64>,
    pub steps: usize,
}

/// Exact top-`k` under `w` minus the positive.
pub fn mine_negatives(
    pair: &TrainingPair,
    data: &MultiModalDataset,
    w: &WeightVector,
    k: usize,
) -> Result<Vec<ObjectId>> {
    if data.is_empty() {
        return Err(MstmError::usage("cannot mine negatives from an empty dataset"));
    }
    check_pair(pair, data)?;
    data.check_weights(w)?;
    Ok(exact_topk(data, &pair.anchor, &w.squared(), k)
        .into_iter()
        .map(|s| s.id)
        .filter(|id| *id != pair.positive)
        .collect())
}

fn check_pair(pair: &TrainingPair, data: &MultiModalDataset) -> Result<()> {
    data.check_query(&pair.anchor)?;
    if pair.positive as usize >= data.len() {
        return Err(MstmError::usage(format!(
            "positive id {} out of range for {} objects",
            pair.positive,
            data.len()
        )));
    }
    Ok(())
}

/// Per-modality inner products of one anchor against its positive and its
/// negatives. Modalities missing from the anchor hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorProfile {
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

impl AnchorProfile {
    pub fn new(pair: &TrainingPair, negatives: &[ObjectId], data: &MultiModalDataset) -> Self {
        let ips = |id: ObjectId| -> Vec<f64> {
            (0..data.modalities())
                .map(|i| pair.anchor.slot(i).map_or(0.0, |q| dot(q, data.vector(i, id as usize))))
                .collect()
        };
        AnchorProfile {
            positive: ips(pair.positive),
            negatives: negatives.iter().map(|id| ips(*id)).collect(),
        }
    }

    fn score(ips: &[f64], omega: &[f64]) -> f64 {
        ips.iter().zip(omega).map(|(ip, w)| w * w * ip).sum()
    }

    /// Loss term and, when `grad` is given, its gradient added into it.
    fn accumulate(&self, omega: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let pos = Self::score(&self.positive, omega);
        let neg: Vec<f64> = self.negatives.iter().map(|n| Self::score(n, omega)).collect();
        let max = neg.iter().copied().fold(pos, f64::max);
        let total = (pos - max).exp() + neg.iter().map(|s| (s - max).exp()).sum::<f64>();
        let lse = max + total.ln();
        if let Some(grad) = grad {
            // d/dω_i of (lse − pos) with d score/dω_i = 2ω_i·IP_i.
            let p_pos = (pos - lse).exp();
            for (i, g) in grad.iter_mut().enumerate() {
                let mut expect = p_pos * self.positive[i];
                for (n, s) in self.negatives.iter().zip(&neg) {
                    expect += (s - lse).exp() * n[i];
                }
                *g += 2.0 * omega[i] * (expect - self.positive[i]);
            }
        }
        lse - pos
    }
}

/// Mean contrastive loss of a batch at 64-bit weights `omega`.
pub fn profile_loss(batch: &[AnchorProfile], omega: &[f64]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    batch.iter().map(|p| p.accumulate(omega, None)).sum::<f64>() / batch.len() as f64
}

/// Gradient of [`profile_loss`] with respect to each `ω_i`.
pub fn profile_gradient(batch: &[AnchorProfile], omega: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; omega.len()];
    if batch.is_empty() {
        return grad;
    }
    for p in batch {
        p.accumulate(omega, Some(&mut grad));
    }
    grad.iter_mut().for_each(|g| *g /= batch.len() as f64);
    grad
}

/// An anchor with its negative set attached.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedPair<'a> {
    pub pair: &'a TrainingPair,
    pub negatives: Vec<ObjectId>,
}

fn profiles(batch: &[MinedPair<'_>], data: &MultiModalDataset, w: &WeightVector) -> Result<Vec<AnchorProfile>> {
    data.check_weights(w)?;
    batch
        .iter()
        .map(|b| {
            check_pair(b.pair, data)?;
            if let Some(id) = b.negatives.iter().find(|id| **id as usize >= data.len()) {
                return Err(MstmError::usage(format!("negative id {id} out of range")));
            }
            Ok(AnchorProfile::new(b.pair, &b.negatives, data))
        })
        .collect()
}

fn omega64(w: &WeightVector) -> Vec<f64> {
    w.omega().iter().map(|x| *x as f64).collect()
}

/// Mean over the batch of `−log softmax(positive)` against its negatives.
pub fn contrastive_loss(batch: &[MinedPair<'_>], data: &MultiModalDataset, w: &WeightVector) -> Result<f64> {
    Ok(profile_loss(&profiles(batch, data, w)?, &omega64(w)))
}

/// Gradient of [`contrastive_loss`] over `ω`, negatives held fixed.
pub fn loss_gradient(batch: &[MinedPair<'_>], data: &MultiModalDataset, w: &WeightVector) -> Result<Vec<f64>> {
    Ok(profile_gradient(&profiles(batch, data, w)?, &omega64(w)))
}

/// Mean loss over all anchors against hard negatives mined under `w`.
pub fn hard_negative_loss(
    anchors: &[TrainingPair],
    data: &MultiModalDataset,
    w: &WeightVector,
    negatives_per_anchor: usize,
) -> Result<f64> {
    check_inputs(anchors, data)?;
    data.check_weights(w)?;
    let mined = mine_all(anchors, data, &w.squared(), negatives_per_anchor);
    let batch: Vec<AnchorProfile> = anchors
        .par_iter()
        .zip(&mined)
        .map(|(p, (negs, _))| AnchorProfile::new(p, negs, data))
        .collect();
    Ok(profile_loss(&batch, &omega64(w)))
}

fn check_inputs(anchors: &[TrainingPair], data: &MultiModalDataset) -> Result<()> {
    if anchors.is_empty() {
        return Err(MstmError::usage("no training anchors"));
    }
    if data.is_empty() {
        return Err(MstmError::usage("empty training dataset"));
    }
    anchors.iter().try_for_each(|p| check_pair(p, data))
}

/// Hard negatives for every anchor and whether its positive was ranked
/// inside the top `count`.
fn mine_all(anchors: &[TrainingPair], data: &MultiModalDataset, w2: &[f64], count: usize) -> Vec<(Vec<ObjectId>, bool)> {
    anchors
        .par_iter()
        .map(|p| {
            let top = exact_topk(data, &p.anchor, w2, count + 1);
            let hit = top.iter().take(count).any(|s| s.id == p.positive);
            let negs = top.iter().map(|s| s.id).filter(|id| *id != p.positive).take(count).collect();
            (negs, hit)
        })
        .collect()
}

fn random_negatives(rng: &mut ChaCha8Rng, n: usize, positive: ObjectId, count: usize) -> Vec<ObjectId> {
    let count = count.min(n - 1);
    let p = positive as usize;
    sample(rng, n - 1, count)
        .into_iter()
        .map(|x| if x >= p { x + 1 } else { x } as ObjectId)
        .collect()
}

/// Learns weights from random initialization in `(0, 1]`.
///
/// Anchors are shuffled each pass and split into minibatches. Every
/// `remine_every` steps, starting at step 0, negatives are refreshed for all
/// anchors under the current weights. After each step `ω` is clamped to
/// non-negative values.
pub fn train_weights(anchors: &[TrainingPair], data: &MultiModalDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    check_inputs(anchors, data)?;
    if data.len() < 2 {
        return Err(MstmError::usage("training needs at least two objects"));
    }
    let m = data.modalities();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut omega: Vec<f64> = (0..m).map(|_| 1.0 - rng.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..anchors.len()).collect();
    let mut current: Vec<AnchorProfile> = Vec::new();
    let mut recall = 0.0;
    let mut report = TrainReport {
        weights: WeightVector::uniform(m)?,
        loss: Vec::with_capacity(cfg.iterations),
        recall: Vec::with_capacity(cfg.iterations),
        steps: 0,
    };

    for epoch in 0..cfg.iterations {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.minibatch) {
            if report.steps % cfg.remine_every == 0 {
                let w2: Vec<f64> = omega.iter().map(|w| w * w).collect();
                let mined = mine_all(anchors, data, &w2, cfg.negatives_per_anchor);
                recall = mined.iter().filter(|(_, hit)| *hit).count() as f64 / anchors.len() as f64;
                let negatives: Vec<Vec<ObjectId>> = match cfg.sampling {
                    NegativeSampling::Hard => mined.into_iter().map(|(negs, _)| negs).collect(),
                    NegativeSampling::Random => anchors
                        .iter()
                        .map(|p| random_negatives(&mut rng, data.len(), p.positive, cfg.negatives_per_anchor))
                        .collect(),
                };
                current = anchors
                    .par_iter()
                    .zip(&negatives)
                    .map(|(p, negs)| AnchorProfile::new(p, negs, data))
                    .collect();
                log::debug!("pass {epoch} step {}: mined negatives, recall {recall:.4}", report.steps);
            }
            let profiles: Vec<AnchorProfile> = batch.iter().map(|i| current[*i].clone()).collect();
            let loss = profile_loss(&profiles, &omega);
            if !loss.is_finite() {
                return Err(MstmError::Train {
                    step: report.steps,
                    message: format!("loss became {loss}"),
                });
            }
            let grad = profile_gradient(&profiles, &omega);
            for (w, g) in omega.iter_mut().zip(&grad) {
                *w = (*w - cfg.learning_rate * g).max(0.0);
            }
            if omega.iter().any(|w| !w.is_finite()) || omega.iter().all(|w| *w == 0.0) {
                return Err(MstmError::Train {
                    step: report.steps,
                    message: format!("weights diverged to {omega:?}"),
                });
            }
            epoch_loss += loss * batch.len() as f64;
            report.steps += 1;
        }
        report.loss.push(epoch_loss / anchors.len() as f64);
        report.recall.push(recall);
    }
    report.weights = WeightVector::new(omega.iter().map(|w| *w as f32).collect()).map_err(|e| MstmError::Train {
        step: report.steps,
        message: e.to_string(),
    })?;
    log::info!(
        "trained {} steps, final loss {:.5}, weights² {:?}",
        report.steps,
        report.loss.last().copied().unwrap_or(0.0),
        report.weights.squared()
    );
    Ok(report)
}
