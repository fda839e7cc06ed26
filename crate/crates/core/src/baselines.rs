//! Comparison systems and exact oracles.
//!
//! * JE: single-vector search on the target modality with a composition
//!   vector as the query.
//! * MR: one search stream per query modality, candidate lists intersected.
//! * Exact variants of joint search and MR by full scan.

use std::collections::HashMap;

use crate::dataset::{MultiModalDataset, ObjectId};
use crate::error::{MstmError, Result};
use crate::index::{build_fused_index, BuildParams, FusedIndex};
use crate::rank::{by_rank, Scored};
use crate::search::{JointSearcher, SearchParams, SearchStats};
use crate::vector::{weighted_ip, MultiModal, MultiVector, WeightVector};

/// Exact top-`k` by joint similarity over every object. `k` is clamped to `n`.
pub fn brute_force_topk(data: &MultiModalDataset, q: &MultiVector, w: &WeightVector, k: usize) -> Result<Vec<Scored>> {
    data.check_query(q)?;
    data.check_weights(w)?;
    Ok(exact_topk(data, q, &w.squared(), k))
}

/// Unchecked core of [`brute_force_topk`]; `w2` holds `ω_i²`.
pub(crate) fn exact_topk<Q: MultiModal + ?Sized>(data: &MultiModalDataset, q: &Q, w2: &[f64], k: usize) -> Vec<Scored> {
    let mut all: Vec<Scored> = (0..data.len())
        .map(|o| Scored::new(o as ObjectId, weighted_ip(q, &data.object(o), w2)))
        .collect();
    let k = k.min(all.len());
    if k == 0 {
        return Vec::new();
    }
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_rank);
        all.truncate(k);
    }
    all.sort_by(by_rank);
    all
}

/// How MR combines its per-stream candidate lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergePolicy {
    /// Candidates requested from each stream.
    pub candidates: usize,
    pub k: usize,
}

impl MergePolicy {
    pub fn new(candidates: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(MstmError::usage("k must be at least 1"));
        }
        if candidates < k {
            return Err(MstmError::usage(format!(
                "per-stream candidate count c = {candidates} is smaller than k = {k}"
            )));
        }
        Ok(MergePolicy { candidates, k })
    }
}

/// Merges ranked candidate lists, best first in each.
///
/// Ids present in every list come first, ordered by the sum of their ranks.
/// Short results are padded from the remaining ids by the same rank-sum,
/// where an id missing from a list counts rank `c` there. Ties go to the
/// lower id. The output has at most `k` ids.
pub fn merge_streams(lists: &[Vec<ObjectId>], policy: &MergePolicy) -> Vec<ObjectId> {
    let c = policy.candidates;
    let mut ranks: HashMap<ObjectId, (usize, usize)> = HashMap::new();
    for list in lists {
        for (r, id) in list.iter().enumerate() {
            let e = ranks.entry(*id).or_insert((0, 0));
            e.0 += 1;
            e.1 += r;
        }
    }
    let t = lists.len();
    let mut all: Vec<(bool, usize, ObjectId)> = ranks
        .into_iter()
        .map(|(id, (seen, sum))| (seen < t, sum + (t - seen) * c, id))
        .collect();
    all.sort_unstable();
    all.into_iter().take(policy.k).map(|(_, _, id)| id).collect()
}

/// One index per modality, each built with one-hot weights on that modality.
#[derive(Debug, Clone, PartialEq)]
pub struct MrIndexSet {
    indexes: Vec<FusedIndex>,
}

impl MrIndexSet {
    pub fn build(data: &MultiModalDataset, params: &BuildParams) -> Result<Self> {
        let indexes = (0..data.modalities())
            .map(|i| build_fused_index(data, &WeightVector::one_hot(data.modalities(), i)?, params))
            .collect::<Result<_>>()?;
        Ok(MrIndexSet { indexes })
    }

    pub fn from_indexes(indexes: Vec<FusedIndex>) -> Result<Self> {
        let Some(first) = indexes.first() else {
            return Err(MstmError::usage("MR needs at least one index"));
        };
        let m = indexes.len();
        for (i, index) in indexes.iter().enumerate() {
            if index.len() != first.len() || index.fingerprint() != first.fingerprint() {
                return Err(MstmError::usage(format!("index {i} covers a different dataset")));
            }
            if index.weights() != &WeightVector::one_hot(m, i)? {
                return Err(MstmError::usage(format!("index {i} is not one-hot on modality {i}")));
            }
        }
        Ok(MrIndexSet { indexes })
    }

    pub fn indexes(&self) -> &[FusedIndex] {
        &self.indexes
    }

    /// The target-modality index, which also serves JE.
    pub fn target(&self) -> &FusedIndex {
        &self.indexes[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrOutcome {
    pub ids: Vec<ObjectId>,
    /// Summed over all streams.
    pub stats: SearchStats,
}

/// Slot vectors for each MR stream: the query's present modalities, with the
/// composition vector standing in for modality 0 when given.
fn streams<'q>(q: &'q MultiVector, composition: Option<&'q [f32]>) -> Vec<(usize, &'q [f32])> {
    (0..q.modalities())
        .filter_map(|i| match (i, composition) {
            (0, Some(c)) => Some((0, c)),
            _ => q.slot(i).map(|v| (i, v)),
        })
        .collect()
}

fn single_slot(m: usize, modality: usize, v: &[f32]) -> Result<MultiVector> {
    let mut slots = vec![None; m];
    slots[modality] = Some(v.to_vec());
    MultiVector::new(slots)
}

/// Multi-stream retrieval over approximate per-modality indexes.
///
/// Each stream searches with `l = max(l, c)`, clamped to `n`.
pub fn mr_search(
    set: &MrIndexSet,
    data: &MultiModalDataset,
    q: &MultiVector,
    composition: Option<&[f32]>,
    policy: &MergePolicy,
    search: &SearchParams,
) -> Result<MrOutcome> {
    data.check_query(q)?;
    if set.indexes.len() != data.modalities() {
        return Err(MstmError::usage(format!(
            "{} MR indexes for {} modalities",
            set.indexes.len(),
            data.modalities()
        )));
    }
    let n = data.len();
    let c = policy.candidates.min(n);
    let mut stats = SearchStats::default();
    let mut lists = Vec::new();
    for (i, v) in streams(q, composition) {
        let sub = single_slot(data.modalities(), i, v)?;
        let searcher = JointSearcher::new(&set.indexes[i], data)?;
        let mut params = search.clone();
        params.k = c;
        params.l = search.l.max(c).min(n);
        let out = searcher.search(&sub, &params)?;
        stats.add(&out.stats);
        lists.push(out.ids());
    }
    Ok(MrOutcome {
        ids: merge_streams(&lists, &MergePolicy { candidates: c, k: policy.k.min(c) }),
        stats,
    })
}

/// MR with exact per-stream top-`c` lists.
pub fn mr_exact(
    data: &MultiModalDataset,
    q: &MultiVector,
    composition: Option<&[f32]>,
    policy: &MergePolicy,
) -> Result<Vec<ObjectId>> {
    data.check_query(q)?;
    let m = data.modalities();
    let c = policy.candidates.min(data.len());
    let mut lists = Vec::new();
    for (i, v) in streams(q, composition) {
        let sub = single_slot(m, i, v)?;
        let w = WeightVector::one_hot(m, i)?;
        lists.push(brute_force_topk(data, &sub, &w, c)?.iter().map(|s| s.id).collect());
    }
    Ok(merge_streams(&lists, &MergePolicy { candidates: c, k: policy.k.min(c) }))
}

/// Single-vector search on the target modality.
///
/// `index` must be one-hot on modality 0, such as [`MrIndexSet::target`].
pub fn je_search(
    index: &FusedIndex,
    data: &MultiModalDataset,
    composition: &[f32],
    params: &SearchParams,
) -> Result<crate::search::SearchOutcome> {
    let m = data.modalities();
    if index.weights() != &WeightVector::one_hot(m, 0)? {
        return Err(MstmError::usage("JE needs an index built on modality 0 alone"));
    }
    let q = single_slot(m, 0, composition)?;
    JointSearcher::new(index, data)?.search(&q, params)
}
