//! Merging-free joint search over a fused index.
//!
//! A fixed-size result set `R` of `l` candidates starts from the index seed
//! plus `l − 1` random vertices. Each round expands the best unvisited member
//! of `R`; a neighbor replaces the worst member when it scores strictly higher.
//! The search ends once every member of `R` has been expanded.
//!
//! With pruning enabled, a neighbor's modalities are scanned one at a time.
//! For unit vectors `½‖q_i − u_i‖² = 1 − IP(q_i, u_i)`, so after `x` scanned
//! modalities the joint score is bounded above by
//! `C − ½·Σ_{scanned} ω_i²·‖q_i − u_i‖²`. As soon as that bound falls to the
//! score of the worst member of `R`, the neighbor cannot enter and the scan
//! stops. Neighbors that survive every step get their exact score.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{MultiModalDataset, ObjectId};
use crate::error::{MstmError, Result};
use crate::index::FusedIndex;
use crate::rank::{by_rank, Scored};
use crate::vector::{dot, l2_norm, MultiModal, MultiVector, WeightVector};

/// Relative slack on the per-modality similarity cap. It absorbs rounding in
/// the 64-bit dot products so a bound never dips below the exact score.
const CAP_SLACK: f64 = 1e-9;

/// Pairs sampled when estimating per-modality distance contributions.
const ORDER_SAMPLE: usize = 256;

/// Order in which modalities are scanned during pruned evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanOrder {
    /// Largest expected `ω_i²·‖q_i − u_i‖²` first, estimated from the data.
    #[default]
    ExpectedContribution,
    /// Modality 0, 1, … as stored.
    IndexOrder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchParams {
    pub k: usize,
    /// Result set size `l`; clamped to the dataset size.
    pub l: usize,
    pub seed: u64,
    pub pruning: bool,
    /// Start from the seed vertex alone instead of seed plus `l − 1` random
    /// vertices.
    pub seed_only_init: bool,
    pub scan_order: ScanOrder,
    /// Record `Σ_{r∈R} IP(q, r)` after every round.
    pub trace: bool,
}

impl SearchParams {
    pub fn new(k: usize, l: usize) -> Self {
        SearchParams {
            k,
            l,
            seed: 0,
            pruning: true,
            seed_only_init: false,
            scan_order: ScanOrder::default(),
            trace: false,
        }
    }

    /// `l = 20·k`, capped at `n`.
    pub fn with_default_l(k: usize, n: usize) -> Self {
        SearchParams::new(k, (20 * k).min(n).max(k))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(MstmError::usage("k must be at least 1"));
        }
        if self.l < self.k {
            return Err(MstmError::usage(format!(
                "result set size l = {} is smaller than k = {}",
                self.l, self.k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Vertices expanded.
    pub visited: usize,
    /// Evaluations that produced an exact joint score.
    pub full_evaluations: usize,
    /// Evaluations cut short or rejected by the partial bound.
    pub pruned_evaluations: usize,
    /// Single-modality vector products computed.
    pub modality_scans: usize,
}

impl SearchStats {
    pub fn add(&mut self, other: &SearchStats) {
        self.visited += other.visited;
        self.full_evaluations += other.full_evaluations;
        self.pruned_evaluations += other.pruned_evaluations;
        self.modality_scans += other.modality_scans;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Best first, distinct ids.
    pub results: Vec<Scored>,
    pub stats: SearchStats,
    /// Sum of scores in the result set after initialization and after each
    /// round; empty unless tracing was requested.
    pub trace: Vec<f64>,
}

impl SearchOutcome {
    pub fn ids(&self) -> Vec<ObjectId> {
        self.results.iter().map(|s| s.id).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PruneResult {
    Exact(f64),
    /// Discarded after scanning this many modalities.
    Pruned { after: usize },
}

/// Per-query evaluation state: masked weights, caps and scan order.
struct Evaluator<'q> {
    query: &'q MultiVector,
    /// `ω_i²` with absent query modalities zeroed.
    w2: Vec<f64>,
    /// Upper bound on `ω_i²·IP(q_i, u_i)` for any object.
    cap: Vec<f64>,
    /// Modalities to scan, in order.
    order: Vec<usize>,
}

impl<'q> Evaluator<'q> {
    fn new(query: &'q MultiVector, w2: &[f64], max_norms: &[f64], preference: &[usize]) -> Self {
        let m = w2.len();
        let mut masked = vec![0.0; m];
        let mut cap = vec![0.0; m];
        for i in 0..m {
            if let Some(v) = query.slot(i) {
                masked[i] = w2[i];
                cap[i] = w2[i] * l2_norm(v) * max_norms[i] * (1.0 + CAP_SLACK);
            }
        }
        let order = preference.iter().copied().filter(|i| masked[*i] > 0.0).collect();
        Evaluator {
            query,
            w2: masked,
            cap,
            order,
        }
    }

    /// Joint score summed in modality order, matching `joint_similarity`.
    #[inline]
    fn combine(&self, ips: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, s) in self.w2.iter().enumerate() {
            if *s != 0.0 {
                acc += s * ips[i];
            }
        }
        acc
    }

    fn exact(&self, data: &MultiModalDataset, id: usize, stats: &mut SearchStats) -> f64 {
        let mut acc = 0.0;
        for (i, s) in self.w2.iter().enumerate() {
            if *s != 0.0 {
                acc += s * dot(self.query.slot(i).expect("weighted slot present"), data.vector(i, id));
                stats.modality_scans += 1;
            }
        }
        stats.full_evaluations += 1;
        acc
    }

    fn pruned(
        &self,
        data: &MultiModalDataset,
        id: usize,
        threshold: f64,
        stats: &mut SearchStats,
    ) -> PruneResult {
        let mut ips = [0f64; 16];
        let mut heap_ips;
        let ips: &mut [f64] = if self.w2.len() <= ips.len() {
            &mut ips[..self.w2.len()]
        } else {
            heap_ips = vec![0f64; self.w2.len()];
            &mut heap_ips
        };
        let mut partial = 0.0;
        let mut remaining: f64 = self.order.iter().map(|i| self.cap[*i]).sum();
        let last = self.order.len();
        for (x, &i) in self.order.iter().enumerate() {
            let ip = dot(self.query.slot(i).expect("weighted slot present"), data.vector(i, id));
            stats.modality_scans += 1;
            ips[i] = ip;
            if x + 1 == last {
                break;
            }
            partial += self.w2[i] * ip;
            remaining -= self.cap[i];
            if threshold >= partial + remaining.max(0.0) {
                stats.pruned_evaluations += 1;
                return PruneResult::Pruned { after: x + 1 };
            }
        }
        let exact = self.combine(ips);
        if threshold >= exact {
            stats.pruned_evaluations += 1;
            PruneResult::Pruned { after: last }
        } else {
            stats.full_evaluations += 1;
            PruneResult::Exact(exact)
        }
    }

    /// Upper bounds after 0, 1, …, t scanned modalities.
    fn bounds(&self, data: &MultiModalDataset, id: usize) -> Vec<f64> {
        let mut partial = 0.0;
        let mut remaining: f64 = self.order.iter().map(|i| self.cap[*i]).sum();
        let mut out = vec![remaining];
        for (x, &i) in self.order.iter().enumerate() {
            let ip = dot(self.query.slot(i).expect("weighted slot present"), data.vector(i, id));
            if x + 1 == self.order.len() {
                let mut ips = vec![0.0; self.w2.len()];
                ips[i] = ip;
                // Exact value for the last step comes from the canonical sum.
                for &j in &self.order[..x] {
                    ips[j] = dot(self.query.slot(j).unwrap(), data.vector(j, id));
                }
                out.push(self.combine(&ips));
                break;
            }
            partial += self.w2[i] * ip;
            remaining -= self.cap[i];
            out.push(partial + remaining.max(0.0));
        }
        out
    }
}

/// Largest stored vector norm per modality.
fn max_norms(data: &MultiModalDataset) -> Vec<f64> {
    (0..data.modalities())
        .map(|i| {
            data.modality_data(i)
                .chunks_exact(data.dims()[i])
                .map(l2_norm)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Modalities sorted by `ω_i²·E[‖u_i − v_i‖²]` over sampled object pairs,
/// largest first.
fn expected_order(data: &MultiModalDataset, w2: &[f64]) -> Vec<usize> {
    let n = data.len();
    let m = data.modalities();
    let mut contrib = vec![0.0; m];
    if n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1ab1e);
        let pairs = ORDER_SAMPLE.min(n * (n - 1) / 2);
        for _ in 0..pairs {
            let pick = sample(&mut rng, n, 2);
            let (a, b) = (pick.index(0), pick.index(1));
            for (i, c) in contrib.iter_mut().enumerate() {
                *c += 2.0 - 2.0 * dot(data.vector(i, a), data.vector(i, b));
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|a, b| (w2[*b] * contrib[*b]).total_cmp(&(w2[*a] * contrib[*a])).then(a.cmp(b)));
    order
}

/// Exact-or-pruned joint score of `u` against `q`, scanning modalities in
/// index order.
pub fn pruned_joint_ip<U: MultiModal + ?Sized>(
    q: &MultiVector,
    u: &U,
    w: &WeightVector,
    threshold: f64,
) -> Result<PruneResult> {
    let data = single_object_dataset(u, w)?;
    let w2 = w.squared();
    let order: Vec<usize> = (0..w.len()).collect();
    let eval = Evaluator::new(q, &w2, &max_norms(&data), &order);
    data.check_query(q)?;
    let mut stats = SearchStats::default();
    Ok(eval.pruned(&data, 0, threshold, &mut stats))
}

/// The sequence of upper bounds [`pruned_joint_ip`] compares against, from
/// zero scanned modalities up to all of them. The last entry is the exact
/// joint score.
pub fn partial_bounds<U: MultiModal + ?Sized>(q: &MultiVector, u: &U, w: &WeightVector) -> Result<Vec<f64>> {
    let data = single_object_dataset(u, w)?;
    data.check_query(q)?;
    let w2 = w.squared();
    let order: Vec<usize> = (0..w.len()).collect();
    let eval = Evaluator::new(q, &w2, &max_norms(&data), &order);
    Ok(eval.bounds(&data, 0))
}

fn single_object_dataset<U: MultiModal + ?Sized>(u: &U, w: &WeightVector) -> Result<MultiModalDataset> {
    if u.modalities() != w.len() {
        return Err(MstmError::usage(format!(
            "object has {} modalities, weights cover {}",
            u.modalities(),
            w.len()
        )));
    }
    let slots: Option<Vec<&[f32]>> = (0..u.modalities()).map(|i| u.slot(i)).collect();
    let slots = slots.ok_or_else(|| MstmError::usage("object must have every modality present"))?;
    MultiModalDataset::new(
        slots.iter().map(|s| s.len()).collect(),
        slots.iter().map(|s| s.to_vec()).collect(),
    )
}

#[derive(Debug, Clone, Copy)]
struct Member {
    id: ObjectId,
    score: f64,
    visited: bool,
}

/// Searches one fused index under fixed weights.
///
/// Holds only shared references; run as many queries in parallel as needed.
#[derive(Debug, Clone)]
pub struct JointSearcher<'a> {
    index: &'a FusedIndex,
    data: &'a MultiModalDataset,
    w2: Vec<f64>,
    max_norms: Vec<f64>,
    expected_order: Vec<usize>,
}

impl<'a> JointSearcher<'a> {
    /// Searches with the weights the index was built under.
    pub fn new(index: &'a FusedIndex, data: &'a MultiModalDataset) -> Result<Self> {
        Self::with_weights(index, data, index.weights())
    }

    /// Searches with caller-chosen weights, e.g. user-defined ones.
    pub fn with_weights(index: &'a FusedIndex, data: &'a MultiModalDataset, w: &WeightVector) -> Result<Self> {
        index.check_dataset(data)?;
        data.check_weights(w)?;
        let w2 = w.squared();
        let expected_order = expected_order(data, &w2);
        Ok(JointSearcher {
            index,
            data,
            w2,
            max_norms: max_norms(data),
            expected_order,
        })
    }

    pub fn index(&self) -> &FusedIndex {
        self.index
    }

    pub fn data(&self) -> &MultiModalDataset {
        self.data
    }

    pub fn search(&self, q: &MultiVector, params: &SearchParams) -> Result<SearchOutcome> {
        params.validate()?;
        self.data.check_query(q)?;
        let n = self.index.len();
        if n == 0 {
            return Err(MstmError::usage("cannot search an empty index"));
        }
        let index_order: Vec<usize> = (0..self.w2.len()).collect();
        let order = match params.scan_order {
            ScanOrder::ExpectedContribution => &self.expected_order,
            ScanOrder::IndexOrder => &index_order,
        };
        let eval = Evaluator::new(q, &self.w2, &self.max_norms, order);
        if eval.order.is_empty() {
            return Err(MstmError::usage("query has no modality with positive weight"));
        }
        let l = if params.l > n {
            log::warn!("result set size {} exceeds {n} objects; clamping", params.l);
            n
        } else {
            params.l
        };
        let k = params.k.min(l);

        let mut stats = SearchStats::default();
        let mut in_result = vec![false; n];
        // Vertices whose score has been computed or ruled out.
        let mut evaluated = vec![false; n];
        let mut expanded = vec![false; n];

        let seed = self.index.seed() as usize;
        let mut initial = vec![seed];
        if !params.seed_only_init && l > 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            initial.extend(
                sample(&mut rng, n - 1, l - 1)
                    .into_iter()
                    .map(|x| if x >= seed { x + 1 } else { x }),
            );
        }
        let mut result: Vec<Member> = initial
            .into_iter()
            .map(|id| {
                in_result[id] = true;
                evaluated[id] = true;
                Member {
                    id: id as ObjectId,
                    score: eval.exact(self.data, id, &mut stats),
                    visited: false,
                }
            })
            .collect();
        result.sort_by(|a, b| by_rank(&Scored::new(a.id, a.score), &Scored::new(b.id, b.score)));

        let mut trace = Vec::new();
        let record = |result: &[Member], trace: &mut Vec<f64>| {
            if params.trace {
                trace.push(result.iter().map(|m| m.score).sum());
            }
        };
        record(&result, &mut trace);

        // Every member before `cursor` has been expanded.
        let mut cursor = 0;
        loop {
            while cursor < result.len() && result[cursor].visited {
                cursor += 1;
            }
            if cursor == result.len() {
                break;
            }
            result[cursor].visited = true;
            let v = result[cursor].id as usize;
            expanded[v] = true;
            stats.visited += 1;

            for &u in self.index.neighbors(v) {
                let u = u as usize;
                if expanded[u] || in_result[u] || evaluated[u] {
                    continue;
                }
                evaluated[u] = true;
                let full = result.len() >= l;
                let threshold = if full {
                    result.last().expect("l >= 1").score
                } else {
                    f64::NEG_INFINITY
                };
                let score = if params.pruning && full {
                    match eval.pruned(self.data, u, threshold, &mut stats) {
                        PruneResult::Exact(s) => s,
                        PruneResult::Pruned { .. } => continue,
                    }
                } else {
                    let s = eval.exact(self.data, u, &mut stats);
                    if s <= threshold {
                        continue;
                    }
                    s
                };
                if full {
                    let evicted = result.pop().expect("l >= 1");
                    in_result[evicted.id as usize] = false;
                }
                let entry = Scored::new(u as ObjectId, score);
                let pos = result.partition_point(|m| by_rank(&Scored::new(m.id, m.score), &entry).is_lt());
                result.insert(
                    pos,
                    Member {
                        id: u as ObjectId,
                        score,
                        visited: false,
                    },
                );
                in_result[u] = true;
                cursor = cursor.min(pos);
            }
            record(&result, &mut trace);
        }

        Ok(SearchOutcome {
            results: result
                .iter()
                .take(k)
                .map(|m| Scored::new(m.id, m.score))
                .collect(),
            stats,
            trace,
        })
    }
}

/// One-shot convenience wrapper around [`JointSearcher`].
pub fn joint_search(
    index: &FusedIndex,
    data: &MultiModalDataset,
    q: &MultiVector,
    w: &WeightVector,
    params: &SearchParams,
) -> Result<SearchOutcome> {
    JointSearcher::with_weights(index, data, w)?.search(q, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{build_fused_index, BuildParams};
    use crate::test_support::{random_dataset, random_query};
    use crate::vector::joint_similarity;

    fn brute(data: &MultiModalDataset, q: &MultiVector, w: &WeightVector, k: usize) -> Vec<Scored> {
        let mut all: Vec<Scored> = (0..data.len())
            .map(|o| Scored::new(o as u32, joint_similarity(q, &data.object(o), w).unwrap()))
            .collect();
        all.sort_by(by_rank);
        all.truncate(k);
        all
    }

    fn two_modal(a: [f32; 2], b: [f32; 2]) -> MultiVector {
        MultiVector::normalized(vec![Some(a.to_vec()), Some(b.to_vec())]).unwrap()
    }

    #[test]
    fn never_prunes_below_minus_c() {
        let w = WeightVector::new(vec![0.8, 0.6]).unwrap();
        let q = random_query(&[6, 3], 1);
        for s in 0..50 {
            let u = random_query(&[6, 3], 100 + s);
            let c = w.norm_sq();
            match pruned_joint_ip(&q, &u, &w, -c - 1e-9).unwrap() {
                PruneResult::Exact(v) => assert_eq!(v, joint_similarity(&q, &u, &w).unwrap()),
                other => panic!("pruned: {other:?}"),
            }
        }
    }

    #[test]
    fn prunes_after_first_modality_when_bound_is_low() {
        // ω0² = 0.8, ω1² = 0.2. Opposite modality-0 vectors: ½‖q0−u0‖² = 2.
        let w = WeightVector::from_squared(&[0.8, 0.2]).unwrap();
        let q = two_modal([1.0, 0.0], [1.0, 0.0]);
        let u = two_modal([-1.0, 0.0], [1.0, 0.0]);
        // C − threshold = 1.0 − (−0.5) = 1.5 ≤ 0.8·2 = 1.6.
        assert_eq!(
            pruned_joint_ip(&q, &u, &w, -0.5).unwrap(),
            PruneResult::Pruned { after: 1 }
        );
        // A threshold below the first-step bound forces the second scan.
        let exact = joint_similarity(&q, &u, &w).unwrap();
        assert!((exact - (-0.6)).abs() < 1e-6);
        assert_eq!(
            pruned_joint_ip(&q, &u, &w, -0.7).unwrap(),
            PruneResult::Exact(exact)
        );
    }

    #[test]
    fn threshold_at_exact_score_prunes() {
        let w = WeightVector::new(vec![0.5, 0.9, 0.3]).unwrap();
        for s in 0..50 {
            let q = random_query(&[4, 4, 2], s);
            let u = random_query(&[4, 4, 2], 1000 + s);
            let exact = joint_similarity(&q, &u, &w).unwrap();
            match pruned_joint_ip(&q, &u, &w, exact).unwrap() {
                PruneResult::Pruned { after } => assert!(after <= 3),
                other => panic!("not pruned: {other:?}"),
            }
        }
    }

    #[test]
    fn bounds_dominate_and_shrink() {
        let w = WeightVector::new(vec![0.7, 0.2, 1.1, 0.4]).unwrap();
        for s in 0..200 {
            let q = random_query(&[5, 3, 8, 2], s);
            let u = random_query(&[5, 3, 8, 2], 5000 + s);
            let exact = joint_similarity(&q, &u, &w).unwrap();
            let b = partial_bounds(&q, &u, &w).unwrap();
            assert_eq!(b.len(), 5);
            assert_eq!(*b.last().unwrap(), exact);
            assert!((b[0] - w.norm_sq()).abs() < 1e-6);
            for win in b.windows(2) {
                assert!(win[1] <= win[0]);
            }
            assert!(b.iter().all(|x| *x >= exact));
        }
    }

    #[test]
    fn exhaustive_result_set_is_exact() {
        let data = random_dataset(300, &[6, 4], 3);
        let w = WeightVector::new(vec![0.9, 0.5]).unwrap();
        let index = build_fused_index(&data, &w, &BuildParams::new(8, 2, 1)).unwrap();
        let searcher = JointSearcher::new(&index, &data).unwrap();
        for s in 0..20 {
            let q = random_query(&[6, 4], 77 + s);
            let out = searcher.search(&q, &SearchParams::new(10, 300)).unwrap();
            assert_eq!(out.results, brute(&data, &q, &w, 10));
            // l beyond n is clamped.
            let out = searcher.search(&q, &SearchParams::new(10, 1000)).unwrap();
            assert_eq!(out.results, brute(&data, &q, &w, 10));
        }
    }

    #[test]
    fn single_object_search() {
        let data = random_dataset(1, &[3], 3);
        let w = WeightVector::new(vec![1.0]).unwrap();
        let index = build_fused_index(&data, &w, &BuildParams::default()).unwrap();
        let out = joint_search(&index, &data, &random_query(&[3], 1), &w, &SearchParams::new(1, 1)).unwrap();
        assert_eq!(out.ids(), vec![0]);
    }

    #[test]
    fn rejects_bad_queries_and_params() {
        let data = random_dataset(20, &[3, 2], 3);
        let w = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let index = build_fused_index(&data, &w, &BuildParams::new(4, 1, 0)).unwrap();
        let s = JointSearcher::new(&index, &data).unwrap();
        let text_only = MultiVector::new(vec![None, Some(vec![1.0, 0.0])]).unwrap();
        assert!(s.search(&text_only, &SearchParams::new(1, 5)).is_err());
        let q = random_query(&[3, 2], 1);
        assert!(s.search(&q, &SearchParams::new(0, 5)).is_err());
        assert!(s.search(&q, &SearchParams::new(6, 5)).is_err());
        assert!(s.search(&random_query(&[3], 1), &SearchParams::new(1, 5)).is_err());
    }

    #[test]
    fn pruning_is_exact_and_trace_is_monotone() {
        let data = random_dataset(1500, &[8, 8, 4], 9);
        let w = WeightVector::new(vec![0.8, 0.5, 0.3]).unwrap();
        let index = build_fused_index(&data, &w, &BuildParams::new(12, 3, 2)).unwrap();
        let searcher = JointSearcher::new(&index, &data).unwrap();
        let mut pruned = 0;
        for s in 0..30 {
            let q = random_query(&[8, 8, 4], 300 + s);
            let mut p = SearchParams::new(10, 100);
            p.seed = s;
            p.trace = true;
            let on = searcher.search(&q, &p).unwrap();
            p.pruning = false;
            let off = searcher.search(&q, &p).unwrap();
            assert_eq!(on.results, off.results);
            assert_eq!(on.trace, off.trace);
            assert!(on.stats.modality_scans <= off.stats.modality_scans);
            pruned += on.stats.pruned_evaluations;
            assert!(on.trace.windows(2).all(|w| w[1] >= w[0]));
            p.scan_order = ScanOrder::IndexOrder;
            p.pruning = true;
            assert_eq!(searcher.search(&q, &p).unwrap().results, off.results);
        }
        assert!(pruned > 0);
    }

    #[test]
    fn missing_modality_matches_zero_weight() {
        let data = random_dataset(400, &[6, 4], 21);
        let w = WeightVector::new(vec![0.9, 0.5]).unwrap();
        let index = build_fused_index(&data, &w, &BuildParams::new(10, 2, 1)).unwrap();
        let full = random_query(&[6, 4], 5);
        let partial = full.masked(&[true, false]).unwrap();
        let zeroed = WeightVector::new(vec![0.9, 0.0]).unwrap();
        let p = SearchParams::new(5, 400);
        let a = joint_search(&index, &data, &partial, &w, &p).unwrap();
        let b = joint_search(&index, &data, &full, &zeroed, &p).unwrap();
        assert_eq!(a.results, b.results);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = random_dataset(800, &[6, 4], 4);
        let w = WeightVector::new(vec![0.9, 0.5]).unwrap();
        let index = build_fused_index(&data, &w, &BuildParams::new(10, 2, 1)).unwrap();
        let s = JointSearcher::new(&index, &data).unwrap();
        let q = random_query(&[6, 4], 5);
        let mut p = SearchParams::new(10, 40);
        p.seed = 99;
        assert_eq!(s.search(&q, &p).unwrap(), s.search(&q, &p).unwrap());
        p.seed_only_init = true;
        let out = s.search(&q, &p).unwrap();
        assert_eq!(out.results.len(), 10);
    }
}
