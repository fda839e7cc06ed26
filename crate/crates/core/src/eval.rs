//! Recall, SME, exact ground truth and the benchmark harness.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{brute_force_topk, je_search, mr_exact, mr_search, MergePolicy, MrIndexSet};
use crate::dataset::{MultiModalDataset, ObjectId};
use crate::error::{MstmError, Result};
use crate::index::FusedIndex;
use crate::io::vecs::{read_id_lists, write_id_lists};
use crate::search::{JointSearcher, SearchParams, SearchStats};
use crate::vector::{dot, MultiModal, MultiVector, WeightVector};

/// True result ids per query, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    lists: Vec<Vec<ObjectId>>,
}

impl GroundTruth {
    pub fn new(lists: Vec<Vec<ObjectId>>) -> Result<Self> {
        if let Some(i) = lists.iter().position(Vec::is_empty) {
            return Err(MstmError::usage(format!("ground truth for query {i} is empty")));
        }
        Ok(GroundTruth { lists })
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn get(&self, query: usize) -> &[ObjectId] {
        &self.lists[query]
    }

    pub fn lists(&self) -> &[Vec<ObjectId>] {
        &self.lists
    }

    /// Ids must address `n` objects.
    pub fn check(&self, n: usize, queries: usize) -> Result<()> {
        if self.lists.len() != queries {
            return Err(MstmError::Setup(format!(
                "ground truth covers {} queries, {queries} given",
                self.lists.len()
            )));
        }
        if let Some(id) = self.lists.iter().flatten().find(|id| **id as usize >= n) {
            return Err(MstmError::Setup(format!("ground truth id {id} out of range for {n} objects")));
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        GroundTruth::new(read_id_lists(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_id_lists(path, &self.lists)
    }
}

/// `|top-k of results ∩ truth| / |truth|`.
pub fn recall_at_k(results: &[ObjectId], truth: &[ObjectId], k: usize) -> Result<f64> {
    if truth.is_empty() {
        return Err(MstmError::usage("recall needs a nonempty truth set"));
    }
    let top = &results[..k.min(results.len())];
    let hits = truth.iter().filter(|t| top.contains(t)).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Mean over queries of `1 − IP` between the target-modality vectors of
/// the true top-1 and the returned top-1.
pub fn mean_sme(results: &[Vec<ObjectId>], truth: &GroundTruth, data: &MultiModalDataset) -> Result<f64> {
    if results.len() != truth.len() {
        return Err(MstmError::usage(format!(
            "{} result lists for {} truth entries",
            results.len(),
            truth.len()
        )));
    }
    if results.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, r) in results.iter().enumerate() {
        let Some(&top) = r.first() else {
            return Err(MstmError::usage(format!("query {i} returned no result")));
        };
        total += 1.0 - dot(data.vector(0, truth.get(i)[0] as usize), data.vector(0, top as usize));
    }
    Ok(total / results.len() as f64)
}

/// Exact top-`k` per query under `w`.
pub fn compute_ground_truth(
    data: &MultiModalDataset,
    queries: &[MultiVector],
    w: &WeightVector,
    k: usize,
) -> Result<GroundTruth> {
    if k == 0 {
        return Err(MstmError::usage("ground truth needs k ≥ 1"));
    }
    let lists = queries
        .par_iter()
        .map(|q| Ok(brute_force_topk(data, q, w, k)?.iter().map(|s| s.id).collect()))
        .collect::<Result<Vec<_>>>()?;
    GroundTruth::new(lists)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Framework {
    /// Joint search over the fused index.
    Must,
    /// Multi-stream retrieval over per-modality indexes.
    Mr,
    /// Single-vector search with the composition vector.
    Je,
    /// Exhaustive joint scan.
    MustExact,
    /// Multi-stream retrieval with exhaustive streams.
    MrExact,
}

impl Framework {
    pub fn name(self) -> &'static str {
        match self {
            Framework::Must => "must",
            Framework::Mr => "mr",
            Framework::Je => "je",
            Framework::MustExact => "must-exact",
            Framework::MrExact => "mr-exact",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Framework::MustExact | Framework::MrExact)
    }
}

impl FromStr for Framework {
    type Err = MstmError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "must" => Framework::Must,
            "mr" => Framework::Mr,
            "je" => Framework::Je,
            "must-exact" => Framework::MustExact,
            "mr-exact" => Framework::MrExact,
            other => {
                return Err(MstmError::usage(format!(
                    "unknown framework {other:?} (expected must, mr, je, must-exact or mr-exact)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub frameworks: Vec<Framework>,
    pub l_sweep: Vec<usize>,
    pub k: usize,
    /// Truth entries per query counted by recall (`k′`).
    pub truth_k: usize,
    pub trials: usize,
    pub pruning: bool,
    /// Per-stream candidates for MR; the stream's `l` when unset.
    pub mr_candidates: Option<usize>,
    /// Substitute the composition vector for MR's target stream.
    pub mr_composition: bool,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            frameworks: vec![Framework::Must],
            l_sweep: vec![700, 1000, 1500, 2000, 4000],
            k: 10,
            truth_k: 10,
            trials: 3,
            pruning: true,
            mr_candidates: None,
            mr_composition: false,
            seed: 0,
        }
    }
}

/// Everything a benchmark may need; frameworks fail with a setup error when
/// their artifact is missing.
#[derive(Debug, Clone, Copy)]
pub struct BenchInputs<'a> {
    pub data: &'a MultiModalDataset,
    pub queries: &'a [MultiVector],
    pub composition: Option<&'a [Vec<f32>]>,
    pub truth: &'a GroundTruth,
    pub index: Option<&'a FusedIndex>,
    /// Overrides the fused index's build weights for joint search and the
    /// exact joint scan.
    pub weights: Option<&'a WeightVector>,
    pub mr: Option<&'a MrIndexSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub framework: Framework,
    /// Result set size; `n` for exact frameworks.
    pub l: usize,
    pub recall: f64,
    pub mean_sme: f64,
    pub qps: f64,
    pub mean_visited: f64,
    pub mean_pruned: f64,
    pub mean_scans: f64,
    /// Returned ids per query from the last trial.
    pub ids: Vec<Vec<ObjectId>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub objects: usize,
    pub queries: usize,
    pub k: usize,
    pub truth_k: usize,
    pub trials: usize,
    pub pruning: bool,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "framework,l,k,truth_k,recall,mean_sme,qps,mean_visited,mean_pruned,mean_scans";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.3},{:.3},{:.3},{:.3}",
                r.framework.name(),
                r.l,
                self.k,
                self.truth_k,
                r.recall,
                r.mean_sme,
                r.qps,
                r.mean_visited,
                r.mean_pruned,
                r.mean_scans
            )
            .expect("write to string");
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{} objects, {} queries, Recall@{}({}), {} trials, pruning {}\n",
            self.objects,
            self.queries,
            self.k,
            self.truth_k,
            self.trials,
            if self.pruning { "on" } else { "off" }
        );
        writeln!(
            out,
            "{:<11} {:>6} {:>8} {:>9} {:>11} {:>9} {:>9} {:>10}",
            "framework", "l", "recall", "sme", "qps", "visited", "pruned", "scans"
        )
        .expect("write to string");
        for r in &self.rows {
            writeln!(
                out,
                "{:<11} {:>6} {:>8.4} {:>9.5} {:>11.1} {:>9.1} {:>9.1} {:>10.1}",
                r.framework.name(),
                r.l,
                r.recall,
                r.mean_sme,
                r.qps,
                r.mean_visited,
                r.mean_pruned,
                r.mean_scans
            )
            .expect("write to string");
        }
        out
    }
}

/// One trial's per-query ids and summed counters.
type Trial = (Vec<Vec<ObjectId>>, SearchStats);

/// Runs every framework over the `l` sweep, single-threaded, timing each
/// batch over `trials` repetitions with a warm cache.
pub fn run_bench(inputs: &BenchInputs<'_>, cfg: &BenchConfig) -> Result<BenchReport> {
    let BenchInputs { data, queries, truth, .. } = *inputs;
    if cfg.k == 0 || cfg.truth_k == 0 || cfg.trials == 0 {
        return Err(MstmError::usage("k, truth_k and trials must be at least 1"));
    }
    if queries.is_empty() {
        return Err(MstmError::Setup("no queries to benchmark".into()));
    }
    truth.check(data.len(), queries.len())?;
    if let Some(c) = inputs.composition {
        if c.len() != queries.len() {
            return Err(MstmError::Setup(format!(
                "{} composition vectors for {} queries",
                c.len(),
                queries.len()
            )));
        }
    }
    let n = data.len();
    let mut rows = Vec::new();
    for &fw in &cfg.frameworks {
        let sweep: Vec<usize> = if fw.is_exact() { vec![n] } else { cfg.l_sweep.clone() };
        if sweep.is_empty() {
            return Err(MstmError::usage("empty l sweep"));
        }
        let runner = Runner::prepare(fw, inputs, cfg)?;
        let ctx = RunCtx {
            runner: &runner,
            inputs,
            cfg,
        };
        for l in sweep {
            let mut elapsed = 0.0;
            let mut last = None;
            for _ in 0..cfg.trials {
                let start = Instant::now();
                let trial = ctx.run(l)?;
                elapsed += start.elapsed().as_secs_f64();
                last = Some(trial);
            }
            let (ids, stats) = last.expect("trials ≥ 1");
            let q = queries.len() as f64;
            let mut recall = 0.0;
            for (i, r) in ids.iter().enumerate() {
                let t = truth.get(i);
                recall += recall_at_k(r, &t[..cfg.truth_k.min(t.len())], cfg.k)?;
            }
            let mean_time = (elapsed / cfg.trials as f64).max(1e-9);
            rows.push(BenchRow {
                framework: fw,
                l: l.min(n),
                recall: recall / q,
                mean_sme: mean_sme(&ids, truth, data)?,
                qps: q / mean_time,
                mean_visited: stats.visited as f64 / q,
                mean_pruned: stats.pruned_evaluations as f64 / q,
                mean_scans: stats.modality_scans as f64 / q,
                ids,
            });
            log::info!("{} l={l}: recall {:.4}", fw.name(), rows.last().expect("pushed").recall);
        }
    }
    Ok(BenchReport {
        objects: n,
        queries: queries.len(),
        k: cfg.k,
        truth_k: cfg.truth_k,
        trials: cfg.trials,
        pruning: cfg.pruning,
        rows,
    })
}

enum Runner<'a> {
    Must(JointSearcher<'a>),
    MustExact(WeightVector),
    Mr(&'a MrIndexSet),
    MrExact,
    Je(&'a MrIndexSet, Vec<Vec<f32>>),
}

struct RunCtx<'a, 'b> {
    runner: &'b Runner<'a>,
    inputs: &'b BenchInputs<'a>,
    cfg: &'b BenchConfig,
}

impl<'a> Runner<'a> {
    fn prepare(fw: Framework, inputs: &BenchInputs<'a>, cfg: &BenchConfig) -> Result<Self> {
        let missing = |what: &str| MstmError::Setup(format!("framework {} needs {what}", fw.name()));
        Ok(match fw {
            Framework::Must => {
                let index = inputs.index.ok_or_else(|| missing("a fused index"))?;
                let w = inputs.weights.unwrap_or(index.weights());
                Runner::Must(JointSearcher::with_weights(index, inputs.data, w)?)
            }
            Framework::MustExact => {
                let w = inputs
                    .weights
                    .or(inputs.index.map(FusedIndex::weights))
                    .ok_or_else(|| missing("weights or a fused index"))?;
                Runner::MustExact(w.clone())
            }
            Framework::Mr => {
                if cfg.mr_composition && inputs.composition.is_none() {
                    log::warn!("no composition vectors; MR uses the target-modality query");
                }
                Runner::Mr(inputs.mr.ok_or_else(|| missing("per-modality indexes"))?)
            }
            Framework::MrExact => Runner::MrExact,
            Framework::Je => {
                let mr = inputs.mr.ok_or_else(|| missing("a target-modality index"))?;
                let comp = match inputs.composition {
                    Some(c) => c.to_vec(),
                    None => {
                        log::warn!("no composition vectors; JE falls back to the target-modality query");
                        inputs
                            .queries
                            .iter()
                            .map(|q| q.slot(0).map(<[f32]>::to_vec).ok_or_else(|| missing("composition vectors")))
                            .collect::<Result<_>>()?
                    }
                };
                Runner::Je(mr, comp)
            }
        })
    }

    fn search_params(cfg: &BenchConfig, l: usize, n: usize, query: usize) -> SearchParams {
        let mut p = SearchParams::new(cfg.k.min(n), l.clamp(cfg.k.min(n), n));
        p.pruning = cfg.pruning;
        p.seed = cfg.seed.wrapping_add(query as u64);
        p
    }
}

impl RunCtx<'_, '_> {
    fn run(&self, l: usize) -> Result<Trial> {
        let BenchInputs { data, queries, .. } = *self.inputs;
        let cfg = self.cfg;
        let n = data.len();
        let mut stats = SearchStats::default();
        let mut ids = Vec::with_capacity(queries.len());
        for (i, q) in queries.iter().enumerate() {
            let params = Runner::search_params(cfg, l, n, i);
            let comp = |i: usize| {
                if cfg.mr_composition {
                    self.inputs.composition.map(|c| c[i].as_slice())
                } else {
                    None
                }
            };
            let found = match self.runner {
                Runner::Must(s) => {
                    let out = s.search(q, &params)?;
                    stats.add(&out.stats);
                    out.ids()
                }
                Runner::MustExact(w) => brute_force_topk(data, q, w, cfg.k)?.iter().map(|s| s.id).collect(),
                Runner::Mr(set) => {
                    let c = cfg.mr_candidates.unwrap_or(params.l).max(cfg.k);
                    let out = mr_search(set, data, q, comp(i), &MergePolicy::new(c, cfg.k)?, &params)?;
                    stats.add(&out.stats);
                    out.ids
                }
                Runner::MrExact => {
                    let c = cfg.mr_candidates.unwrap_or(cfg.k).max(cfg.k);
                    mr_exact(data, q, comp(i), &MergePolicy::new(c, cfg.k)?)?
                }
                Runner::Je(set, compositions) => {
                    let out = je_search(set.target(), data, &compositions[i], &params)?;
                    stats.add(&out.stats);
                    out.ids()
                }
            };
            ids.push(found);
        }
        Ok((ids, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{build_fused_index, BuildParams};
    use crate::test_support::{random_dataset, random_query};

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&[1, 2, 3], &[3, 2, 1], 3).unwrap(), 1.0);
        assert_eq!(recall_at_k(&[1, 2, 3], &[4, 5, 6], 3).unwrap(), 0.0);
        assert_eq!(recall_at_k(&[9, 8, 7, 6, 5, 4, 3, 2, 1, 0], &[0], 10).unwrap(), 1.0);
        assert_eq!(recall_at_k(&[9, 8, 7, 6, 5, 4, 3, 2, 1, 0], &[0], 9).unwrap(), 0.0);
        assert_eq!(recall_at_k(&[1, 2, 3, 4], &[2, 4], 2).unwrap(), 0.5);
        assert!(recall_at_k(&[1], &[], 1).is_err());
    }

    #[test]
    fn sme_examples() {
        // Target vectors: object 0 = (1, 0), object 1 = (0.9, √0.19), object 2 = (0, 1).
        let data = MultiModalDataset::new(vec![2], vec![vec![1.0, 0.0, 0.9, 0.19f32.sqrt(), 0.0, 1.0]]).unwrap();
        let truth = GroundTruth::new(vec![vec![0], vec![0]]).unwrap();
        assert_eq!(mean_sme(&[vec![0], vec![0]], &truth, &data).unwrap(), 0.0);
        let one = GroundTruth::new(vec![vec![0]]).unwrap();
        assert!((mean_sme(&[vec![1]], &one, &data).unwrap() - 0.1).abs() < 1e-6);
        assert!((mean_sme(&[vec![0], vec![1]], &truth, &data).unwrap() - 0.05).abs() < 1e-6);
        assert!(mean_sme(&[vec![]], &one, &data).is_err());
    }

    #[test]
    fn ground_truth_of_duplicate_is_itself() {
        let data = random_dataset(200, &[4, 3], 5);
        let w = WeightVector::new(vec![0.8, 0.6]).unwrap();
        let queries: Vec<MultiVector> = (0..10).map(|o| data.to_multivector(o * 17)).collect();
        let gt = compute_ground_truth(&data, &queries, &w, 1).unwrap();
        for (i, list) in gt.lists().iter().enumerate() {
            assert_eq!(list, &vec![(i * 17) as u32]);
        }
        let dir = tempfile::tempdir().unwrap();
        gt.write(dir.path().join("t.ivecs")).unwrap();
        assert_eq!(GroundTruth::read(dir.path().join("t.ivecs")).unwrap(), gt);
        assert!(gt.check(200, 10).is_ok());
        assert!(gt.check(100, 10).is_err());
        assert!(gt.check(200, 9).is_err());
    }

    #[test]
    fn bench_rows_and_oracles() {
        let data = random_dataset(400, &[6, 4], 2);
        let w = WeightVector::new(vec![0.9, 0.5]).unwrap();
        let index = build_fused_index(&data, &w, &BuildParams::new(10, 2, 0)).unwrap();
        let mr = MrIndexSet::build(&data, &BuildParams::new(10, 2, 0)).unwrap();
        let queries: Vec<MultiVector> = (0..15).map(|s| random_query(&[6, 4], s)).collect();
        let comp: Vec<Vec<f32>> = (0..15).map(|s| random_query(&[6], 100 + s).slot(0).unwrap().to_vec()).collect();
        let truth = compute_ground_truth(&data, &queries, &w, 10).unwrap();
        let inputs = BenchInputs {
            data: &data,
            queries: &queries,
            composition: Some(&comp),
            truth: &truth,
            index: Some(&index),
            weights: None,
            mr: Some(&mr),
        };
        let cfg = BenchConfig {
            frameworks: vec![Framework::Must, Framework::MustExact, Framework::Mr, Framework::MrExact, Framework::Je],
            l_sweep: vec![20, 400],
            trials: 1,
            ..BenchConfig::default()
        };
        let report = run_bench(&inputs, &cfg).unwrap();
        assert_eq!(report.rows.len(), 2 + 1 + 2 + 1 + 2);
        let row = |fw: Framework, l: usize| report.rows.iter().find(|r| r.framework == fw && r.l == l).unwrap();
        assert_eq!(row(Framework::MustExact, 400).recall, 1.0);
        assert!(row(Framework::MustExact, 400).mean_sme.abs() < 1e-6);
        assert_eq!(row(Framework::Must, 400).recall, 1.0);
        assert!(row(Framework::Must, 20).mean_sme >= 0.0);
        assert!(report.rows.iter().all(|r| r.qps > 0.0 && (0.0..=1.0).contains(&r.recall)));
        assert_eq!(report.to_csv().lines().count(), 1 + report.rows.len());
        assert!(report.to_table().contains("must-exact"));

        let again = run_bench(&inputs, &cfg).unwrap();
        for (a, b) in report.rows.iter().zip(&again.rows) {
            assert_eq!((a.l, &a.ids, a.recall, a.mean_visited), (b.l, &b.ids, b.recall, b.mean_visited));
        }

        let bare = BenchInputs { index: None, mr: None, ..inputs };
        let err = run_bench(&bare, &BenchConfig { trials: 1, ..BenchConfig::default() }).unwrap_err();
        assert!(matches!(err, MstmError::Setup(_)) && err.to_string().contains("fused index"), "{err}");
        let err = run_bench(&bare, &BenchConfig { frameworks: vec![Framework::Mr], trials: 1, ..BenchConfig::default() })
            .unwrap_err();
        assert!(matches!(err, MstmError::Setup(_)));
    }

    #[test]
    fn framework_names_parse() {
        for fw in [Framework::Must, Framework::Mr, Framework::Je, Framework::MustExact, Framework::MrExact] {
            assert_eq!(fw.name().parse::<Framework>().unwrap(), fw);
        }
        assert!("hnsw".parse::<Framework>().is_err());
    }
}
