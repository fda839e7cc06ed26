//! Fused proximity-graph index over the weighted concatenated space.
//!
//! Construction runs five stages in order:
//!
//! 1. random neighbor lists refined by neighbors-of-neighbors ([`init_nndescent`]),
//! 2. candidate acquisition from the two-hop neighborhood ([`acquire_candidates`]),
//! 3. MRNG neighbor selection ([`select_neighbors_mrng`]),
//! 4. seed selection near the centroid ([`select_seed`]),
//! 5. reachability repair from the seed ([`ensure_connectivity`]).
//!
//! The resulting graph is directed; each vertex keeps its own out-list.

mod connect;
mod nndescent;
mod persist;
mod select;

use rayon::prelude::*;

pub use connect::{ensure_connectivity, select_seed};
pub use nndescent::{init_nndescent, NnDescent};
pub use select::{acquire_candidates, select_neighbors_mrng};

use crate::dataset::{JointSpace, MultiModalDataset, ObjectId};
use crate::error::{MstmError, Result};
use crate::rank::{by_rank, Scored};
use crate::vector::WeightVector;

pub const DEFAULT_MAX_NEIGHBORS: usize = 30;
pub const DEFAULT_ITERATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildParams {
    /// γ: neighbor list capacity.
    pub max_neighbors: usize,
    /// ε: refinement sweeps of the initial graph.
    pub iterations: usize,
    pub seed: u64,
}

impl BuildParams {
    pub fn new(max_neighbors: usize, iterations: usize, seed: u64) -> Self {
        BuildParams {
            max_neighbors,
            iterations,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_neighbors == 0 {
            return Err(MstmError::usage("max neighbors must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(MstmError::usage("iterations must be at least 1"));
        }
        Ok(())
    }
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams::new(DEFAULT_MAX_NEIGHBORS, DEFAULT_ITERATIONS, 0)
    }
}

/// A built index: per-vertex out-lists, the search seed, and an echo of what
/// it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedIndex {
    adjacency: Vec<Vec<ObjectId>>,
    /// Edges added for reachability, sorted by source. They sit at the tail of
    /// their source's out-list and may push it past γ.
    repair_edges: Vec<(ObjectId, ObjectId)>,
    seed: ObjectId,
    params: BuildParams,
    weights: WeightVector,
    fingerprint: u64,
}

impl FusedIndex {
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn seed(&self) -> ObjectId {
        self.seed
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn adjacency(&self) -> &[Vec<ObjectId>] {
        &self.adjacency
    }

    #[inline]
    pub fn neighbors(&self, o: usize) -> &[ObjectId] {
        &self.adjacency[o]
    }

    pub fn repair_edges(&self) -> &[(ObjectId, ObjectId)] {
        &self.repair_edges
    }

    /// Out-list of `o` without repair edges, in admission order.
    pub fn selected_neighbors(&self, o: usize) -> &[ObjectId] {
        let lo = self.repair_edges.partition_point(|(s, _)| (*s as usize) < o);
        let hi = self.repair_edges.partition_point(|(s, _)| (*s as usize) <= o);
        let list = &self.adjacency[o];
        &list[..list.len() - (hi - lo)]
    }

    /// Fails unless `data` is the dataset this index was built from.
    pub fn check_dataset(&self, data: &MultiModalDataset) -> Result<()> {
        if data.len() != self.len() || data.modalities() != self.weights.len() {
            return Err(MstmError::Load(format!(
                "index covers {} objects × {} modalities, dataset has {} × {}",
                self.len(),
                self.weights.len(),
                data.len(),
                data.modalities()
            )));
        }
        let fp = data.fingerprint();
        if fp != self.fingerprint {
            return Err(MstmError::Load(format!(
                "dataset fingerprint {fp:016x} does not match index fingerprint {:016x}",
                self.fingerprint
            )));
        }
        Ok(())
    }

    pub(crate) fn from_parts(
        adjacency: Vec<Vec<ObjectId>>,
        mut repair_edges: Vec<(ObjectId, ObjectId)>,
        seed: ObjectId,
        params: BuildParams,
        weights: WeightVector,
        fingerprint: u64,
    ) -> Result<Self> {
        let n = adjacency.len();
        if n > 0 && seed as usize >= n {
            return Err(MstmError::Load(format!("seed {seed} out of range for {n} vertices")));
        }
        for (o, list) in adjacency.iter().enumerate() {
            if let Some(bad) = list.iter().find(|u| **u as usize >= n || **u as usize == o) {
                return Err(MstmError::Load(format!("vertex {o} has invalid neighbor {bad}")));
            }
        }
        repair_edges.sort_by_key(|(s, _)| *s);
        Ok(FusedIndex {
            adjacency,
            repair_edges,
            seed,
            params,
            weights,
            fingerprint,
        })
    }
}

pub(crate) fn dedup_sorted(mut ids: Vec<ObjectId>) -> Vec<ObjectId> {
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Runs all five construction stages.
pub fn build_fused_index(
    data: &MultiModalDataset,
    w: &WeightVector,
    params: &BuildParams,
) -> Result<FusedIndex> {
    params.validate()?;
    let space = JointSpace::new(data, w)?;
    if data.is_empty() {
        return Err(MstmError::Build("cannot index an empty dataset".into()));
    }
    let initial = if data.len() == 1 {
        vec![Vec::new()]
    } else {
        init_nndescent(&space, params)?
    };
    build_from_initial(&space, initial, params)
}

/// Stages 2–5 on top of an already refined initial graph.
pub fn build_from_initial(
    space: &JointSpace<'_>,
    initial: Vec<Vec<ObjectId>>,
    params: &BuildParams,
) -> Result<FusedIndex> {
    let n = space.data().len();
    if initial.len() != n {
        return Err(MstmError::Build(format!(
            "initial graph has {} vertices, dataset has {n}",
            initial.len()
        )));
    }
    log::debug!("selecting neighbors for {n} vertices");
    let mut adjacency: Vec<Vec<ObjectId>> = (0..n)
        .into_par_iter()
        .map(|o| {
            let candidates = acquire_candidates(&initial, o);
            if candidates.is_empty() {
                Vec::new()
            } else {
                select_neighbors_mrng(o, &candidates, space, params.max_neighbors)
            }
        })
        .collect();
    let seed = select_seed(space);
    let repairs = ensure_connectivity(&mut adjacency, seed, space);
    log::debug!("seed {seed}, {} repair edges", repairs.len());
    let weights = space.weights().clone();
    FusedIndex::from_parts(
        adjacency,
        repairs,
        seed,
        *params,
        weights,
        space.data().fingerprint(),
    )
}

/// Mean fraction of each stored neighbor list found in the exact top-γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphQualityReport {
    pub value: f64,
}

/// Exact top-`k` neighbors of `o` (excluding `o`) by full scan.
pub fn exact_neighbors(space: &JointSpace<'_>, o: usize, k: usize) -> Vec<ObjectId> {
    let n = space.data().len();
    let mut all: Vec<Scored> = (0..n)
        .filter(|u| *u != o)
        .map(|u| Scored::new(u as ObjectId, space.sim(o, u)))
        .collect();
    let k = k.min(all.len());
    if k == 0 {
        return Vec::new();
    }
    all.select_nth_unstable_by(k - 1, by_rank);
    all.truncate(k);
    all.sort_by(by_rank);
    all.into_iter().map(|s| s.id).collect()
}

/// Graph quality of any adjacency: `mean_o |N(o) ∩ top_γ(o)| / γ`.
///
/// Only the first `γ` entries of each list count, so repair edges appended
/// past γ never inflate the score.
pub fn graph_quality(adjacency: &[Vec<ObjectId>], space: &JointSpace<'_>, gamma: usize) -> GraphQualityReport {
    let n = adjacency.len();
    if n == 0 || gamma == 0 {
        return GraphQualityReport { value: 0.0 };
    }
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|o| {
            let truth = dedup_sorted(exact_neighbors(space, o, gamma));
            let hits = adjacency[o]
                .iter()
                .take(gamma)
                .filter(|u| truth.binary_search(u).is_ok())
                .count();
            hits as f64 / gamma as f64
        })
        .sum();
    GraphQualityReport {
        value: total / n as f64,
    }
}

impl FusedIndex {
    pub fn graph_quality(&self, data: &MultiModalDataset) -> Result<GraphQualityReport> {
        let space = JointSpace::new(data, &self.weights)?;
        Ok(graph_quality(&self.adjacency, &space, self.params.max_neighbors))
    }
}
