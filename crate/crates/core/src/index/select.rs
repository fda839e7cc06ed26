//! Candidate acquisition and MRNG-style neighbor selection.

use super::dedup_sorted;
use crate::dataset::{JointSpace, ObjectId};
use crate::rank::{by_rank, Scored};

/// `N(o) ∪ ⋃_{v∈N(o)} N(v)` without `o`, sorted by id.
pub fn acquire_candidates(adjacency: &[Vec<ObjectId>], o: usize) -> Vec<ObjectId> {
    let mut out: Vec<ObjectId> = adjacency[o].clone();
    for v in &adjacency[o] {
        out.extend_from_slice(&adjacency[*v as usize]);
    }
    out.retain(|c| *c as usize != o);
    dedup_sorted(out)
}

/// Picks up to `gamma` angularly diverse neighbors of `o` out of `candidates`.
///
/// Candidates are scanned from most to least similar to `o`. The first one
/// is always kept; each later candidate `v` is kept only if `o` is more
/// similar to `v` than every neighbor already kept.
pub fn select_neighbors_mrng(
    o: usize,
    candidates: &[ObjectId],
    space: &JointSpace<'_>,
    gamma: usize,
) -> Vec<ObjectId> {
    let mut ranked: Vec<Scored> = candidates
        .iter()
        .filter(|c| **c as usize != o)
        .map(|c| Scored::new(*c, space.sim(o, *c as usize)))
        .collect();
    ranked.sort_by(by_rank);
    let mut kept: Vec<ObjectId> = Vec::with_capacity(gamma);
    for v in ranked {
        if kept.len() >= gamma {
            break;
        }
        let admitted = kept
            .iter()
            .all(|u| v.score > space.sim(*u as usize, v.id as usize));
        if admitted {
            kept.push(v.id);
        }
    }
    kept
}
