//! Initial neighbor graph: random lists refined by neighbors-of-neighbors.
//!
//! Only the forward rule is applied: `o` looks at the lists of its own
//! neighbors. Canonical NN-Descent also joins reverse neighbors; that step is
//! deliberately absent here.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::BuildParams;
use crate::dataset::{JointSpace, ObjectId};
use crate::error::{MstmError, Result};
use crate::rank::{by_rank, worst_position, Scored};

/// Neighbor lists with cached similarities, refined one sweep at a time.
#[derive(Debug, Clone)]
pub struct NnDescent<'a> {
    space: &'a JointSpace<'a>,
    lists: Vec<Vec<Scored>>,
    sweeps: usize,
}

impl<'a> NnDescent<'a> {
    /// Gives each vertex `min(γ, n−1)` distinct random non-self neighbors.
    pub fn random_init(space: &'a JointSpace<'a>, params: &BuildParams) -> Result<Self> {
        params.validate()?;
        let n = space.data().len();
        if n < 2 {
            return Err(MstmError::Build(format!(
                "neighbor graph needs at least 2 objects, got {n}"
            )));
        }
        let k = params.max_neighbors.min(n - 1);
        let lists = (0..n)
            .into_par_iter()
            .map(|o| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(o as u64);
                sample(&mut rng, n - 1, k)
                    .into_iter()
                    .map(|x| {
                        let id = if x >= o { x + 1 } else { x };
                        Scored::new(id as ObjectId, space.sim(o, id))
                    })
                    .collect()
            })
            .collect();
        Ok(NnDescent {
            space,
            lists,
            sweeps: 0,
        })
    }

    /// One pass of the replace-worst rule over every vertex.
    ///
    /// Each vertex reads its neighbors' lists as they stood before the sweep,
    /// so the result does not depend on thread scheduling.
    pub fn sweep(&mut self) {
        let prev = &self.lists;
        let space = self.space;
        let next: Vec<Vec<Scored>> = (0..prev.len())
            .into_par_iter()
            .map(|o| refine(space, prev, o))
            .collect();
        self.lists = next;
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Smallest similarity inside each vertex's list.
    pub fn min_similarities(&self) -> Vec<f64> {
        self.lists
            .iter()
            .map(|l| l.iter().map(|s| s.score).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Neighbor ids per vertex, best first.
    pub fn into_adjacency(self) -> Vec<Vec<ObjectId>> {
        self.lists
            .into_iter()
            .map(|mut l| {
                l.sort_by(by_rank);
                l.into_iter().map(|s| s.id).collect()
            })
            .collect()
    }
}

fn refine(space: &JointSpace<'_>, prev: &[Vec<Scored>], o: usize) -> Vec<Scored> {
    let mut list = prev[o].clone();
    // Members, evicted members and rejected candidates. The worst score in
    // the list only rises, so none of them could be admitted later.
    let mut seen: HashSet<ObjectId> = list.iter().map(|s| s.id).collect();
    seen.insert(o as ObjectId);
    let Some(mut worst) = worst_position(&list) else {
        return list;
    };
    for v in &prev[o] {
        for u in &prev[v.id as usize] {
            if !seen.insert(u.id) {
                continue;
            }
            let s = space.sim(o, u.id as usize);
            if s > list[worst].score {
                list[worst] = Scored::new(u.id, s);
                worst = worst_position(&list).expect("list is nonempty");
            }
        }
    }
    list
}

/// Runs random initialization followed by `ε` sweeps.
pub fn init_nndescent(space: &JointSpace<'_>, params: &BuildParams) -> Result<Vec<Vec<ObjectId>>> {
    let mut nd = NnDescent::random_init(space, params)?;
    for _ in 0..params.iterations {
        nd.sweep();
    }
    Ok(nd.into_adjacency())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MultiModalDataset;
    use crate::test_support::random_dataset;
    use crate::vector::WeightVector;

    #[test]
    fn two_objects_point_at_each_other() {
        let data = MultiModalDataset::normalized(vec![2], vec![vec![1.0, 0.0, 0.0, 1.0]]).unwrap();
        let w = WeightVector::new(vec![1.0]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        let g = init_nndescent(&space, &BuildParams::new(30, 3, 1)).unwrap();
        assert_eq!(g, vec![vec![1], vec![0]]);
    }

    #[test]
    fn rejects_single_object() {
        let data = MultiModalDataset::normalized(vec![2], vec![vec![1.0, 0.0]]).unwrap();
        let w = WeightVector::new(vec![1.0]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        assert!(matches!(
            init_nndescent(&space, &BuildParams::new(4, 1, 1)),
            Err(MstmError::Build(_))
        ));
    }

    #[test]
    fn lists_are_full_distinct_and_loop_free() {
        let data = random_dataset(200, &[8, 4], 3);
        let w = WeightVector::new(vec![0.8, 0.5]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        for gamma in [5, 199, 500] {
            let g = init_nndescent(&space, &BuildParams::new(gamma, 2, 9)).unwrap();
            for (o, list) in g.iter().enumerate() {
                assert_eq!(list.len(), gamma.min(199));
                let set: HashSet<_> = list.iter().collect();
                assert_eq!(set.len(), list.len());
                assert!(!list.contains(&(o as u32)));
            }
        }
    }

    #[test]
    fn min_similarity_never_decreases_across_sweeps() {
        let data = random_dataset(300, &[6, 6], 5);
        let w = WeightVector::new(vec![1.0, 0.4]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        let mut nd = NnDescent::random_init(&space, &BuildParams::new(10, 1, 2)).unwrap();
        let mut prev = nd.min_similarities();
        for _ in 0..4 {
            nd.sweep();
            let cur = nd.min_similarities();
            assert!(cur.iter().zip(&prev).all(|(c, p)| c >= p));
            prev = cur;
        }
    }

    #[test]
    fn duplicate_is_nearest_neighbor_of_its_twin() {
        let mut data = random_dataset(150, &[8, 8], 8);
        let twin = data.to_multivector(17);
        data = crate::test_support::append(&data, &twin);
        let w = WeightVector::new(vec![0.9, 0.3]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        let g = init_nndescent(&space, &BuildParams::new(149, 1, 4)).unwrap();
        assert_eq!(g[150][0], 17);
        assert_eq!(g[17][0], 150);
    }
}
