//! Seed choice and reachability repair.

use std::collections::VecDeque;

use crate::dataset::{JointSpace, ObjectId};

/// The object most similar to the centroid of all concatenated vectors.
/// Lowest id wins ties.
pub fn select_seed(space: &JointSpace<'_>) -> ObjectId {
    let data = space.data();
    let n = data.len();
    let centroids: Vec<Vec<f64>> = (0..data.modalities())
        .map(|i| {
            let d = data.dims()[i];
            let mut c = vec![0f64; d];
            for v in data.modality_data(i).chunks_exact(d) {
                for (acc, x) in c.iter_mut().zip(v) {
                    *acc += *x as f64;
                }
            }
            c.iter_mut().for_each(|x| *x /= n as f64);
            c
        })
        .collect();
    let w2 = space.squared_weights();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for o in 0..n {
        let mut s = 0.0;
        for (i, c) in centroids.iter().enumerate() {
            if w2[i] == 0.0 {
                continue;
            }
            let ip: f64 = data.vector(i, o).iter().zip(c).map(|(x, y)| *x as f64 * y).sum();
            s += w2[i] * ip;
        }
        if s > best.0 {
            best = (s, o);
        }
    }
    best.1 as ObjectId
}

/// Makes every vertex reachable from `seed` by directed edges.
///
/// Whenever breadth-first search stalls, the unreached vertex most similar to
/// any reached vertex gets an edge from that reached vertex, and the search
/// resumes from it. Returns the added `(from, to)` edges in insertion order.
pub fn ensure_connectivity(
    adjacency: &mut [Vec<ObjectId>],
    seed: ObjectId,
    space: &JointSpace<'_>,
) -> Vec<(ObjectId, ObjectId)> {
    let n = adjacency.len();
    let mut repairs = Vec::new();
    if n == 0 {
        return repairs;
    }
    let mut reached = vec![false; n];
    let mut queue = VecDeque::new();
    // Vertices reached since `best` was last refreshed.
    let mut fresh: Vec<usize> = Vec::new();
    reached[seed as usize] = true;
    queue.push_back(seed as usize);
    fresh.push(seed as usize);
    // Best reached source per unreached vertex: (similarity, source id).
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    let mut reached_count = 1;

    loop {
        while let Some(v) = queue.pop_front() {
            for &u in &adjacency[v] {
                let u = u as usize;
                if !reached[u] {
                    reached[u] = true;
                    reached_count += 1;
                    queue.push_back(u);
                    fresh.push(u);
                }
            }
        }
        if reached_count == n {
            break;
        }
        fresh.sort_unstable();
        for u in (0..n).filter(|u| !reached[*u]) {
            for &r in &fresh {
                let s = space.sim(r, u);
                let better = match best[u] {
                    None => true,
                    Some((bs, br)) => s > bs || (s == bs && r < br),
                };
                if better {
                    best[u] = Some((s, r));
                }
            }
        }
        fresh.clear();
        let (target, (_, source)) = (0..n)
            .filter(|u| !reached[*u])
            .map(|u| (u, best[u].expect("scored against reached set")))
            .fold(None::<(usize, (f64, usize))>, |acc, cur| match acc {
                Some(a) if a.1 .0 >= cur.1 .0 => Some(a),
                _ => Some(cur),
            })
            .expect("at least one unreached vertex");
        adjacency[source].push(target as ObjectId);
        repairs.push((source as ObjectId, target as ObjectId));
        reached[target] = true;
        reached_count += 1;
        queue.push_back(target);
        fresh.push(target);
    }
    repairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MultiModalDataset;
    use crate::test_support::random_dataset;
    use crate::vector::WeightVector;

    fn reachable(adj: &[Vec<u32>], seed: u32) -> usize {
        let mut seen = vec![false; adj.len()];
        let mut stack = vec![seed as usize];
        seen[seed as usize] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    stack.push(u as usize);
                }
            }
        }
        count
    }

    #[test]
    fn single_object_seed_and_noop_repair() {
        let data = MultiModalDataset::normalized(vec![2], vec![vec![0.3, 0.4]]).unwrap();
        let w = WeightVector::new(vec![1.0]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        assert_eq!(select_seed(&space), 0);
        let mut adj = vec![vec![]];
        assert!(ensure_connectivity(&mut adj, 0, &space).is_empty());
    }

    #[test]
    fn symmetric_pair_tie_goes_to_lower_id() {
        let data =
            MultiModalDataset::normalized(vec![2], vec![vec![0.6, 0.8, 0.6, -0.8]]).unwrap();
        let w = WeightVector::new(vec![1.0]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        assert_eq!(select_seed(&space), 0);
    }

    #[test]
    fn seed_matches_exhaustive_scan() {
        let data = random_dataset(1000, &[6, 4], 77);
        let w = WeightVector::new(vec![0.9, 0.4]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        // Explicit concatenated centroid, then a full scan.
        let m = data.modalities();
        let mut centroid: Vec<Vec<f64>> = data.dims().iter().map(|d| vec![0.0; *d]).collect();
        for o in 0..data.len() {
            for i in 0..m {
                for (c, x) in centroid[i].iter_mut().zip(data.vector(i, o)) {
                    *c += w.omega()[i] as f64 * *x as f64 / data.len() as f64;
                }
            }
        }
        let score = |o: usize| -> f64 {
            (0..m)
                .map(|i| {
                    data.vector(i, o)
                        .iter()
                        .zip(&centroid[i])
                        .map(|(x, c)| w.omega()[i] as f64 * *x as f64 * c)
                        .sum::<f64>()
                })
                .sum()
        };
        let expected = (0..data.len())
            .max_by(|a, b| score(*a).total_cmp(&score(*b)).then(b.cmp(a)))
            .unwrap();
        assert_eq!(select_seed(&space) as usize, expected);
    }

    #[test]
    fn connected_graph_is_untouched() {
        let data = random_dataset(4, &[3], 1);
        let w = WeightVector::new(vec![1.0]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        let mut adj = vec![vec![1], vec![2], vec![3], vec![0]];
        let before = adj.clone();
        assert!(ensure_connectivity(&mut adj, 2, &space).is_empty());
        assert_eq!(adj, before);
    }

    #[test]
    fn one_repair_edge_per_unreachable_component() {
        let data = random_dataset(12, &[4, 4], 3);
        let w = WeightVector::new(vec![1.0, 1.0]).unwrap();
        let space = JointSpace::new(&data, &w).unwrap();
        // Three disjoint 4-cliques.
        let mut adj: Vec<Vec<u32>> = (0..12u32)
            .map(|o| {
                let base = o / 4 * 4;
                (base..base + 4).filter(|u| *u != o).collect()
            })
            .collect();
        let repairs = ensure_connectivity(&mut adj, 5, &space);
        assert_eq!(repairs.len(), 2);
        assert_eq!(reachable(&adj, 5), 12);
        // The first repair bridges to the globally most similar unreached
        // vertex from the seed's clique.
        let (src, dst) = repairs[0];
        let best = (4..8)
            .flat_map(|r| (0..12).filter(|u| !(4..8).contains(u)).map(move |u| (r, u)))
            .max_by(|a, b| space.sim(a.0, a.1).total_cmp(&space.sim(b.0, b.1)))
            .unwrap();
        assert_eq!((src as usize, dst as usize), best);
    }
}
