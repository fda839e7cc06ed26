use std::cmp::Ordering;

use crate::dataset::ObjectId;

/// An object id with its similarity to some reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub id: ObjectId,
    pub score: f64,
}

impl Scored {
    pub fn new(id: ObjectId, score: f64) -> Self {
        Scored { id, score }
    }
}

/// Ranking order: higher score first, lower id first among equal scores.
#[inline]
pub fn by_rank(a: &Scored, b: &Scored) -> Ordering {
    b.score.total_cmp(&a.score).then(a.id.cmp(&b.id))
}

/// Position of the lowest-ranked entry.
#[inline]
pub fn worst_position(items: &[Scored]) -> Option<usize> {
    items
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| by_rank(a, b))
        .map(|(i, _)| i)
}
