//! Discrete Fréchet distance between cell sequences (Eiter and Mannila's
//! coupling recurrence) with Euclidean ground distance.

use crate::error::PathError;
use crate::scenario::Cell;

pub fn discrete_frechet(p: &[Cell], q: &[Cell]) -> Result<f64, PathError> {
    if p.is_empty() || q.is_empty() {
        return Err(PathError::Empty);
    }
    let n = q.len();
    // Rolling rows of the coupling table.
    let mut prev = vec![0.0f64; n];
    let mut cur = vec![0.0f64; n];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            let d = a.dist(b);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => d.max(cur[j - 1]),
                (_, 0) => d.max(prev[0]),
                _ => d.max(prev[j].min(cur[j - 1]).min(prev[j - 1])),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[n - 1])
}
