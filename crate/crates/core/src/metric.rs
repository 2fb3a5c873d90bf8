//! Distance metrics behind the nearest-better relation.
//!
//! Bit strings use the Hamming distance. Symmetric tours use the Dice
//! dissimilarity of their undirected edge sets, which is also exposed in
//! edge units (`dim * dice`), the number of edges of one tour missing from
//! the other.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Solution, SolutionId};
use crate::sample_set::SampleSet;

/// Undirected edge with the smaller endpoint first.
pub type Edge = (u32, u32);

fn check_dims(a: &[u32], b: &[u32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

pub fn hamming_distance(a: &Solution, b: &Solution) -> Result<u32> {
    hamming(&a.values, &b.values)
}

/// Hamming distance between two bit vectors.
pub fn hamming(a: &[u32], b: &[u32]) -> Result<u32> {
    check_dims(a, b)?;
    if let Some(v) = a.iter().chain(b).find(|&&v| v > 1) {
        return Err(Error::InvalidSolution(format!("bit value {v} is not 0 or 1")));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as u32)
}

/// The `dim` undirected edges of a closed tour.
pub fn edge_set(tour: &[u32]) -> Result<BTreeSet<Edge>> {
    if tour.len() < 3 {
        return Err(Error::DegenerateTour(tour.len()));
    }
    Ok(tour
        .iter()
        .zip(tour.iter().cycle().skip(1))
        .map(|(&u, &v)| canonical_edge(u, v))
        .collect())
}

pub fn canonical_edge(u: u32, v: u32) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Per-city neighbour pairs of a tour, indexed by city.
pub(crate) fn neighbours(tour: &[u32]) -> Vec<[u32; 2]> {
    let n = tour.len();
    let mut out = vec![[u32::MAX; 2]; n];
    for i in 0..n {
        let c = tour[i] as usize;
        out[c] = [tour[(i + n - 1) % n], tour[(i + 1) % n]];
    }
    out
}

/// Number of undirected edges two tours have in common.
pub fn shared_edges(a: &[u32], b: &[u32]) -> Result<u32> {
    check_dims(a, b)?;
    if a.len() < 3 {
        return Err(Error::DegenerateTour(a.len()));
    }
    let nb = neighbours(b);
    let n = a.len();
    let mut shared = 0;
    for i in 0..n {
        let (u, v) = (a[i] as usize, a[(i + 1) % n]);
        let [p, q] = *nb
            .get(u)
            .ok_or_else(|| Error::InvalidSolution(format!("city {u} out of range")))?;
        if p == v || q == v {
            shared += 1;
        }
    }
    Ok(shared)
}

/// Edges of `a` that `b` lacks; equals `dim * dice_distance(a, b)`.
pub fn unshared_edges(a: &[u32], b: &[u32]) -> Result<u32> {
    Ok(a.len() as u32 - shared_edges(a, b)?)
}

/// Dice dissimilarity of the undirected edge sets, in `[0, 1]`.
pub fn dice_distance(a: &Solution, b: &Solution) -> Result<f64> {
    let shared = shared_edges(&a.values, &b.values)? as f64;
    let total = 2.0 * a.dim() as f64;
    Ok(1.0 - 2.0 * shared / total)
}

/// Ids of all solutions strictly closer than `radius` to `x`, excluding `x`.
///
/// The radius is measured in the set's metric units (bits or edges).
pub fn neighborhood(x: &Solution, set: &SampleSet, radius: f64) -> Result<Vec<SolutionId>> {
    let mut out = Vec::new();
    for id in 0..set.len() as SolutionId {
        let d = set.distance_to(id, &x.values)?;
        if d > 0.0 && d < radius {
            out.push(id);
        }
    }
    Ok(out)
}
