use rayon::prelude::*;

use super::{BetaTable, Link};
use crate::model::SolutionId;
use crate::sample_set::{RowMetric, Rows, SampleSet};

/// Exact nearest-better table by full traversal, `O(N^2 D)`.
///
/// Every solution links to the closest solution of strictly greater fitness,
/// ties going to the lower id. Solutions without a strictly better one are
/// roots.
pub fn cnbsi(samples: &SampleSet) -> BetaTable {
    let links = match &samples.rows {
        Rows::Bits(m) => exact_links(m, samples.fitnesses()),
        Rows::Tours(m) => exact_links(m, samples.fitnesses()),
    };
    BetaTable::from_links(samples.tag(), links)
}

/// Ids sorted by fitness, best first, ties by lower id.
pub(crate) fn rank_by_fitness(ids: &mut [SolutionId], fitness: &[f64]) {
    ids.sort_unstable_by(|&a, &b| {
        fitness[b as usize]
            .total_cmp(&fitness[a as usize])
            .then(a.cmp(&b))
    });
}

fn exact_links<M: RowMetric>(m: &M, fitness: &[f64]) -> Vec<Option<Link>> {
    let mut order: Vec<SolutionId> = (0..fitness.len() as SolutionId).collect();
    rank_by_fitness(&mut order, fitness);
    // better_end[i]: number of ranked solutions strictly better than order[i].
    let mut better_end = vec![0usize; order.len()];
    for i in 1..order.len() {
        better_end[i] = if fitness[order[i] as usize] == fitness[order[i - 1] as usize] {
            better_end[i - 1]
        } else {
            i
        };
    }
    let mut links = vec![None; fitness.len()];
    let found: Vec<(SolutionId, Option<Link>)> = (0..order.len())
        .into_par_iter()
        .map(|i| {
            let x = order[i];
            (x, nearest_among(m, x, &order[..better_end[i]]))
        })
        .collect();
    for (x, link) in found {
        links[x as usize] = link;
    }
    links
}

#[inline]
fn nearest_among<M: RowMetric>(m: &M, x: SolutionId, candidates: &[SolutionId]) -> Option<Link> {
    let mut best: Option<Link> = None;
    for &y in candidates {
        let d = m.dist(x, y);
        match best {
            Some(b) if d > b.distance || (d == b.distance && y > b.parent) => {}
            _ => best = Some(Link { parent: y, distance: d }),
        }
    }
    best
}

/// Exact traversal restricted to `ids`, offering links into `table`.
/// Returns the best solution of the subset.
pub(crate) fn cnbsi_subset<M: RowMetric>(
    m: &M,
    fitness: &[f64],
    ids: &mut [SolutionId],
    table: &mut BetaTable,
) -> SolutionId {
    rank_by_fitness(ids, fitness);
    let mut start = 0;
    for i in 1..ids.len() {
        let x = ids[i];
        if fitness[x as usize] != fitness[ids[i - 1] as usize] {
            start = i;
        }
        if let Some(link) = nearest_among(m, x, &ids[..start]) {
            table.offer(x, link.parent, link.distance);
        }
    }
    ids[0]
}
