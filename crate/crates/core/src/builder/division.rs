use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cnbsi::cnbsi_subset;
use super::BetaTable;
use crate::error::{Error, Result};
use crate::model::{Solution, SolutionId};
use crate::sample_set::{RowMetric, Rows, SampleSet};

/// Leaf size below which a subset is solved by exact traversal.
pub const DEFAULT_LEAF_SIZE: usize = 20;

/// Random division schedule for one projection round.
///
/// Variables are drawn uniformly without replacement along every branch of
/// the division; siblings share the set of variables left after their
/// parent's split.
#[derive(Debug, Clone)]
pub struct ProjectionPlan {
    remaining: Vec<u32>,
    leaf_size: usize,
    rng: ChaCha8Rng,
}

impl ProjectionPlan {
    /// Plan over all `dim` variables.
    pub fn new(dim: usize, leaf_size: usize, seed: u64) -> Result<Self> {
        Self::for_round(dim, leaf_size, seed, 0)
    }

    /// Plan for round `round` of a projection run seeded with `seed`.
    pub fn for_round(dim: usize, leaf_size: usize, seed: u64, round: u64) -> Result<Self> {
        if leaf_size < 2 {
            return Err(Error::Config(format!(
                "leaf size must be at least 2, got {leaf_size}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round);
        Ok(Self {
            remaining: (0..dim as u32).collect(),
            leaf_size,
            rng,
        })
    }

    /// Restricts the variables this plan may split on.
    pub fn with_domains(mut self, domains: Vec<u32>) -> Self {
        self.remaining = domains;
        self
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn remaining(&self) -> &[u32] {
        &self.remaining
    }
}

/// Instrumentation of one division run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DivisionStats {
    /// Largest subset handed to a recursive call at each depth.
    pub max_subset_by_depth: Vec<usize>,
    /// Subsets solved exactly at the leaf size.
    pub leaves: usize,
    /// Oversized subsets solved exactly because no variable was left.
    pub exhausted: usize,
    /// Extra splits applied to the subset holding the center's values.
    pub center_resplits: usize,
}

impl DivisionStats {
    fn record(&mut self, depth: usize, size: usize) {
        if self.max_subset_by_depth.len() <= depth {
            self.max_subset_by_depth.resize(depth + 1, 0);
        }
        let slot = &mut self.max_subset_by_depth[depth];
        *slot = (*slot).max(size);
    }
}

/// Groups `ids` by their value at variable `k`, ordered by that value.
pub fn partition_by_domain(
    samples: &SampleSet,
    ids: &[SolutionId],
    k: usize,
) -> Vec<Vec<SolutionId>> {
    match &samples.rows {
        Rows::Bits(m) => partition(m, ids, k),
        Rows::Tours(m) => partition(m, ids, k),
    }
}

fn partition<M: RowMetric>(m: &M, ids: &[SolutionId], k: usize) -> Vec<Vec<SolutionId>> {
    let mut keyed: Vec<(u32, SolutionId)> = ids.iter().map(|&id| (m.key(id, k), id)).collect();
    keyed.sort_unstable();
    keyed
        .chunk_by(|a, b| a.0 == b.0)
        .map(|g| g.iter().map(|&(_, id)| id).collect())
        .collect()
}

struct Division<'a, M> {
    m: &'a M,
    fitness: &'a [f64],
    leaf_size: usize,
    /// Value of every variable for the local-sampling center.
    center: Option<Vec<u32>>,
    rng: ChaCha8Rng,
    stats: DivisionStats,
}

struct Group {
    ids: Vec<SolutionId>,
    remaining: Vec<u32>,
    /// Whether the group agrees with the center on its split variable.
    centered: bool,
}

impl<M: RowMetric> Division<'_, M> {
    fn take_domain(&mut self, remaining: &mut Vec<u32>) -> usize {
        let i = self.rng.gen_range(0..remaining.len());
        remaining.swap_remove(i) as usize
    }

    fn split(&mut self, ids: &[SolutionId], mut remaining: Vec<u32>) -> Vec<Group> {
        let k = self.take_domain(&mut remaining);
        let center_value = self.center.as_ref().map(|c| c[k]);
        partition(self.m, ids, k)
            .into_iter()
            .map(|g| {
                let centered = center_value == Some(self.m.key(g[0], k));
                Group {
                    ids: g,
                    remaining: remaining.clone(),
                    centered,
                }
            })
            .collect()
    }

    fn run(
        &mut self,
        mut ids: Vec<SolutionId>,
        remaining: Vec<u32>,
        depth: usize,
        table: &mut BetaTable,
    ) -> SolutionId {
        self.stats.record(depth, ids.len());
        if ids.len() <= self.leaf_size {
            self.stats.leaves += 1;
            return cnbsi_subset(self.m, self.fitness, &mut ids, table);
        }
        if remaining.is_empty() {
            self.stats.exhausted += 1;
            return cnbsi_subset(self.m, self.fitness, &mut ids, table);
        }

        let mut groups = self.split(&ids, remaining);
        drop(ids);
        if self.center.is_some() {
            // Keep re-splitting the subset that matches the center until it
            // is small or out of variables.
            while let Some(pos) = groups
                .iter()
                .position(|g| g.centered && g.ids.len() > self.leaf_size && !g.remaining.is_empty())
            {
                let g = groups.swap_remove(pos);
                self.stats.center_resplits += 1;
                groups.extend(self.split(&g.ids, g.remaining));
            }
            // Deterministic child order regardless of swap_remove shuffling.
            groups.sort_unstable_by_key(|g| g.ids[0]);
        }

        let mut bests: Vec<SolutionId> = Vec::with_capacity(groups.len());
        for g in groups {
            bests.push(self.run(g.ids, g.remaining, depth + 1, table));
        }
        cnbsi_subset(self.m, self.fitness, &mut bests, table)
    }
}

fn run_division<M: RowMetric>(
    m: &M,
    fitness: &[f64],
    ids: &[SolutionId],
    plan: ProjectionPlan,
    center: Option<Vec<u32>>,
    table: &mut BetaTable,
) -> (SolutionId, DivisionStats) {
    let mut div = Division {
        m,
        fitness,
        leaf_size: plan.leaf_size,
        center,
        rng: plan.rng,
        stats: DivisionStats::default(),
    };
    let best = div.run(ids.to_vec(), plan.remaining, 0, table);
    (best, div.stats)
}

/// One division round into an existing table.
pub(crate) fn divide_into(
    samples: &SampleSet,
    ids: &[SolutionId],
    plan: ProjectionPlan,
    center: Option<&Solution>,
    table: &mut BetaTable,
) -> Result<(SolutionId, DivisionStats)> {
    if ids.is_empty() {
        return Err(Error::Config("cannot divide an empty subset".into()));
    }
    let center_keys = match center {
        None => None,
        Some(c) => {
            crate::model::validate(samples.encoding(), samples.dim(), &c.values)?;
            Some(
                (0..samples.dim())
                    .map(|k| samples.encoding().domain_value(&c.values, k))
                    .collect(),
            )
        }
    };
    Ok(match &samples.rows {
        Rows::Bits(m) => run_division(m, samples.fitnesses(), ids, plan, center_keys, table),
        Rows::Tours(m) => run_division(m, samples.fitnesses(), ids, plan, center_keys, table),
    })
}

/// One random division round over `ids`.
///
/// Returns the links found and the best solution of the subset (highest
/// fitness, lowest id among ties).
pub fn cnbsd(
    samples: &SampleSet,
    ids: &[SolutionId],
    plan: ProjectionPlan,
) -> Result<(BetaTable, SolutionId)> {
    let (t, best, _) = cnbsd_with_stats(samples, ids, plan, None)?;
    Ok((t, best))
}

/// Division round for a local sample around `center`: the subset agreeing
/// with the center on the split variable is split again immediately instead
/// of being recursed into as a whole.
pub fn cnbsd_local(
    samples: &SampleSet,
    ids: &[SolutionId],
    plan: ProjectionPlan,
    center: &Solution,
) -> Result<(BetaTable, SolutionId)> {
    let (t, best, _) = cnbsd_with_stats(samples, ids, plan, Some(center))?;
    Ok((t, best))
}

/// [`cnbsd`] or [`cnbsd_local`] with instrumentation.
pub fn cnbsd_with_stats(
    samples: &SampleSet,
    ids: &[SolutionId],
    plan: ProjectionPlan,
    center: Option<&Solution>,
) -> Result<(BetaTable, SolutionId, DivisionStats)> {
    let mut table = BetaTable::empty(samples);
    let (best, stats) = divide_into(samples, ids, plan, center, &mut table)?;
    Ok((table, best, stats))
}

/// Best solution of `ids` under the shared tie rule.
#[cfg(test)]
fn best_of(samples: &SampleSet, ids: &[SolutionId]) -> Option<SolutionId> {
    let mut v = ids.to_vec();
    super::cnbsi::rank_by_fitness(&mut v, samples.fitnesses());
    v.first().copied()
}
