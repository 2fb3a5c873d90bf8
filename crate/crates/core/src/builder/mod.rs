//! Construction of the nearest-better relation.
//!
//! [`cnbsi`] is the exact quadratic traversal. [`cnbsd`] divides a set by the
//! value of one randomly chosen variable at a time and only compares
//! solutions inside small leaves plus the best solutions of sibling subsets.
//! [`cnbsrp`] repeats independent divisions and keeps, per solution, the
//! closest better solution any round found.

mod cnbsi;
mod division;
mod projection;

pub use cnbsi::cnbsi;
pub use division::{
    cnbsd, cnbsd_local, cnbsd_with_stats, partition_by_domain, DivisionStats, ProjectionPlan,
    DEFAULT_LEAF_SIZE,
};
pub use projection::{cnbsrp, cnbsrp_local, projection_bound, required_projections};

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NbnGraph;
use crate::model::{Solution, SolutionId};
use crate::sample_set::SampleSet;

/// Nearest-better link of one solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub parent: SolutionId,
    pub distance: f64,
}

impl Link {
    /// Ordering used everywhere a choice between candidate parents is made:
    /// smaller distance first, then lower parent id.
    fn cmp_key(&self, other: &Link) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.parent.cmp(&other.parent))
    }
}

/// Per-solution best known nearest-better link for one sample set.
///
/// Offers and merges only ever replace a link with a strictly preferable
/// one, so distances never increase.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTable {
    tag: u64,
    links: Vec<Option<Link>>,
}

impl BetaTable {
    /// A table with no links for every solution of `samples`.
    pub fn empty(samples: &SampleSet) -> Self {
        Self::with_tag(samples.tag(), samples.len())
    }

    pub(crate) fn with_tag(tag: u64, len: usize) -> Self {
        Self {
            tag,
            links: vec![None; len],
        }
    }

    pub(crate) fn from_links(tag: u64, links: Vec<Option<Link>>) -> Self {
        Self { tag, links }
    }

    pub fn tag(&self) -> u64 {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn get(&self, id: SolutionId) -> Option<Link> {
        self.links[id as usize]
    }

    pub fn links(&self) -> &[Option<Link>] {
        &self.links
    }

    /// Nearest-better distance; infinite when no parent is known.
    pub fn nbd(&self, id: SolutionId) -> f64 {
        self.links[id as usize].map_or(f64::INFINITY, |l| l.distance)
    }

    /// Records `parent` for `child` if it beats the current link.
    pub fn offer(&mut self, child: SolutionId, parent: SolutionId, distance: f64) -> bool {
        let candidate = Link { parent, distance };
        let slot = &mut self.links[child as usize];
        match slot {
            Some(cur) if cur.cmp_key(&candidate) != Ordering::Greater => false,
            _ => {
                *slot = Some(candidate);
                true
            }
        }
    }

    /// Pointwise minimum of two tables over the same sample set.
    pub fn merge(mut self, incoming: &BetaTable) -> Result<BetaTable> {
        self.merge_from(incoming)?;
        Ok(self)
    }

    pub fn merge_from(&mut self, incoming: &BetaTable) -> Result<()> {
        if self.tag != incoming.tag || self.len() != incoming.len() {
            return Err(Error::SampleSetMismatch);
        }
        for (id, link) in incoming.links.iter().enumerate() {
            if let Some(l) = link {
                self.offer(id as SolutionId, l.parent, l.distance);
            }
        }
        Ok(())
    }
}

/// Which builder to run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Cnbsi,
    Cnbsrp,
}

/// Parameters for [`build_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub algorithm: Algorithm,
    /// Number of projection rounds; derived from `epsilon` when absent.
    pub rounds: Option<usize>,
    pub epsilon: f64,
    pub leaf_size: usize,
    pub seed: u64,
    /// Center of a local sample; enables the center-subset re-split.
    pub center: Option<Solution>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Cnbsrp,
            rounds: None,
            epsilon: 0.3,
            leaf_size: DEFAULT_LEAF_SIZE,
            seed: 0,
            center: None,
        }
    }
}

impl BuildConfig {
    /// Rounds that will be run for a set of `n` solutions.
    pub fn effective_rounds(&self, n: usize) -> Result<usize> {
        match self.rounds {
            Some(0) => Err(Error::Config("at least one projection round".into())),
            Some(r) => Ok(r),
            None => required_projections(n.max(2), self.epsilon),
        }
    }
}

/// Builds the nearest-better network of `samples`.
pub fn build_graph(samples: Arc<SampleSet>, config: &BuildConfig) -> Result<NbnGraph> {
    let table = match config.algorithm {
        Algorithm::Cnbsi => cnbsi(&samples),
        Algorithm::Cnbsrp => {
            let rounds = config.effective_rounds(samples.len())?;
            match &config.center {
                None => cnbsrp(&samples, rounds, config.leaf_size, config.seed)?,
                Some(c) => cnbsrp_local(&samples, rounds, config.leaf_size, config.seed, c)?,
            }
        }
    };
    NbnGraph::new(samples, table)
}
