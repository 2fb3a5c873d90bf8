//! The nearest-better network: a forest whose edges point from every
//! solution to its nearest strictly better solution.

use std::sync::Arc;

use crate::builder::{BetaTable, Link};
use crate::error::{Error, Result};
use crate::model::SolutionId;
use crate::sample_set::SampleSet;

#[derive(Debug, Clone)]
pub struct NbnGraph {
    samples: Arc<SampleSet>,
    links: Vec<Option<Link>>,
    roots: Vec<SolutionId>,
}

impl NbnGraph {
    /// Wraps a table after checking that every link is sound: the parent is
    /// strictly fitter and the stored distance is the metric distance.
    pub fn new(samples: Arc<SampleSet>, table: BetaTable) -> Result<Self> {
        if table.tag() != samples.tag() || table.len() != samples.len() {
            return Err(Error::SampleSetMismatch);
        }
        let graph = Self {
            roots: table
                .links()
                .iter()
                .enumerate()
                .filter(|(_, l)| l.is_none())
                .map(|(i, _)| i as SolutionId)
                .collect(),
            links: table.links().to_vec(),
            samples,
        };
        graph.check_invariants()?;
        Ok(graph)
    }

    pub fn samples(&self) -> &Arc<SampleSet> {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn link(&self, id: SolutionId) -> Option<Link> {
        self.links[id as usize]
    }

    pub fn links(&self) -> &[Option<Link>] {
        &self.links
    }

    pub fn parent(&self, id: SolutionId) -> Option<SolutionId> {
        self.links[id as usize].map(|l| l.parent)
    }

    /// Nearest-better distance; roots report infinity.
    pub fn nbd(&self, id: SolutionId) -> f64 {
        self.links[id as usize].map_or(f64::INFINITY, |l| l.distance)
    }

    pub fn roots(&self) -> &[SolutionId] {
        &self.roots
    }

    pub fn is_root(&self, id: SolutionId) -> bool {
        self.links[id as usize].is_none()
    }

    pub fn fitness(&self, id: SolutionId) -> f64 {
        self.samples.fitness(id)
    }

    /// Best-fitness solution, lowest id among ties.
    pub fn global_best(&self) -> Option<SolutionId> {
        let f = self.samples.fitnesses();
        (0..f.len() as SolutionId).reduce(|best, id| {
            if f[id as usize] > f[best as usize] {
                id
            } else {
                best
            }
        })
    }

    /// Children lists in CSR form: `(offsets, children)`, children ascending.
    pub fn children(&self) -> (Vec<usize>, Vec<SolutionId>) {
        let n = self.len();
        let mut offsets = vec![0usize; n + 1];
        for l in self.links.iter().flatten() {
            offsets[l.parent as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut children = vec![0; offsets[n]];
        for (id, l) in self.links.iter().enumerate() {
            if let Some(l) = l {
                children[fill[l.parent as usize]] = id as SolutionId;
                fill[l.parent as usize] += 1;
            }
        }
        (offsets, children)
    }

    /// Re-checks the forest properties. Strictly increasing fitness along
    /// every edge rules out cycles, and each node stores one parent at most.
    pub fn check_invariants(&self) -> Result<()> {
        for (id, link) in self.links.iter().enumerate() {
            let Some(l) = link else { continue };
            let id = id as SolutionId;
            if l.parent as usize >= self.len() {
                return Err(Error::Invariant(format!("{id} links to missing {}", l.parent)));
            }
            if self.samples.fitness(l.parent) <= self.samples.fitness(id) {
                return Err(Error::Invariant(format!(
                    "edge {id} -> {} does not improve fitness",
                    l.parent
                )));
            }
            let d = self.samples.distance(id, l.parent);
            if d != l.distance {
                return Err(Error::Invariant(format!(
                    "edge {id} -> {} stores distance {} but the metric gives {d}",
                    l.parent, l.distance
                )));
            }
        }
        Ok(())
    }

    /// Walks every node to its root and fails on any cycle; a direct check
    /// independent of the fitness argument.
    pub fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on current walk, 2 = reaches a root.
        let mut state = vec![0u8; self.len()];
        let mut walk = Vec::new();
        for start in 0..self.len() {
            let mut cur = start;
            while state[cur] == 0 {
                state[cur] = 1;
                walk.push(cur);
                match self.links[cur] {
                    Some(l) => cur = l.parent as usize,
                    None => break,
                }
            }
            if state[cur] == 1 && self.links[cur].is_some() {
                return Err(Error::Invariant(format!("cycle through {cur}")));
            }
            for &w in &walk {
                state[w] = 2;
            }
            walk.clear();
        }
        Ok(())
    }
}
