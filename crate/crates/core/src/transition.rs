//! Transition probabilities of a (1+1) evolution strategy, used as an
//! independent check that every nearest-better link is the most likely
//! improving move.
//!
//! Densities are computed in log space so that large dimensions do not
//! underflow. Only their ordering matters for verification.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::cnbsi;
use crate::error::{Error, Result};
use crate::graph::NbnGraph;
use crate::metric;
use crate::model::{Encoding, Solution, SolutionId};
use crate::sample_set::SampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    r: f64,
    dim: usize,
}

impl TransitionModel {
    pub fn new(r: f64, dim: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {r}")));
        }
        Ok(Self { r, dim })
    }

    pub fn step_size(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ln((2 pi r)^(-D/2) exp(-d^2 / (2r)))`.
    pub fn log_density(&self, distance: f64) -> f64 {
        -(self.dim as f64) / 2.0 * (2.0 * PI * self.r).ln() - distance * distance / (2.0 * self.r)
    }

    pub fn density(&self, distance: f64) -> f64 {
        self.log_density(distance).exp()
    }

    /// Mutation density between two assignments, with Hamming distance for
    /// bit strings and unshared edges for tours.
    pub fn mutation_prob(&self, encoding: Encoding, a: &Solution, b: &Solution) -> Result<f64> {
        Ok(self.density(solution_distance(encoding, a, b)?))
    }

    pub fn log_mutation_prob(&self, encoding: Encoding, a: &Solution, b: &Solution) -> Result<f64> {
        Ok(self.log_density(solution_distance(encoding, a, b)?))
    }
}

fn solution_distance(encoding: Encoding, a: &Solution, b: &Solution) -> Result<f64> {
    Ok(match encoding {
        Encoding::Binary => metric::hamming(&a.values, &b.values)?,
        Encoding::Tour => metric::unshared_edges(&a.values, &b.values)?,
    } as f64)
}

/// 1 when moving from `b` to `a` is accepted, i.e. `f(a) > f(b)`.
pub fn selection_prob(a: &Solution, b: &Solution) -> u8 {
    (a.fitness > b.fitness) as u8
}

/// The stored solution with the largest transition probability out of `x`:
/// the product of the mutation density and the selection indicator. Ties go
/// to the lower id. `None` when nothing in the set is strictly better.
pub fn argmax_transition(
    set: &SampleSet,
    x: SolutionId,
    model: &TransitionModel,
) -> Option<SolutionId> {
    let fx = set.fitness(x);
    let mut best: Option<(f64, SolutionId)> = None;
    for y in set.ids() {
        if set.fitness(y) <= fx {
            continue;
        }
        let lp = model.log_density(set.distance(x, y));
        if best.map_or(true, |(b, _)| lp > b) {
            best = Some((lp, y));
        }
    }
    best.map(|(_, y)| y)
}

/// Links longer than the step size; a step-size-limited search would never
/// make these moves in one step.
pub fn severed_edges(graph: &NbnGraph, r: f64) -> Vec<SolutionId> {
    graph
        .samples()
        .ids()
        .filter(|&id| graph.link(id).is_some_and(|l| l.distance > r))
        .collect()
}

/// Outcome of comparing a graph with an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub oracle: String,
    pub checked: usize,
    /// Nodes whose parent differs from the oracle's choice.
    pub mismatched: Vec<SolutionId>,
    /// Nodes whose distance exceeds the oracle's nearest-better distance.
    pub worse: Vec<SolutionId>,
    /// Links that are not a strictly better solution at the stated distance.
    pub unsound: Vec<SolutionId>,
}

impl OracleReport {
    /// Fraction of checked nodes with a larger distance than the oracle.
    pub fn error_rate(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.worse.len() as f64 / self.checked as f64
        }
    }
}

fn unsound_links(graph: &NbnGraph) -> Vec<SolutionId> {
    let set = graph.samples();
    set.ids()
        .into_par_iter()
        .filter(|&id| match graph.link(id) {
            None => false,
            Some(l) => {
                set.fitness(l.parent) <= set.fitness(id) || set.distance(id, l.parent) != l.distance
            }
        })
        .collect()
}

/// Compares `graph` with the exact traversal over the same samples.
pub fn verify_against_cnbsi(graph: &NbnGraph) -> OracleReport {
    let exact = cnbsi(graph.samples());
    let ids: Vec<SolutionId> = graph.samples().ids().collect();
    OracleReport {
        oracle: "cnbsi".into(),
        checked: ids.len(),
        mismatched: ids
            .iter()
            .copied()
            .filter(|&id| graph.parent(id) != exact.get(id).map(|l| l.parent))
            .collect(),
        worse: ids
            .iter()
            .copied()
            .filter(|&id| graph.nbd(id) > exact.nbd(id))
            .collect(),
        unsound: unsound_links(graph),
    }
}

/// Compares `graph` with [`argmax_transition`] for every node, or for the
/// first `cap` nodes when given.
pub fn verify_against_transition(
    graph: &NbnGraph,
    model: &TransitionModel,
    cap: Option<usize>,
) -> OracleReport {
    let set = graph.samples();
    let n = cap.map_or(set.len(), |c| c.min(set.len()));
    let found: Vec<(SolutionId, Option<SolutionId>)> = (0..n as SolutionId)
        .into_par_iter()
        .map(|id| (id, argmax_transition(set, id, model)))
        .collect();
    let mut mismatched = Vec::new();
    let mut worse = Vec::new();
    for (id, target) in found {
        if graph.parent(id) != target {
            mismatched.push(id);
            let oracle_d = target.map_or(f64::INFINITY, |t| set.distance(id, t));
            if graph.nbd(id) > oracle_d {
                worse.push(id);
            }
        }
    }
    OracleReport {
        oracle: "argmax-transition".into(),
        checked: n,
        mismatched,
        worse,
        unsound: unsound_links(graph),
    }
}
