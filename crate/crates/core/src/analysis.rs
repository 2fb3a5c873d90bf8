//! Landscape metrics over a built network: evolutionary paths, distances to
//! the optimum, optima identification and deception screening.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NbnGraph;
use crate::model::SolutionId;
use crate::sample_set::SampleSet;

/// The chain of nearest-better links from a solution up to its root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionaryPath {
    pub nodes: Vec<SolutionId>,
    pub edge_distances: Vec<f64>,
}

impl EvolutionaryPath {
    pub fn start(&self) -> SolutionId {
        self.nodes[0]
    }

    pub fn end(&self) -> SolutionId {
        *self.nodes.last().expect("paths are never empty")
    }

    /// Largest single step; 0 for a path that is already at its summit.
    pub fn distance(&self) -> f64 {
        path_distance(self)
    }
}

pub fn evolutionary_path(graph: &NbnGraph, x: SolutionId) -> EvolutionaryPath {
    let mut nodes = vec![x];
    let mut edge_distances = Vec::new();
    let mut cur = x;
    while let Some(l) = graph.link(cur) {
        nodes.push(l.parent);
        edge_distances.push(l.distance);
        cur = l.parent;
    }
    EvolutionaryPath {
        nodes,
        edge_distances,
    }
}

pub fn path_distance(path: &EvolutionaryPath) -> f64 {
    path.edge_distances.iter().copied().fold(0.0, f64::max)
}

/// Roots of maximal fitness, ascending.
pub fn top_roots(graph: &NbnGraph) -> Vec<SolutionId> {
    let best = graph
        .roots()
        .iter()
        .map(|&r| graph.fitness(r))
        .fold(f64::NEG_INFINITY, f64::max);
    graph
        .roots()
        .iter()
        .copied()
        .filter(|&r| graph.fitness(r) == best)
        .collect()
}

/// Path from `x` to a best-fitness root. When the chain of `x` ends at a
/// root of lower fitness, which approximate builds can leave behind among
/// tied solutions, one final hop to the nearest best-fitness root is added.
pub fn path_to_optimum(graph: &NbnGraph, x: SolutionId) -> EvolutionaryPath {
    let mut path = evolutionary_path(graph, x);
    let end = path.end();
    let tops = top_roots(graph);
    if !tops.contains(&end) {
        let set = graph.samples();
        let (d, o) = tops
            .iter()
            .map(|&o| (set.distance(end, o), o))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("a non-empty graph has a root");
        path.nodes.push(o);
        path.edge_distances.push(d);
    }
    path
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDistance {
    pub distance: f64,
    pub path: EvolutionaryPath,
    /// The best-fitness root the path ends at.
    pub optimum: SolutionId,
}

/// `min` over members of the path distance to the optimum, with the path
/// achieving it (lowest start id among ties).
pub fn set_distance(graph: &NbnGraph, members: &[SolutionId]) -> Result<SetDistance> {
    let mut ids = members.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(Error::Config("set distance needs at least one solution".into()));
    }
    if let Some(&bad) = ids.iter().find(|&&id| id as usize >= graph.len()) {
        return Err(Error::Config(format!("solution {bad} is not in the graph")));
    }
    let best = ids
        .par_iter()
        .map(|&t| path_to_optimum(graph, t))
        .min_by(|a, b| {
            a.distance()
                .total_cmp(&b.distance())
                .then(a.start().cmp(&b.start()))
        })
        .expect("non-empty");
    Ok(SetDistance {
        distance: best.distance(),
        optimum: best.end(),
        path: best,
    })
}

/// How fitness is mapped before comparing with the optima threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scale", rename_all = "snake_case")]
pub enum FitnessScale {
    /// Fitness as evaluated.
    #[default]
    Raw,
    /// Rescaled so the problem's best attainable fitness maps to its
    /// dimension; needs a closed-form maximum.
    Dimension,
    /// Ratio to a reference fitness, by default the best in the set. For
    /// negative fitness (tour lengths) this is `reference / f`, the length
    /// ratio; otherwise `f / reference`.
    RelativeToBest { reference: Option<f64> },
}

impl FitnessScale {
    /// The mapping for a given set.
    pub fn mapper(&self, set: &SampleSet) -> Result<impl Fn(f64) -> f64> {
        let (mul, reference) = match *self {
            FitnessScale::Raw => (1.0, None),
            FitnessScale::Dimension => {
                let max = set.problem().max_fitness().ok_or_else(|| {
                    Error::Config("problem has no closed-form maximum fitness".into())
                })?;
                (set.dim() as f64 / max, None)
            }
            FitnessScale::RelativeToBest { reference } => {
                let r = reference.unwrap_or_else(|| {
                    set.fitnesses().iter().copied().fold(f64::NEG_INFINITY, f64::max)
                });
                if r == 0.0 || !r.is_finite() {
                    return Err(Error::Config(format!("unusable reference fitness {r}")));
                }
                (1.0, Some(r))
            }
        };
        Ok(move |f: f64| match reference {
            None => f * mul,
            Some(r) if r < 0.0 => r / f,
            Some(r) => f / r,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimaReport {
    pub optima_ids: Vec<SolutionId>,
    pub theta: f64,
    pub vartheta: f64,
    pub scale: FitnessScale,
    pub global_optimum_id: Option<SolutionId>,
}

impl OptimaReport {
    pub fn count(&self) -> usize {
        self.optima_ids.len()
    }
}

/// Solutions with scaled fitness at least `theta` and nearest-better distance
/// at least `vartheta`; roots have infinite distance.
pub fn identify_optima(
    graph: &NbnGraph,
    theta: f64,
    vartheta: f64,
    scale: FitnessScale,
) -> Result<OptimaReport> {
    let map = scale.mapper(graph.samples())?;
    let optima_ids = graph
        .samples()
        .ids()
        .into_par_iter()
        .filter(|&id| map(graph.fitness(id)) >= theta && graph.nbd(id) >= vartheta)
        .collect();
    Ok(OptimaReport {
        optima_ids,
        theta,
        vartheta,
        scale,
        global_optimum_id: graph.global_best(),
    })
}

pub const DEFAULT_DECEPTION_NBD_MIN: f64 = 10.0;
pub const DEFAULT_DECEPTION_DIST_MAX: f64 = 17.0;

/// Candidate deceptive solutions: isolated (nearest-better distance at least
/// `nbd_min`) yet close to the optimum `o` (distance at most `dist_max`).
/// The optimum itself is not reported.
pub fn deception_filter(
    graph: &NbnGraph,
    o: SolutionId,
    nbd_min: f64,
    dist_max: f64,
) -> Vec<SolutionId> {
    let set = graph.samples();
    set.ids()
        .into_par_iter()
        .filter(|&n| n != o && graph.nbd(n) >= nbd_min && set.distance(n, o) <= dist_max)
        .collect()
}

/// Mean fitness of `around_optimum` minus mean fitness of `around_candidate`.
/// Negative values mean the candidate's neighbourhood is fitter on average.
pub fn mean_fitness_delta(around_optimum: &SampleSet, around_candidate: &SampleSet) -> Result<f64> {
    if around_optimum.len() != around_candidate.len() {
        return Err(Error::Config(format!(
            "sample sets differ in size: {} vs {}",
            around_optimum.len(),
            around_candidate.len()
        )));
    }
    if around_optimum.is_empty() {
        return Err(Error::Config("empty sample sets".into()));
    }
    let mean = |s: &SampleSet| s.fitnesses().iter().sum::<f64>() / s.len() as f64;
    Ok(mean(around_optimum) - mean(around_candidate))
}

/// Distance of one run's solutions to the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDistance {
    pub run_id: u64,
    pub distance: f64,
    pub optimum: SolutionId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: Vec<RunDistance>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// [`set_distance`] per run, with min, max and mean over runs.
pub fn summarize_runs(
    graph: &NbnGraph,
    runs: &BTreeMap<u64, Vec<SolutionId>>,
) -> Result<Option<RunSummary>> {
    let mut out = Vec::with_capacity(runs.len());
    for (&run_id, ids) in runs {
        let sd = set_distance(graph, ids)?;
        out.push(RunDistance {
            run_id,
            distance: sd.distance,
            optimum: sd.optimum,
        });
    }
    if out.is_empty() {
        return Ok(None);
    }
    let ds = out.iter().map(|r| r.distance);
    Ok(Some(RunSummary {
        min: ds.clone().fold(f64::INFINITY, f64::min),
        max: ds.clone().fold(f64::NEG_INFINITY, f64::max),
        mean: ds.sum::<f64>() / out.len() as f64,
        runs: out,
    }))
}
