//! Search trajectories of external optimizers.
//!
//! One record per line, whitespace separated:
//!
//! ```text
//! run_id iteration [fitness] v1 v2 ... vD
//! ```
//!
//! Bit strings use 0/1, tours list cities 1-based as in TSPLIB. The fitness
//! column is optional; when present it must agree with the evaluation.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Encoding, SolutionId};
use crate::problems::Problem;
use crate::sample_set::{SampleSet, SampleSetBuilder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub run_id: u64,
    pub iteration: u64,
    pub values: Vec<u32>,
    pub fitness: Option<f64>,
}

/// Run and iteration labels of solutions in a sample set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunIndex {
    labels: BTreeSet<(SolutionId, u64, u64)>,
}

impl RunIndex {
    pub fn add(&mut self, id: SolutionId, run_id: u64, iteration: u64) {
        self.labels.insert((id, run_id, iteration));
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(id, run, iteration)` triples ordered by id.
    pub fn labels(&self) -> Vec<(SolutionId, u64, u64)> {
        self.labels.iter().copied().collect()
    }

    pub fn labels_of(&self, id: SolutionId) -> Vec<(u64, u64)> {
        self.labels
            .range((id, 0, 0)..=(id, u64::MAX, u64::MAX))
            .map(|&(_, r, i)| (r, i))
            .collect()
    }

    /// Distinct solution ids per run, ascending.
    pub fn runs(&self) -> BTreeMap<u64, Vec<SolutionId>> {
        let mut out: BTreeMap<u64, Vec<SolutionId>> = BTreeMap::new();
        for &(id, run, _) in &self.labels {
            let ids = out.entry(run).or_default();
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        out
    }

    pub fn run_count(&self) -> usize {
        self.labels.iter().map(|l| l.1).collect::<BTreeSet<_>>().len()
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

/// Parses trajectory text for `problem`. Line numbers in errors are 1-based.
pub fn parse_trajectories(text: &str, problem: &Problem) -> Result<Vec<TrajectoryRecord>> {
    let dim = problem.dim();
    let tour = problem.encoding() == Encoding::Tour;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        let has_fitness = match toks.len() {
            n if n == dim + 2 => false,
            n if n == dim + 3 => true,
            n => {
                return Err(Error::parse(
                    line,
                    format!("expected {} or {} fields, found {n}", dim + 2, dim + 3),
                ))
            }
        };
        let run_id = parse_num(toks[0], line, "run id")?;
        let iteration = parse_num(toks[1], line, "iteration")?;
        let fitness = if has_fitness {
            Some(parse_num::<f64>(toks[2], line, "fitness")?)
        } else {
            None
        };
        let first = if has_fitness { 3 } else { 2 };
        let mut values = Vec::with_capacity(dim);
        for t in &toks[first..] {
            let v: u32 = parse_num(t, line, "value")?;
            if tour {
                if v == 0 {
                    return Err(Error::parse(line, "cities are numbered from 1"));
                }
                values.push(v - 1);
            } else {
                values.push(v);
            }
        }
        out.push(TrajectoryRecord {
            run_id,
            iteration,
            values,
            fitness,
        });
    }
    Ok(out)
}

/// One record in the text format.
pub fn format_record(problem: &Problem, rec: &TrajectoryRecord) -> String {
    let shift = (problem.encoding() == Encoding::Tour) as u32;
    let mut s = format!("{} {}", rec.run_id, rec.iteration);
    if let Some(f) = rec.fitness {
        write!(s, " {f}").unwrap();
    }
    for v in &rec.values {
        write!(s, " {}", v + shift).unwrap();
    }
    s
}

/// Merges records into `base`. Solutions already present keep their ids;
/// new ones are appended. Every record adds its run label.
pub fn ingest_records(
    base: &SampleSet,
    records: &[TrajectoryRecord],
) -> Result<(SampleSet, RunIndex)> {
    let problem = base.problem().clone();
    let mut b = SampleSetBuilder::from_set(base.clone());
    let mut runs = RunIndex::default();
    for (n, rec) in records.iter().enumerate() {
        let f = problem
            .evaluate(&rec.values)
            .map_err(|e| Error::InvalidSolution(format!("record {}: {e}", n + 1)))?;
        if let Some(given) = rec.fitness {
            if (given - f).abs() > 1e-9 * f.abs().max(1.0) {
                return Err(Error::InvalidSolution(format!(
                    "record {}: stated fitness {given} but evaluation gives {f}",
                    n + 1
                )));
            }
        }
        let (id, _) = b.insert_evaluated(rec.values.clone(), f);
        runs.add(id, rec.run_id, rec.iteration);
    }
    Ok((b.finish(), runs))
}

/// Reads a trajectory file and merges it into `base`.
pub fn ingest_trajectories(
    path: impl AsRef<Path>,
    base: &SampleSet,
) -> Result<(SampleSet, RunIndex)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let records = parse_trajectories(&text, base.problem())?;
    if records.is_empty() {
        warn!("no trajectory records in {}", path.display());
    }
    ingest_records(base, &records)
}
