//! Per-node exports of a network as CSV, JSON lines or Graphviz DOT.

use std::collections::HashSet;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::layout::LayoutPoint;
use super::trajectory::RunIndex;
use crate::error::{Error, Result};
use crate::graph::NbnGraph;
use crate::model::SolutionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Jsonl,
    Dot,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            "dot" => Ok(Self::Dot),
            _ => Err(Error::Config(format!("unknown export format `{s}`"))),
        }
    }
}

/// Optional per-node labels added to an export.
#[derive(Debug, Clone, Copy, Default)]
pub struct Annotations<'a> {
    pub optima: Option<&'a [SolutionId]>,
    pub deceptive: Option<&'a [SolutionId]>,
    pub runs: Option<&'a RunIndex>,
    pub layout: Option<&'a [LayoutPoint]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: SolutionId,
    pub fitness: f64,
    /// Absent for roots.
    pub nbd: Option<f64>,
    pub parent: Option<SolutionId>,
    pub optimum: bool,
    pub deceptive: bool,
    /// `(run, iteration)` labels.
    pub runs: Vec<(u64, u64)>,
    pub x: Option<f64>,
    pub z: Option<f64>,
    pub side_x: Option<f64>,
}

#[derive(Serialize)]
struct CsvRow {
    id: SolutionId,
    fitness: f64,
    nbd: Option<f64>,
    parent: Option<SolutionId>,
    optimum: u8,
    deceptive: u8,
    runs: String,
    x: Option<f64>,
    z: Option<f64>,
    side_x: Option<f64>,
}

impl From<NodeRecord> for CsvRow {
    fn from(r: NodeRecord) -> Self {
        Self {
            id: r.id,
            fitness: r.fitness,
            nbd: r.nbd,
            parent: r.parent,
            optimum: r.optimum as u8,
            deceptive: r.deceptive as u8,
            runs: r
                .runs
                .iter()
                .map(|(run, it)| format!("{run}:{it}"))
                .collect::<Vec<_>>()
                .join(";"),
            x: r.x,
            z: r.z,
            side_x: r.side_x,
        }
    }
}

/// One record per node, in id order.
pub fn node_records(graph: &NbnGraph, ann: &Annotations) -> Vec<NodeRecord> {
    let optima: HashSet<SolutionId> = ann.optima.unwrap_or(&[]).iter().copied().collect();
    let deceptive: HashSet<SolutionId> = ann.deceptive.unwrap_or(&[]).iter().copied().collect();
    graph
        .samples()
        .ids()
        .map(|id| {
            let point = ann.layout.and_then(|l| l.get(id as usize));
            NodeRecord {
                id,
                fitness: graph.fitness(id),
                nbd: graph.link(id).map(|l| l.distance),
                parent: graph.parent(id),
                optimum: optima.contains(&id),
                deceptive: deceptive.contains(&id),
                runs: ann.runs.map(|r| r.labels_of(id)).unwrap_or_default(),
                x: point.map(|p| p.x),
                z: point.map(|p| p.z),
                side_x: point.map(|p| p.side_x),
            }
        })
        .collect()
}

pub fn export_graph<W: Write>(
    graph: &NbnGraph,
    format: ExportFormat,
    ann: &Annotations,
    mut out: W,
) -> Result<W> {
    if let Some(l) = ann.layout {
        if l.len() != graph.len() {
            return Err(Error::Config("layout does not match the graph".into()));
        }
    }
    let records = node_records(graph, ann);
    match format {
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(CsvRow::from(r))
                    .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            }
            out = w
                .into_inner()
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        }
        ExportFormat::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut out, &r)?;
                out.write_all(b"\n")?;
            }
        }
        ExportFormat::Dot => {
            writeln!(out, "digraph nbn {{")?;
            for r in &records {
                let mut attrs = format!("fitness={}", r.fitness);
                if r.optimum {
                    attrs.push_str(", shape=doublecircle");
                }
                if r.deceptive {
                    attrs.push_str(", color=red");
                }
                if let (Some(x), Some(h)) = (r.side_x, Some(r.fitness)) {
                    attrs.push_str(&format!(", pos=\"{x},{h}\""));
                }
                writeln!(out, "  {} [{attrs}];", r.id)?;
            }
            for r in &records {
                if let (Some(p), Some(d)) = (r.parent, r.nbd) {
                    writeln!(out, "  {} -> {p} [nbd={d}];", r.id)?;
                }
            }
            writeln!(out, "}}")?;
        }
    }
    out.flush()?;
    Ok(out)
}
