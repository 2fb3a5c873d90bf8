//! Versioned binary containers for sample sets and graphs.
//!
//! Layout, all integers little endian:
//!
//! ```text
//! magic[8] version:u16 flags:u16
//! problem_json_len:u32 problem_json fingerprint[32]
//! dim:u32 count:u64 rows...
//! [center row]            if flags & CENTER
//! [runs: count:u64 (id:u32 run:u64 iteration:u64)*]  if flags & RUNS
//! sha256[32]              over everything before it
//! ```
//!
//! A row is the fitness as `f64` followed by the packed bits (`u64` words)
//! or the tour (`u32` per city).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::trajectory::RunIndex;
use crate::builder::{BetaTable, Link};
use crate::error::{Error, Result};
use crate::graph::NbnGraph;
use crate::model::{validate, Encoding, SolutionId};
use crate::problems::Problem;
use crate::sample_set::SampleSet;

const SAMPLE_MAGIC: &[u8; 8] = b"NBNSAMPL";
const GRAPH_MAGIC: &[u8; 8] = b"NBNGRAPH";
const VERSION: u16 = 1;
const FLAG_CENTER: u16 = 1;
const FLAG_RUNS: u16 = 2;
const NO_PARENT: u32 = u32::MAX;

struct HashingWriter<W> {
    inner: W,
    hash: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hash.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

struct HashingReader<R> {
    inner: R,
    hash: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hash.update(&buf[..n]);
        Ok(n)
    }
}

fn finish_hash<W: Write>(w: HashingWriter<W>) -> Result<W> {
    let HashingWriter { mut inner, hash } = w;
    inner.write_all(&hash.finalize())?;
    inner.flush()?;
    Ok(inner)
}

fn check_hash<R: Read>(r: HashingReader<R>) -> Result<()> {
    let HashingReader { mut inner, hash } = r;
    let expected = hash.finalize();
    let mut stored = [0u8; 32];
    inner.read_exact(&mut stored).map_err(truncated)?;
    if stored[..] != expected[..] {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }
    let mut rest = [0u8; 1];
    if inner.read(&mut rest)? != 0 {
        return Err(Error::Corrupt("trailing bytes after checksum".into()));
    }
    Ok(())
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Corrupt("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

/// Content digest of a sample set that is stable across builds: problem
/// fingerprint, then fitness and values of every solution in id order.
pub fn sample_digest(set: &SampleSet) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(set.problem().fingerprint());
    h.update((set.len() as u64).to_le_bytes());
    for id in set.ids() {
        h.update(set.fitness(id).to_bits().to_le_bytes());
        for v in set.values(id) {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().into()
}

/// A sample set with what travels alongside it on disk.
#[derive(Debug, Clone)]
pub struct StoredSamples {
    pub set: SampleSet,
    /// Center of a local sample.
    pub center: Option<Vec<u32>>,
    pub runs: Option<RunIndex>,
}

fn write_row<W: Write>(w: &mut W, encoding: Encoding, values: &[u32]) -> Result<()> {
    match encoding {
        Encoding::Binary => {
            for chunk in values.chunks(64) {
                let mut word = 0u64;
                for (i, &b) in chunk.iter().enumerate() {
                    word |= (b as u64) << i;
                }
                w.write_u64::<LE>(word)?;
            }
        }
        Encoding::Tour => {
            for &v in values {
                w.write_u32::<LE>(v)?;
            }
        }
    }
    Ok(())
}

fn read_row<R: Read>(r: &mut R, encoding: Encoding, dim: usize) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(dim);
    match encoding {
        Encoding::Binary => {
            while out.len() < dim {
                let word = r.read_u64::<LE>().map_err(truncated)?;
                let take = (dim - out.len()).min(64);
                out.extend((0..take).map(|i| ((word >> i) & 1) as u32));
            }
        }
        Encoding::Tour => {
            for _ in 0..dim {
                out.push(r.read_u32::<LE>().map_err(truncated)?);
            }
        }
    }
    Ok(out)
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 8], flags: u16, problem: &Problem) -> Result<()> {
    w.write_all(magic)?;
    w.write_u16::<LE>(VERSION)?;
    w.write_u16::<LE>(flags)?;
    let json = serde_json::to_vec(problem)?;
    w.write_u32::<LE>(json.len() as u32)?;
    w.write_all(&json)?;
    w.write_all(&problem.fingerprint())?;
    Ok(())
}

fn read_header<R: Read>(
    r: &mut R,
    magic: &[u8; 8],
    expected: Option<&Problem>,
) -> Result<(u16, Problem)> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m).map_err(truncated)?;
    if &m != magic {
        return Err(Error::Corrupt("unrecognized file type".into()));
    }
    let version = r.read_u16::<LE>().map_err(truncated)?;
    if version != VERSION {
        return Err(Error::Corrupt(format!("unsupported version {version}")));
    }
    let flags = r.read_u16::<LE>().map_err(truncated)?;
    let len = r.read_u32::<LE>().map_err(truncated)? as usize;
    if len > 1 << 30 {
        return Err(Error::Corrupt("implausible problem header".into()));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(truncated)?;
    let mut fp = [0u8; 32];
    r.read_exact(&mut fp).map_err(truncated)?;
    let problem: Problem =
        serde_json::from_slice(&json).map_err(|e| Error::Corrupt(format!("problem header: {e}")))?;
    if problem.fingerprint() != fp {
        return Err(Error::Corrupt("problem fingerprint does not match its definition".into()));
    }
    if let Some(p) = expected {
        if p.fingerprint() != fp {
            return Err(Error::ProblemMismatch);
        }
    }
    Ok((flags, problem))
}

pub fn write_samples<W: Write>(
    w: W,
    set: &SampleSet,
    center: Option<&[u32]>,
    runs: Option<&RunIndex>,
) -> Result<W> {
    let mut w = HashingWriter {
        inner: w,
        hash: Sha256::new(),
    };
    let flags = if center.is_some() { FLAG_CENTER } else { 0 } | if runs.is_some() { FLAG_RUNS } else { 0 };
    write_header(&mut w, SAMPLE_MAGIC, flags, set.problem())?;
    let enc = set.encoding();
    w.write_u32::<LE>(set.dim() as u32)?;
    w.write_u64::<LE>(set.len() as u64)?;
    for id in set.ids() {
        w.write_f64::<LE>(set.fitness(id))?;
        write_row(&mut w, enc, &set.values(id))?;
    }
    if let Some(c) = center {
        validate(enc, set.dim(), c)?;
        write_row(&mut w, enc, c)?;
    }
    if let Some(runs) = runs {
        let labels = runs.labels();
        w.write_u64::<LE>(labels.len() as u64)?;
        for (id, run, iteration) in labels {
            w.write_u32::<LE>(id)?;
            w.write_u64::<LE>(run)?;
            w.write_u64::<LE>(iteration)?;
        }
    }
    finish_hash(w)
}

/// Reads a sample container. With `expected`, the stored problem must have
/// the same fingerprint. Stored fitness values are checked against a fresh
/// evaluation.
pub fn read_samples<R: Read>(r: R, expected: Option<&Problem>) -> Result<StoredSamples> {
    let mut r = HashingReader {
        inner: r,
        hash: Sha256::new(),
    };
    let (flags, problem) = read_header(&mut r, SAMPLE_MAGIC, expected)?;
    let problem = Arc::new(problem);
    let enc = problem.encoding();
    let dim = r.read_u32::<LE>().map_err(truncated)? as usize;
    if dim != problem.dim() {
        return Err(Error::Corrupt(format!(
            "row width {dim} does not match problem dimension {}",
            problem.dim()
        )));
    }
    let count = r.read_u64::<LE>().map_err(truncated)?;
    if count > u32::MAX as u64 {
        return Err(Error::Corrupt(format!("implausible sample count {count}")));
    }
    let mut rows = Vec::with_capacity((count as usize).min(1 << 20));
    for _ in 0..count {
        let f = r.read_f64::<LE>().map_err(truncated)?;
        rows.push((read_row(&mut r, enc, dim)?, f));
    }
    let bad = rows.par_iter().position_first(|(v, f)| match problem.evaluate(v) {
        Ok(g) => g.to_bits() != f.to_bits(),
        Err(_) => true,
    });
    if let Some(i) = bad {
        return Err(Error::Corrupt(format!("row {i} is invalid or has a wrong fitness")));
    }
    let mut b = SampleSet::builder(problem.clone());
    for (v, f) in rows {
        if !b.insert_evaluated(v, f).1 {
            return Err(Error::Corrupt("duplicate solution".into()));
        }
    }
    let set = b.finish();
    let center = if flags & FLAG_CENTER != 0 {
        let c = read_row(&mut r, enc, dim)?;
        validate(enc, dim, &c).map_err(|e| Error::Corrupt(format!("center: {e}")))?;
        Some(c)
    } else {
        None
    };
    let runs = if flags & FLAG_RUNS != 0 {
        let n = r.read_u64::<LE>().map_err(truncated)?;
        let mut idx = RunIndex::default();
        for _ in 0..n {
            let id = r.read_u32::<LE>().map_err(truncated)?;
            let run = r.read_u64::<LE>().map_err(truncated)?;
            let it = r.read_u64::<LE>().map_err(truncated)?;
            if id as usize >= set.len() {
                return Err(Error::Corrupt(format!("run label for missing solution {id}")));
            }
            idx.add(id, run, it);
        }
        Some(idx)
    } else {
        None
    };
    check_hash(r)?;
    Ok(StoredSamples { set, center, runs })
}

pub fn save_samples(
    path: impl AsRef<Path>,
    set: &SampleSet,
    center: Option<&[u32]>,
    runs: Option<&RunIndex>,
) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    write_samples(f, set, center, runs)?;
    Ok(())
}

pub fn load_samples(path: impl AsRef<Path>, expected: Option<&Problem>) -> Result<StoredSamples> {
    read_samples(BufReader::new(File::open(path)?), expected)
}

/// Writes the links of `graph` keyed to the digest of its samples.
pub fn write_graph<W: Write>(w: W, graph: &NbnGraph) -> Result<W> {
    let mut w = HashingWriter {
        inner: w,
        hash: Sha256::new(),
    };
    let set = graph.samples();
    write_header(&mut w, GRAPH_MAGIC, 0, set.problem())?;
    w.write_all(&sample_digest(set))?;
    w.write_u64::<LE>(graph.len() as u64)?;
    for link in graph.links() {
        match link {
            None => {
                w.write_u32::<LE>(NO_PARENT)?;
                w.write_f64::<LE>(f64::INFINITY)?;
            }
            Some(l) => {
                w.write_u32::<LE>(l.parent)?;
                w.write_f64::<LE>(l.distance)?;
            }
        }
    }
    finish_hash(w)
}

/// Reads a graph for `samples`; fails when the file was written for a
/// different sample set or when any link is unsound.
pub fn read_graph<R: Read>(r: R, samples: Arc<SampleSet>) -> Result<NbnGraph> {
    let mut r = HashingReader {
        inner: r,
        hash: Sha256::new(),
    };
    read_header(&mut r, GRAPH_MAGIC, Some(samples.problem()))?;
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest).map_err(truncated)?;
    if digest != sample_digest(&samples) {
        return Err(Error::SampleSetMismatch);
    }
    let n = r.read_u64::<LE>().map_err(truncated)?;
    if n != samples.len() as u64 {
        return Err(Error::SampleSetMismatch);
    }
    let mut table = BetaTable::empty(&samples);
    for id in 0..n as SolutionId {
        let parent = r.read_u32::<LE>().map_err(truncated)?;
        let distance = r.read_f64::<LE>().map_err(truncated)?;
        if parent != NO_PARENT {
            if parent as u64 >= n {
                return Err(Error::Corrupt(format!("link {id} -> {parent} out of range")));
            }
            table.offer(id, parent, distance);
        }
    }
    check_hash(r)?;
    debug_assert!(table.links().iter().flatten().all(|l: &Link| l.distance.is_finite()));
    NbnGraph::new(samples, table)
}

pub fn save_graph(path: impl AsRef<Path>, graph: &NbnGraph) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    write_graph(f, graph)?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>, samples: Arc<SampleSet>) -> Result<NbnGraph> {
    read_graph(BufReader::new(File::open(path)?), samples)
}
