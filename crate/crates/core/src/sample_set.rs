//! Deduplicated, indexed storage of sampled solutions.

use std::collections::hash_map::{DefaultHasher, Entry};
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{validate, Encoding, Solution, SolutionId};
use crate::problems::Problem;

/// Row storage with a pairwise metric, the hot path of every builder.
pub(crate) trait RowMetric: Sync {
    fn dist(&self, a: SolutionId, b: SolutionId) -> f64;
    /// Value of the variable at dimension `k`.
    fn key(&self, id: SolutionId, k: usize) -> u32;
}

/// Bit strings packed into 64-bit words.
#[derive(Debug, Clone)]
pub(crate) struct BitRows {
    dim: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitRows {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            words: dim.div_ceil(64),
            data: Vec::new(),
        }
    }

    fn row(&self, id: SolutionId) -> &[u64] {
        let start = id as usize * self.words;
        &self.data[start..start + self.words]
    }

    fn pack(&self, values: &[u32]) -> Vec<u64> {
        let mut out = vec![0u64; self.words];
        for (i, &v) in values.iter().enumerate() {
            out[i / 64] |= (v as u64 & 1) << (i % 64);
        }
        out
    }

    fn unpack(&self, id: SolutionId) -> Vec<u32> {
        let row = self.row(id);
        (0..self.dim)
            .map(|i| ((row[i / 64] >> (i % 64)) & 1) as u32)
            .collect()
    }
}

fn popcount_xor(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

impl RowMetric for BitRows {
    #[inline]
    fn dist(&self, a: SolutionId, b: SolutionId) -> f64 {
        popcount_xor(self.row(a), self.row(b)) as f64
    }

    #[inline]
    fn key(&self, id: SolutionId, k: usize) -> u32 {
        ((self.row(id)[k / 64] >> (k % 64)) & 1) as u32
    }
}

/// Tours kept verbatim plus successor/predecessor arrays indexed by city.
#[derive(Debug, Clone)]
pub(crate) struct TourRows {
    dim: usize,
    perm: Vec<u32>,
    succ: Vec<u32>,
    pred: Vec<u32>,
}

impl TourRows {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            perm: Vec::new(),
            succ: Vec::new(),
            pred: Vec::new(),
        }
    }

    fn slice<'a>(&self, v: &'a [u32], id: SolutionId) -> &'a [u32] {
        let start = id as usize * self.dim;
        &v[start..start + self.dim]
    }

    fn links(tour: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let n = tour.len();
        let mut succ = vec![0; n];
        let mut pred = vec![0; n];
        for i in 0..n {
            let (a, b) = (tour[i], tour[(i + 1) % n]);
            succ[a as usize] = b;
            pred[b as usize] = a;
        }
        (succ, pred)
    }

    fn shared(succ_a: &[u32], succ_b: &[u32], pred_b: &[u32]) -> u32 {
        succ_a
            .iter()
            .zip(succ_b.iter().zip(pred_b))
            .filter(|(s, (t, p))| s == t || s == p)
            .count() as u32
    }

    /// Orientation- and rotation-free hash of the cycle.
    fn cycle_hash(succ: &[u32], pred: &[u32]) -> u64 {
        let mut h = DefaultHasher::new();
        let mut prev = 0u32;
        let mut cur = succ[0].min(pred[0]);
        0u32.hash(&mut h);
        for _ in 1..succ.len() {
            cur.hash(&mut h);
            let next = if succ[cur as usize] == prev {
                pred[cur as usize]
            } else {
                succ[cur as usize]
            };
            prev = cur;
            cur = next;
        }
        h.finish()
    }
}

impl RowMetric for TourRows {
    #[inline]
    fn dist(&self, a: SolutionId, b: SolutionId) -> f64 {
        let shared = Self::shared(
            self.slice(&self.succ, a),
            self.slice(&self.succ, b),
            self.slice(&self.pred, b),
        );
        (self.dim as u32 - shared) as f64
    }

    #[inline]
    fn key(&self, id: SolutionId, k: usize) -> u32 {
        self.succ[id as usize * self.dim + k]
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Rows {
    Bits(BitRows),
    Tours(TourRows),
}

/// Immutable collection of distinct solutions of one problem.
///
/// Bit strings are distinct when they differ in any position; tours are
/// distinct when their undirected edge sets differ, so a rotation or
/// reversal of a stored tour maps to the stored id. Tours are kept in the
/// orientation they were first inserted with.
#[derive(Debug, Clone)]
pub struct SampleSet {
    problem: Arc<Problem>,
    encoding: Encoding,
    dim: usize,
    pub(crate) rows: Rows,
    fitness: Vec<f64>,
    index: HashMap<u64, SolutionId>,
    /// Ids whose hash collided with a different stored solution.
    overflow: Vec<SolutionId>,
    tag: u64,
}

impl SampleSet {
    pub fn builder(problem: Arc<Problem>) -> SampleSetBuilder {
        SampleSetBuilder::new(problem)
    }

    /// Builds a set from raw assignments, evaluating and deduplicating them.
    pub fn from_values<I>(problem: Arc<Problem>, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<u32>>,
    {
        let mut b = SampleSetBuilder::new(problem);
        for v in values {
            b.insert(v)?;
        }
        Ok(b.finish())
    }

    pub fn len(&self) -> usize {
        self.fitness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitness.is_empty()
    }

    pub fn problem(&self) -> &Arc<Problem> {
        &self.problem
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fitness(&self, id: SolutionId) -> f64 {
        self.fitness[id as usize]
    }

    pub fn fitnesses(&self) -> &[f64] {
        &self.fitness
    }

    pub fn values(&self, id: SolutionId) -> Vec<u32> {
        match &self.rows {
            Rows::Bits(r) => r.unpack(id),
            Rows::Tours(r) => r.slice(&r.perm, id).to_vec(),
        }
    }

    pub fn solution(&self, id: SolutionId) -> Solution {
        Solution::new(self.values(id), self.fitness(id))
    }

    pub fn ids(&self) -> std::ops::Range<SolutionId> {
        0..self.len() as SolutionId
    }

    /// Metric distance between two stored solutions: bits for binary
    /// problems, unshared edges for tours.
    pub fn distance(&self, a: SolutionId, b: SolutionId) -> f64 {
        match &self.rows {
            Rows::Bits(r) => r.dist(a, b),
            Rows::Tours(r) => r.dist(a, b),
        }
    }

    /// Distance between a stored solution and an arbitrary assignment.
    pub fn distance_to(&self, id: SolutionId, values: &[u32]) -> Result<f64> {
        validate(self.encoding, self.dim, values)?;
        Ok(match &self.rows {
            Rows::Bits(r) => popcount_xor(r.row(id), &r.pack(values)) as f64,
            Rows::Tours(r) => {
                let (succ, pred) = TourRows::links(values);
                let shared = TourRows::shared(r.slice(&r.succ, id), &succ, &pred);
                (self.dim as u32 - shared) as f64
            }
        })
    }

    /// Value of variable `k` for solution `id` (bit, or successor city).
    pub fn domain_value(&self, id: SolutionId, k: usize) -> u32 {
        match &self.rows {
            Rows::Bits(r) => r.key(id, k),
            Rows::Tours(r) => r.key(id, k),
        }
    }

    /// Id of the stored solution equal to `values`, if any.
    pub fn find(&self, values: &[u32]) -> Option<SolutionId> {
        if validate(self.encoding, self.dim, values).is_err() {
            return None;
        }
        let hash = self.hash_values(values);
        let hit = self.index.get(&hash).copied().into_iter();
        hit.chain(self.overflow.iter().copied())
            .find(|&id| self.distance_to(id, values).map(|d| d == 0.0).unwrap_or(false))
    }

    fn hash_values(&self, values: &[u32]) -> u64 {
        match &self.rows {
            Rows::Bits(r) => hash_words(&r.pack(values)),
            Rows::Tours(_) => {
                let (succ, pred) = TourRows::links(values);
                TourRows::cycle_hash(&succ, &pred)
            }
        }
    }

    /// Content hash identifying this exact set (problem, rows, order).
    pub fn tag(&self) -> u64 {
        self.tag
    }

    /// Re-evaluates every stored solution and reports the first mismatch.
    pub fn verify_fitness(&self) -> Result<()> {
        let bad = self.ids().into_par_iter().find_first(|&id| {
            let f = self.problem.evaluate_unchecked(&self.values(id));
            f != self.fitness(id)
        });
        match bad {
            None => Ok(()),
            Some(id) => Err(Error::InvalidSolution(format!(
                "stored fitness of solution {id} differs from evaluation"
            ))),
        }
    }
}

fn hash_words(words: &[u64]) -> u64 {
    let mut h = DefaultHasher::new();
    words.hash(&mut h);
    h.finish()
}

/// Incremental constructor for [`SampleSet`].
#[derive(Debug, Clone)]
pub struct SampleSetBuilder {
    set: SampleSet,
}

impl SampleSetBuilder {
    pub fn new(problem: Arc<Problem>) -> Self {
        let encoding = problem.encoding();
        let dim = problem.dim();
        let rows = match encoding {
            Encoding::Binary => Rows::Bits(BitRows::new(dim)),
            Encoding::Tour => Rows::Tours(TourRows::new(dim)),
        };
        Self {
            set: SampleSet {
                problem,
                encoding,
                dim,
                rows,
                fitness: Vec::new(),
                index: HashMap::new(),
                overflow: Vec::new(),
                tag: 0,
            },
        }
    }

    /// Continues from an existing set; existing ids are preserved.
    pub fn from_set(set: SampleSet) -> Self {
        Self { set }
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn problem(&self) -> &Arc<Problem> {
        &self.set.problem
    }

    /// Validates, evaluates and inserts `values`. Returns the id and whether
    /// the solution was new.
    pub fn insert(&mut self, values: Vec<u32>) -> Result<(SolutionId, bool)> {
        let fitness = self.set.problem.evaluate(&values)?;
        Ok(self.insert_evaluated(values, fitness))
    }

    /// Inserts an assignment whose validity and fitness are already known.
    pub fn insert_evaluated(&mut self, values: Vec<u32>, fitness: f64) -> (SolutionId, bool) {
        if let Some(id) = self.set.find(&values) {
            return (id, false);
        }
        let id = self.set.len() as SolutionId;
        let hash = self.set.hash_values(&values);
        match &mut self.set.rows {
            Rows::Bits(r) => {
                let packed = r.pack(&values);
                r.data.extend_from_slice(&packed);
            }
            Rows::Tours(r) => {
                let (succ, pred) = TourRows::links(&values);
                r.perm.extend_from_slice(&values);
                r.succ.extend_from_slice(&succ);
                r.pred.extend_from_slice(&pred);
            }
        }
        self.set.fitness.push(fitness);
        match self.set.index.entry(hash) {
            Entry::Vacant(e) => {
                e.insert(id);
            }
            Entry::Occupied(_) => self.set.overflow.push(id),
        }
        (id, true)
    }

    pub fn contains(&self, values: &[u32]) -> bool {
        self.set.find(values).is_some()
    }

    pub fn finish(mut self) -> SampleSet {
        let mut h = DefaultHasher::new();
        self.set.problem.fingerprint().hash(&mut h);
        self.set.len().hash(&mut h);
        for f in &self.set.fitness {
            f.to_bits().hash(&mut h);
        }
        match &self.set.rows {
            Rows::Bits(r) => r.data.hash(&mut h),
            Rows::Tours(r) => r.perm.hash(&mut h),
        }
        self.set.tag = h.finish();
        self.set
    }
}
