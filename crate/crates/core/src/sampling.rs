//! Global and local random sampling of a problem's search space.

use std::sync::Arc;

use log::warn;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, Encoding};
use crate::problems::Problem;
use crate::sample_set::{SampleSet, SampleSetBuilder};

/// Candidates drawn per RNG stream.
const CHUNK: usize = 256;
/// Draw budget per requested sample before the request is capped.
const RETRY_FACTOR: usize = 50;

/// How the distance of a binary local sample from the center is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalStrategy {
    /// Number of flipped bits uniform in `0..=K`.
    #[default]
    UniformRadius,
    /// Uniform over the whole Hamming ball, so larger radii dominate.
    UniformBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SampleMode {
    Global,
    Local {
        center: Vec<u32>,
        radius: usize,
        #[serde(default)]
        strategy: LocalStrategy,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    #[serde(flatten)]
    pub mode: SampleMode,
    pub n: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("need at least 2 samples, got {}", self.n)));
        }
        if let SampleMode::Local { radius, .. } = self.mode {
            if radius < 1 {
                return Err(Error::Config("local sampling needs a radius of at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn sample(&self, problem: &Arc<Problem>) -> Result<SampleSet> {
        self.validate()?;
        match &self.mode {
            SampleMode::Global => sample_global(problem, self.n, self.seed),
            SampleMode::Local {
                center,
                radius,
                strategy,
            } => sample_local(problem, center, *radius, self.n, self.seed, *strategy),
        }
    }
}

/// `n` distinct uniformly drawn solutions. Requests beyond the size of the
/// space are capped with a warning.
pub fn sample_global(problem: &Arc<Problem>, n: usize, seed: u64) -> Result<SampleSet> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 samples, got {n}")));
    }
    let space = problem.search_space_size();
    let mut target = n;
    if n as f64 > space {
        warn!("requested {n} samples but the space holds only {space}; capping");
        target = space as usize;
    }
    let mut builder = SampleSet::builder(problem.clone());
    let dim = problem.dim();
    // Exhaustive requests on small cubes are enumerated directly.
    if problem.encoding() == Encoding::Binary && target as f64 == space && dim < 32 {
        for x in 0..(1u64 << dim) {
            builder.insert((0..dim).map(|i| ((x >> i) & 1) as u32).collect())?;
        }
        return Ok(builder.finish());
    }
    let draw: Box<dyn Fn(&mut ChaCha8Rng) -> Vec<u32> + Sync> = match problem.encoding() {
        Encoding::Binary => Box::new(move |rng| random_bits(rng, dim)),
        Encoding::Tour => Box::new(move |rng| {
            let mut t: Vec<u32> = (0..dim as u32).collect();
            t.shuffle(rng);
            t
        }),
    };
    fill(&mut builder, target, seed, &*draw);
    Ok(builder.finish())
}

fn random_bits(rng: &mut ChaCha8Rng, dim: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(dim);
    while out.len() < dim {
        let w: u64 = rng.gen();
        let take = (dim - out.len()).min(64);
        out.extend((0..take).map(|i| ((w >> i) & 1) as u32));
    }
    out
}

/// Up to `n` distinct solutions within distance `radius` of `center`,
/// always including the center itself as id 0.
///
/// Binary solutions flip a random set of bits. Tours start from the center
/// and apply random 2-opt moves, each accepted only while the number of
/// edges not shared with the center stays within a per-sample target drawn
/// uniformly from `0..=radius`. Every sample is checked against the radius
/// before insertion.
pub fn sample_local(
    problem: &Arc<Problem>,
    center: &[u32],
    radius: usize,
    n: usize,
    seed: u64,
    strategy: LocalStrategy,
) -> Result<SampleSet> {
    validate(problem.encoding(), problem.dim(), center)?;
    if n < 1 {
        return Err(Error::Config("need at least 1 sample".into()));
    }
    let mut builder = SampleSet::builder(problem.clone());
    builder.insert(center.to_vec())?;
    let dim = problem.dim();
    let radius = radius.min(dim);
    let mut target = n;
    if radius == 0 {
        if n > 1 {
            warn!("radius 0 holds only the center; capping {n} samples to 1");
        }
        return Ok(builder.finish());
    }
    match problem.encoding() {
        Encoding::Binary => {
            let ball = hamming_ball_size(dim, radius);
            if n as f64 > ball {
                warn!("radius {radius} ball holds only {ball} solutions; capping");
                target = ball as usize;
            }
            let flips = match strategy {
                LocalStrategy::UniformRadius => None,
                LocalStrategy::UniformBall => Some(ball_radius_weights(dim, radius)),
            };
            let draw = |rng: &mut ChaCha8Rng| {
                let j = match &flips {
                    None => rng.gen_range(0..=radius),
                    Some(w) => w.sample(rng),
                };
                let mut v = center.to_vec();
                for i in rand::seq::index::sample(rng, dim, j) {
                    v[i] ^= 1;
                }
                v
            };
            fill(&mut builder, target, seed, &draw);
        }
        Encoding::Tour => {
            let walk = TourWalk::new(center);
            let draw = |rng: &mut ChaCha8Rng| {
                let goal = rng.gen_range(0..=radius);
                walk.sample(rng, goal, radius)
            };
            fill(&mut builder, target, seed, &draw);
        }
    }
    let set = builder.finish();
    for id in set.ids() {
        let d = set.distance_to(id, center)?;
        if d > radius as f64 {
            return Err(Error::Invariant(format!(
                "sample {id} lies at distance {d} beyond radius {radius}"
            )));
        }
    }
    Ok(set)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

fn hamming_ball_size(dim: usize, radius: usize) -> f64 {
    (0..=radius).map(|j| ln_choose(dim, j).exp()).sum::<f64>().round()
}

fn ball_radius_weights(dim: usize, radius: usize) -> WeightedIndex<f64> {
    let logs: Vec<f64> = (0..=radius).map(|j| ln_choose(dim, j)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    WeightedIndex::new(logs.iter().map(|l| (l - top).exp())).expect("positive weights")
}

/// Random 2-opt walk away from a center tour with the number of unshared
/// edges tracked incrementally.
struct TourWalk {
    center: Vec<u32>,
    succ: Vec<u32>,
    pred: Vec<u32>,
}

impl TourWalk {
    fn new(center: &[u32]) -> Self {
        let n = center.len();
        let mut succ = vec![0; n];
        let mut pred = vec![0; n];
        for i in 0..n {
            let (a, b) = (center[i], center[(i + 1) % n]);
            succ[a as usize] = b;
            pred[b as usize] = a;
        }
        Self {
            center: center.to_vec(),
            succ,
            pred,
        }
    }

    fn in_center(&self, a: u32, b: u32) -> bool {
        self.succ[a as usize] == b || self.pred[a as usize] == b
    }

    fn sample(&self, rng: &mut ChaCha8Rng, goal: usize, radius: usize) -> Vec<u32> {
        let n = self.center.len();
        let mut tour = self.center.clone();
        let mut unshared = 0usize;
        let budget = 4 * goal + 32;
        for _ in 0..budget {
            if unshared + 1 >= goal {
                break;
            }
            // Remove edges (t[i], t[i+1]) and (t[j], t[j+1]), reconnect as
            // (t[i], t[j]) and (t[i+1], t[j+1]).
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let (i, j) = (i.min(j), i.max(j));
            if j - i < 2 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a, b) = (tour[i], tour[i + 1]);
            let (c, d) = (tour[j], tour[(j + 1) % n]);
            let removed = self.in_center(a, b) as isize + self.in_center(c, d) as isize;
            let added = self.in_center(a, c) as isize + self.in_center(b, d) as isize;
            let next = unshared as isize + removed - added;
            if next < 0 || next as usize > goal.min(radius) {
                continue;
            }
            reverse_shorter(&mut tour, i + 1, j);
            unshared = next as usize;
        }
        tour
    }
}

/// Reverses positions `lo..=hi` or, when shorter, the complementary arc;
/// both give the same cycle.
fn reverse_shorter(tour: &mut [u32], lo: usize, hi: usize) {
    let n = tour.len();
    let inner = hi - lo + 1;
    if inner <= n - inner {
        tour[lo..=hi].reverse();
    } else {
        let (mut a, mut b) = ((hi + 1) % n, (lo + n - 1) % n);
        for _ in 0..(n - inner) / 2 {
            tour.swap(a, b);
            a = (a + 1) % n;
            b = (b + n - 1) % n;
        }
    }
}

/// Draws candidates in fixed-size chunks, one RNG stream per chunk, and
/// inserts them in stream order until `target` distinct solutions exist or
/// the draw budget runs out. The result does not depend on thread count.
fn fill<F>(builder: &mut SampleSetBuilder, target: usize, seed: u64, draw: &F)
where
    F: Fn(&mut ChaCha8Rng) -> Vec<u32> + Sync + ?Sized,
{
    let problem = builder.problem().clone();
    let budget = RETRY_FACTOR * target.max(1);
    let mut drawn = 0usize;
    let mut stream = 0u64;
    while builder.len() < target && drawn < budget {
        let need = (target - builder.len()).min(budget - drawn);
        let chunks = need.div_ceil(CHUNK);
        let first = stream;
        let batch: Vec<(Vec<u32>, f64)> = (0..chunks as u64)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(first + c);
                let take = CHUNK.min(need - c as usize * CHUNK);
                let problem = &problem;
                (0..take).map(move |_| {
                    let v = draw(&mut rng);
                    let f = problem.evaluate_unchecked(&v);
                    (v, f)
                })
            })
            .collect();
        stream += chunks as u64;
        drawn += batch.len();
        for (v, f) in batch {
            if builder.len() >= target {
                break;
            }
            builder.insert_evaluated(v, f);
        }
    }
    if builder.len() < target {
        warn!(
            "only {} distinct solutions after {drawn} draws; capping request of {target}",
            builder.len()
        );
    }
}
