//! Evaluatable problem instances.
//!
//! All problems are maximized. Tours score the negated tour length.

mod peaks;
mod tsp;
mod wmodel;

pub use peaks::{Peak, Peaks};
pub use tsp::{generate_rue, parse_tsplib, TspInstance, RUE_DEFAULT_EXTENT};
pub use wmodel::{WModel, WModelParams};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::model::{validate, Encoding, VariableDomain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneMax {
    pub n_bits: usize,
    /// When set, adds a deterministic per-string offset in `[0, 0.5)` so that
    /// no two distinct strings tie while the popcount order is preserved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_seed: Option<u64>,
}

impl OneMax {
    fn evaluate(&self, bits: &[u32]) -> f64 {
        let ones = bits.iter().filter(|&&b| b == 1).count() as f64;
        match self.jitter_seed {
            None => ones,
            Some(seed) => ones + jitter(seed, bits),
        }
    }
}

fn jitter(seed: u64, bits: &[u32]) -> f64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for chunk in bits.chunks(64) {
        let mut w = 0u64;
        for (i, &b) in chunk.iter().enumerate() {
            w |= (b as u64) << i;
        }
        h = splitmix(h ^ w);
    }
    // 52 random mantissa bits scaled into [0, 0.5).
    (h >> 12) as f64 / (1u64 << 53) as f64
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    OneMax,
    WModel,
    Peaks,
    Tsp,
}

/// A problem definition that can score assignment vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    OneMax(OneMax),
    WModel(WModel),
    Peaks(Peaks),
    Tsp(TspInstance),
}

impl Problem {
    pub fn onemax(n_bits: usize) -> Self {
        Problem::OneMax(OneMax {
            n_bits,
            jitter_seed: None,
        })
    }

    /// OneMax with a tie-free deterministic perturbation of the fitness.
    pub fn onemax_jittered(n_bits: usize, seed: u64) -> Self {
        Problem::OneMax(OneMax {
            n_bits,
            jitter_seed: Some(seed),
        })
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::OneMax(_) => ProblemKind::OneMax,
            Problem::WModel(_) => ProblemKind::WModel,
            Problem::Peaks(_) => ProblemKind::Peaks,
            Problem::Tsp(_) => ProblemKind::Tsp,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::OneMax(p) => p.n_bits,
            Problem::WModel(w) => w.params().n_bits,
            Problem::Peaks(p) => p.n_bits(),
            Problem::Tsp(t) => t.dim(),
        }
    }

    pub fn encoding(&self) -> Encoding {
        match self {
            Problem::OneMax(_) | Problem::WModel(_) | Problem::Peaks(_) => Encoding::Binary,
            Problem::Tsp(_) => Encoding::Tour,
        }
    }

    pub fn domains(&self) -> Vec<VariableDomain> {
        let d = self.dim();
        match self.encoding() {
            Encoding::Binary => (0..d).map(VariableDomain::binary).collect(),
            Encoding::Tour => (0..d).map(|i| VariableDomain::successor(i, d)).collect(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Problem::OneMax(p) => format!("onemax-{}", p.n_bits),
            Problem::WModel(w) => {
                let p = w.params();
                format!(
                    "wmodel-{}-g{}-m{}-u{}",
                    p.n_bits, p.gamma, p.mu, p.upsilon
                )
            }
            Problem::Peaks(p) => format!("peaks-{}-{}", p.n_bits(), p.peaks().len()),
            Problem::Tsp(t) => t.name.clone(),
        }
    }

    /// Validates `values` and returns its fitness.
    pub fn evaluate(&self, values: &[u32]) -> Result<f64> {
        validate(self.encoding(), self.dim(), values)?;
        Ok(self.evaluate_unchecked(values))
    }

    /// Fitness of an assignment already known to be valid.
    pub fn evaluate_unchecked(&self, values: &[u32]) -> f64 {
        match self {
            Problem::OneMax(p) => p.evaluate(values),
            Problem::WModel(w) => w.evaluate_unchecked(values),
            Problem::Peaks(p) => p.evaluate_unchecked(values),
            Problem::Tsp(t) => -(t.tour_length(values) as f64),
        }
    }

    /// A known global optimum, when the problem has a closed form for it.
    pub fn optimum(&self) -> Option<Vec<u32>> {
        match self {
            Problem::OneMax(_) => Some(vec![1; self.dim()]),
            Problem::WModel(w) => Some(w.optimum()),
            Problem::Peaks(p) => Some(p.optimum()),
            Problem::Tsp(_) => None,
        }
    }

    /// Best attainable fitness, when known in closed form.
    pub fn max_fitness(&self) -> Option<f64> {
        match self {
            Problem::OneMax(p) => p.jitter_seed.is_none().then_some(p.n_bits as f64),
            Problem::WModel(w) => Some(w.reduced_len() as f64),
            Problem::Peaks(p) => Some(p.max_fitness()),
            Problem::Tsp(_) => None,
        }
    }

    /// Number of distinct solutions (tours counted by undirected edge set).
    /// Saturates to infinity for large spaces.
    pub fn search_space_size(&self) -> f64 {
        let d = self.dim();
        match self.encoding() {
            Encoding::Binary => 2f64.powi(d as i32),
            Encoding::Tour => {
                if d <= 3 {
                    1.0
                } else {
                    (2..d).map(|k| k as f64).product::<f64>() / 2.0
                }
            }
        }
    }

    /// SHA-256 over the canonical JSON form of the definition.
    pub fn fingerprint(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("problem serializes");
        Sha256::digest(&json).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn onemax_examples() {
        let p = Problem::onemax(4);
        assert_eq!(p.evaluate(&[1, 1, 1, 1]).unwrap(), 4.0);
        assert_eq!(p.evaluate(&[0, 0, 0, 0]).unwrap(), 0.0);
        assert!(matches!(
            p.evaluate(&[1, 1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jitter_preserves_order_and_breaks_ties() {
        let p = Problem::onemax_jittered(6, 3);
        let a = p.evaluate(&[1, 0, 0, 0, 0, 0]).unwrap();
        let b = p.evaluate(&[0, 1, 0, 0, 0, 0]).unwrap();
        let c = p.evaluate(&[1, 1, 0, 0, 0, 0]).unwrap();
        assert_ne!(a, b);
        assert!(a < c && b < c);
        assert_eq!(a.floor(), 1.0);
    }

    #[test]
    fn unit_triangle_tour() {
        let t = TspInstance::new(
            "unit",
            vec![(0.0, 0.0), (1.0, 0.0), (0.5, 0.866_025_403_784_438_6)],
        )
        .unwrap();
        let p = Problem::Tsp(t);
        assert_eq!(p.evaluate(&[0, 1, 2]).unwrap(), -3.0);
        assert!(p.evaluate(&[0, 1, 1]).is_err());
    }

    #[test]
    fn fingerprint_distinguishes_definitions() {
        assert_eq!(
            Problem::onemax(8).fingerprint(),
            Problem::onemax(8).fingerprint()
        );
        assert_ne!(
            Problem::onemax(8).fingerprint(),
            Problem::onemax(9).fingerprint()
        );
    }

    #[test]
    fn problem_json_round_trip() {
        let w = Problem::WModel(WModel::new(WModelParams::new(24, 0, 2, 3)).unwrap());
        let json = serde_json::to_string(&w).unwrap();
        let back: Problem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn tour_space_size() {
        assert_eq!(Problem::Tsp(generate_rue(5, 1, 100.0)).search_space_size(), 12.0);
        assert_eq!(Problem::onemax(3).search_space_size(), 8.0);
    }
}
