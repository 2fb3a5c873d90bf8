//! Domain types shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of a solution inside its [`SampleSet`](crate::SampleSet).
pub type SolutionId = u32;

/// How assignment vectors are encoded, which also fixes the distance metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Encoding {
    /// Bit strings under the Hamming distance.
    Binary,
    /// City permutations (0-based) under the Dice distance, measured in
    /// unshared edges.
    Tour,
}

impl Encoding {
    /// Value a solution assigns to the variable of dimension `k`.
    ///
    /// For bit strings this is the bit itself. For tours the variable of
    /// city `k` is the city visited right after it, so the domain of `k` is
    /// every other city.
    pub fn domain_value(self, values: &[u32], k: usize) -> u32 {
        match self {
            Encoding::Binary => values[k],
            Encoding::Tour => successor_of(values, k as u32),
        }
    }
}

fn successor_of(tour: &[u32], city: u32) -> u32 {
    let pos = tour
        .iter()
        .position(|&c| c == city)
        .expect("city missing from tour");
    tour[(pos + 1) % tour.len()]
}

/// A fixed-length assignment vector with its cached fitness.
///
/// Fitness follows the maximization convention: larger is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub values: Vec<u32>,
    pub fitness: f64,
}

impl Solution {
    pub fn new(values: Vec<u32>, fitness: f64) -> Self {
        Self { values, fitness }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Admissible assignments for one variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableDomain {
    pub index: usize,
    pub values: Vec<u32>,
}

impl VariableDomain {
    pub fn binary(index: usize) -> Self {
        Self {
            index,
            values: vec![0, 1],
        }
    }

    /// Successor domain of city `index` in a `dim`-city tour.
    pub fn successor(index: usize, dim: usize) -> Self {
        Self {
            index,
            values: (0..dim as u32).filter(|&c| c as usize != index).collect(),
        }
    }

    pub fn contains(&self, value: u32) -> bool {
        self.values.binary_search(&value).is_ok()
    }
}

/// Checks that `values` is a valid assignment of the given encoding and length.
pub fn validate(encoding: Encoding, dim: usize, values: &[u32]) -> Result<()> {
    if values.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: values.len(),
        });
    }
    match encoding {
        Encoding::Binary => {
            if let Some(v) = values.iter().find(|&&v| v > 1) {
                return Err(Error::InvalidSolution(format!("bit value {v} is not 0 or 1")));
            }
        }
        Encoding::Tour => {
            if dim < 3 {
                return Err(Error::DegenerateTour(dim));
            }
            let mut seen = vec![false; dim];
            for &c in values {
                let c = c as usize;
                if c >= dim {
                    return Err(Error::InvalidSolution(format!(
                        "city {c} out of range for {dim} cities"
                    )));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::InvalidSolution(format!("city {c} visited twice")));
                }
            }
        }
    }
    Ok(())
}
