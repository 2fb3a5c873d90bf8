//! Bit-string landscape made of cones: each peak scores its height minus
//! its slope times the Hamming distance to its center, and a string takes
//! the best score over all peaks. Steep and shallow peaks give basins of
//! controlled width, which makes planted deceptive structures easy to build.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: Vec<u32>,
    pub height: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PeaksDef", into = "PeaksDef")]
pub struct Peaks {
    n_bits: usize,
    peaks: Vec<Peak>,
}

#[derive(Serialize, Deserialize)]
struct PeaksDef {
    n_bits: usize,
    peaks: Vec<Peak>,
}

impl TryFrom<PeaksDef> for Peaks {
    type Error = Error;

    fn try_from(d: PeaksDef) -> Result<Self> {
        Peaks::new(d.n_bits, d.peaks)
    }
}

impl From<Peaks> for PeaksDef {
    fn from(p: Peaks) -> Self {
        PeaksDef {
            n_bits: p.n_bits,
            peaks: p.peaks,
        }
    }
}

impl Peaks {
    pub fn new(n_bits: usize, peaks: Vec<Peak>) -> Result<Self> {
        if n_bits == 0 || peaks.is_empty() {
            return Err(Error::Config("peaks need at least one bit and one peak".into()));
        }
        for (i, p) in peaks.iter().enumerate() {
            if p.center.len() != n_bits || p.center.iter().any(|&b| b > 1) {
                return Err(Error::Config(format!("peak {i} center is not a {n_bits}-bit string")));
            }
            if !(p.height.is_finite() && p.slope.is_finite() && p.slope > 0.0) {
                return Err(Error::Config(format!("peak {i} needs finite height and positive slope")));
            }
        }
        Ok(Self { n_bits, peaks })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn evaluate_unchecked(&self, bits: &[u32]) -> f64 {
        self.peaks
            .iter()
            .map(|p| {
                let d = p.center.iter().zip(bits).filter(|(a, b)| a != b).count();
                p.height - p.slope * d as f64
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Center of the highest peak, first among equals.
    pub fn optimum(&self) -> Vec<u32> {
        self.highest().center.clone()
    }

    pub fn max_fitness(&self) -> f64 {
        self.highest().height
    }

    fn highest(&self) -> &Peak {
        self.peaks
            .iter()
            .reduce(|a, b| if b.height > a.height { b } else { a })
            .expect("at least one peak")
    }
}
