//! Tunable W-Model over bit strings.
//!
//! Layers are applied in this order:
//!
//! 1. **Neutrality** (`mu`): the string is cut into `floor(n / mu)` blocks
//!    of `mu` bits; each block becomes a single bit that is `1` when at least
//!    half of its bits are `1`. Trailing bits that do not fill a block are
//!    ignored. `mu <= 1` disables the layer.
//! 2. **Epistasis** (`upsilon`): the reduced string is cut into blocks of
//!    `upsilon` bits (the last block may be shorter). A block `x` with parity
//!    `t = x[0] ^ ... ^ x[k-1]` maps to `y[0] = t` and `y[i] = t ^ x[i]`.
//!    The map is a bijection and a single input flip changes all but at most
//!    one output bit. `upsilon <= 1` disables the layer.
//! 3. **Objective**: count of `1` bits, `0..=q` with `q` the reduced length.
//! 4. **Ruggedness** (`gamma`): the error `q - count` is remapped through a
//!    permutation of `1..=q` (error 0 stays 0, so the optimum is preserved)
//!    that has exactly `gamma` inversions. Admissible values are
//!    `0..=q(q-1)/2`; `gamma = 0` is the identity.
//!
//! With `mu`, `upsilon` and `gamma` all zero the model is plain OneMax.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WModelParams {
    pub n_bits: usize,
    pub gamma: usize,
    pub mu: usize,
    pub upsilon: usize,
}

impl WModelParams {
    pub fn new(n_bits: usize, gamma: usize, mu: usize, upsilon: usize) -> Self {
        Self {
            n_bits,
            gamma,
            mu,
            upsilon,
        }
    }
}

/// A validated W-Model instance with its ruggedness table precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WModelParams", into = "WModelParams")]
pub struct WModel {
    params: WModelParams,
    q: usize,
    /// `rugged[e]` is the remapped error for raw error `e`.
    rugged: Vec<u32>,
}

impl TryFrom<WModelParams> for WModel {
    type Error = Error;

    fn try_from(p: WModelParams) -> Result<Self> {
        WModel::new(p)
    }
}

impl From<WModel> for WModelParams {
    fn from(w: WModel) -> Self {
        w.params
    }
}

impl WModel {
    pub fn new(params: WModelParams) -> Result<Self> {
        if params.n_bits == 0 {
            return Err(Error::Config("W-Model needs at least one bit".into()));
        }
        let mu = params.mu.max(1);
        if mu > params.n_bits {
            return Err(Error::Config(format!(
                "neutrality {} exceeds string length {}",
                params.mu, params.n_bits
            )));
        }
        let q = params.n_bits / mu;
        if params.upsilon > q {
            return Err(Error::Config(format!(
                "epistasis {} exceeds reduced length {q}",
                params.upsilon
            )));
        }
        let max_gamma = q * (q - 1) / 2;
        if params.gamma > max_gamma {
            return Err(Error::Config(format!(
                "ruggedness {} outside 0..={max_gamma} for reduced length {q}",
                params.gamma
            )));
        }
        Ok(Self {
            params,
            q,
            rugged: ruggedness_table(q, params.gamma),
        })
    }

    pub fn params(&self) -> WModelParams {
        self.params
    }

    /// Length of the string after the neutrality layer.
    pub fn reduced_len(&self) -> usize {
        self.q
    }

    pub fn evaluate_unchecked(&self, bits: &[u32]) -> f64 {
        let mut reduced = self.neutral(bits);
        self.epistasis(&mut reduced);
        let ones = reduced.iter().filter(|&&b| b).count();
        let error = self.q - ones;
        (self.q as u32 - self.rugged[error]) as f64
    }

    /// Output of the neutrality layer.
    pub fn neutral(&self, bits: &[u32]) -> Vec<bool> {
        let mu = self.params.mu.max(1);
        bits.chunks_exact(mu)
            .take(self.q)
            .map(|block| 2 * block.iter().filter(|&&b| b == 1).count() >= mu)
            .collect()
    }

    fn epistasis(&self, reduced: &mut [bool]) {
        if self.params.upsilon <= 1 {
            return;
        }
        for block in reduced.chunks_mut(self.params.upsilon) {
            let t = block.iter().fold(false, |acc, &b| acc ^ b);
            block[0] = t;
            for b in &mut block[1..] {
                *b ^= t;
            }
        }
    }

    /// A string of maximal fitness: every reduced bit set, with epistasis
    /// blocks pre-imaged to all ones.
    pub fn optimum(&self) -> Vec<u32> {
        let mu = self.params.mu.max(1);
        let mut reduced = vec![1u32; self.q];
        if self.params.upsilon > 1 {
            for block in reduced.chunks_mut(self.params.upsilon) {
                // y = all ones needs t = 1 and x[i] = 0 for i >= 1, so x[0] = 1.
                block.fill(0);
                block[0] = 1;
            }
        }
        let mut bits = vec![1u32; self.params.n_bits];
        for (i, &r) in reduced.iter().enumerate() {
            bits[i * mu..(i + 1) * mu].fill(r);
        }
        bits
    }
}

/// Permutation of errors `0..=q` fixing 0 whose restriction to `1..=q` has
/// exactly `gamma` inversions, built greedily from its Lehmer code.
fn ruggedness_table(q: usize, gamma: usize) -> Vec<u32> {
    let mut remaining: Vec<u32> = (1..=q as u32).collect();
    let mut table = Vec::with_capacity(q + 1);
    table.push(0);
    let mut left = gamma;
    for pos in 0..q {
        let c = left.min(q - 1 - pos);
        left -= c;
        table.push(remaining.remove(c));
    }
    table
}
