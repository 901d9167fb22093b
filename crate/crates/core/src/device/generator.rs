//! Deterministic byte generators backing the simulated chips.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("bias epsilon must be finite and > -1/255, got {0}")]
pub struct BiasError(pub f64);

/// Seeded ChaCha20 keystream. The output is one contiguous stream regardless of how
/// it is sliced into requests, so a run can be replayed from the seed alone.
#[derive(Debug, Clone)]
pub struct SeededStream {
    rng: ChaCha20Rng,
    carry: [u8; 64],
    carry_pos: usize,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self::from_rng(ChaCha20Rng::seed_from_u64(seed))
    }

    /// Independent stream `stream` under the same seed.
    pub fn split(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::from_rng(rng)
    }

    fn from_rng(rng: ChaCha20Rng) -> Self {
        Self {
            rng,
            carry: [0; 64],
            carry_pos: 64,
        }
    }

    pub fn fill(&mut self, mut out: &mut [u8]) {
        // Drain leftovers first; the generator itself is only ever advanced in whole
        // words, which keeps its keystream contiguous.
        let leftover = (64 - self.carry_pos).min(out.len());
        out[..leftover].copy_from_slice(&self.carry[self.carry_pos..self.carry_pos + leftover]);
        self.carry_pos += leftover;
        out = &mut out[leftover..];

        let whole = out.len() / 4 * 4;
        self.rng.fill_bytes(&mut out[..whole]);
        let tail = &mut out[whole..];
        if !tail.is_empty() {
            self.rng.fill_bytes(&mut self.carry);
            tail.copy_from_slice(&self.carry[..tail.len()]);
            self.carry_pos = tail.len();
        }
    }
}

/// Draws byte value `v` with probability proportional to `1 + epsilon * v`.
#[derive(Debug, Clone)]
pub struct BiasedBytes {
    rng: ChaCha20Rng,
    dist: WeightedIndex<f64>,
    epsilon: f64,
}

impl BiasedBytes {
    pub fn new(seed: u64, epsilon: f64) -> Result<Self, BiasError> {
        if !epsilon.is_finite() || 1.0 + 255.0 * epsilon <= 0.0 {
            return Err(BiasError(epsilon));
        }
        let dist = WeightedIndex::new((0..256).map(|v| 1.0 + epsilon * v as f64)).map_err(|_| BiasError(epsilon))?;
        Ok(Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            dist,
            epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Probability of byte value `v` under this bias.
    pub fn probability(epsilon: f64, v: u8) -> f64 {
        (1.0 + epsilon * f64::from(v)) / (256.0 + epsilon * 32_640.0)
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        for b in out {
            *b = self.dist.sample(&mut self.rng) as u8;
        }
    }
}

#[derive(Debug, Clone)]
pub enum ByteSource {
    Uniform(SeededStream),
    Biased(BiasedBytes),
}

impl ByteSource {
    pub fn uniform(seed: u64) -> Self {
        ByteSource::Uniform(SeededStream::new(seed))
    }

    pub fn biased(seed: u64, epsilon: f64) -> Result<Self, BiasError> {
        BiasedBytes::new(seed, epsilon).map(ByteSource::Biased)
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        match self {
            ByteSource::Uniform(s) => s.fill(out),
            ByteSource::Biased(b) => b.fill(out),
        }
    }
}
