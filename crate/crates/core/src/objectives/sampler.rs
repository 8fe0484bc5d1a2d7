//! Seeded sample-set generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AlasError, Result};
use crate::problem::SampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Independent uniform draws with replacement each iteration.
    WithReplacement,
    /// Disjoint batches cut from a fresh shuffle every pass over the data.
    EpochPartition,
}

/// Batch size `round(π·N)`, rejected when it rounds to zero.
pub fn batch_size(n: usize, fraction: f64) -> Result<usize> {
    if n == 0 {
        return Err(AlasError::invalid("problem has no components"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(AlasError::invalid(format!("sample fraction must lie in (0,1], got {fraction}")));
    }
    let b = (fraction * n as f64).round() as usize;
    if b == 0 {
        return Err(AlasError::invalid(format!(
            "sample fraction {fraction} gives an empty batch for {n} components"
        )));
    }
    Ok(b.min(n))
}

#[derive(Debug, Clone)]
pub struct Sampler {
    mode: SamplingMode,
    n: usize,
    batch: usize,
    rng: ChaCha8Rng,
    perm: Vec<usize>,
    pos: usize,
}

impl Sampler {
    pub fn new(mode: SamplingMode, n: usize, fraction: f64, seed: u64) -> Result<Self> {
        let batch = batch_size(n, fraction)?;
        Ok(Self {
            mode,
            n,
            batch,
            rng: ChaCha8Rng::seed_from_u64(seed),
            perm: (0..n).collect(),
            pos: usize::MAX,
        })
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Batches per pass in partition mode.
    pub fn batches_per_pass(&self) -> usize {
        self.n / self.batch
    }

    pub fn next_sample(&mut self) -> SampleSet {
        let idx = match self.mode {
            SamplingMode::WithReplacement => (0..self.batch).map(|_| self.rng.random_range(0..self.n)).collect(),
            SamplingMode::EpochPartition => {
                if self.pos >= self.batches_per_pass() * self.batch {
                    self.perm.shuffle(&mut self.rng);
                    self.pos = 0;
                }
                let b = self.perm[self.pos..self.pos + self.batch].to_vec();
                self.pos += self.batch;
                b
            }
        };
        SampleSet::new(idx, self.n).expect("sampler produced a valid sample")
    }
}

impl Iterator for Sampler {
    type Item = SampleSet;

    fn next(&mut self) -> Option<SampleSet> {
        Some(self.next_sample())
    }
}

/// Partition sampler: each pass yields `⌊N/b⌋` disjoint batches of size
/// `b = round(π·N)`; leftover indices are dropped for that pass.
pub fn epoch_partition_sampler(n: usize, fraction: f64, seed: u64) -> Result<Sampler> {
    Sampler::new(SamplingMode::EpochPartition, n, fraction, seed)
}
