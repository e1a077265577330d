//! Deterministic child seeds.
//!
//! Every random decision in an experiment draws from its own ChaCha stream,
//! keyed by the master seed plus a fixed label path. Two strategies that
//! reach the same decision point (say, the random first batch of BL, QBC and
//! EMCM) therefore consume identical randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which decision point a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    PoolDraw,
    RandomBatch,
    InitClustering,
    Bootstrap,
    DiversityClustering,
    Synth,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::PoolDraw => 0x706f_6f6c,
            Stream::RandomBatch => 0x7261_6e64,
            Stream::InitClustering => 0x696e_6974,
            Stream::Bootstrap => 0x626f_6f74,
            Stream::DiversityClustering => 0x6469_7665,
            Stream::Synth => 0x7379_6e74,
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a sequence of integer labels.
pub fn derive(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// Seeds owned by one (subject, run) unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    base: u64,
}

impl RunSeeds {
    pub fn new(master: u64, subject: usize, run: usize) -> Self {
        Self { base: derive(master, &[subject as u64, run as u64]) }
    }

    pub fn from_base(base: u64) -> Self {
        Self { base }
    }

    /// Seed for a stream at a given batch (or removal round) index.
    pub fn seed(&self, stream: Stream, index: usize) -> u64 {
        derive(self.base, &[stream.tag(), index as u64])
    }

    pub fn rng(&self, stream: Stream, index: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(stream, index))
    }
}
