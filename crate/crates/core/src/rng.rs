//! Named random sub-streams derived from a single master seed.
//!
//! Every consumer of randomness (mobility, fading, engine, latency) draws
//! from its own ChaCha stream, so changing how one component consumes
//! numbers never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Mobility,
    Fading,
    Engine,
    Latency,
    Pdr,
}

impl Stream {
    fn label(self) -> &'static str {
        match self {
            Stream::Mobility => "mobility",
            Stream::Fading => "fading",
            Stream::Engine => "engine",
            Stream::Latency => "latency",
            Stream::Pdr => "pdr",
        }
    }
}

/// Master seed plus the derivation rule for sub-streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for `stream`, further split by `index` (typically the
    /// Monte Carlo run number).
    pub fn rng(&self, stream: Stream, index: u64) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(stream.label()));
        rng.set_stream(index);
        rng
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
