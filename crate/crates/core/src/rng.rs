//! Randomness sources.
//!
//! Everything that draws randomness takes a [`RngMode`]: either a seeded
//! ChaCha20 stream (reproducible, for tests and benchmarks) or a generator
//! keyed from the operating system. Independent workers derive independent
//! streams from the same mode with [`RngMode::stream`].

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type HeRng = ChaCha20Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RngMode {
    /// Deterministic test mode.
    Seeded(u64),
    /// Cryptographically strong, keyed from the OS.
    Entropy,
}

impl RngMode {
    pub fn from_seed(seed: Option<u64>) -> Self {
        match seed {
            Some(s) => RngMode::Seeded(s),
            None => RngMode::Entropy,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            RngMode::Seeded(s) => Some(*s),
            RngMode::Entropy => None,
        }
    }

    pub fn rng(&self) -> HeRng {
        self.stream(0)
    }

    /// An independent generator for stream `id`. In seeded mode the same
    /// `(seed, id)` always yields the same sequence.
    pub fn stream(&self, id: u64) -> HeRng {
        match self {
            RngMode::Seeded(seed) => {
                let mut rng = ChaCha20Rng::seed_from_u64(*seed);
                rng.set_stream(id);
                rng
            }
            RngMode::Entropy => ChaCha20Rng::from_os_rng(),
        }
    }

    /// Derive a child mode for a sub-component, so that two components
    /// seeded from one user seed do not share streams.
    pub fn derive(&self, salt: u64) -> RngMode {
        match self {
            RngMode::Seeded(seed) => RngMode::Seeded(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17) ^ salt),
            RngMode::Entropy => RngMode::Entropy,
        }
    }
}
