use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngMode;

/// Radices, digit counts and pool sizes shared by the caches and encryptors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    /// Radix of the static pool used by ASEnc and Rache.
    pub r: u32,
    /// Highest power of `r` in the static pool.
    pub n: usize,
    /// Integer radix of FSEnc.
    pub r_i: u32,
    /// Integer digits processed by FSEnc.
    pub n_i: usize,
    /// Reciprocal of the fractional radix (10 for decimal digits).
    pub r_d_inv: u32,
    /// Decimal digits carried by FSEnc inputs.
    pub n_d: usize,
    /// Capacity of each streaming ring queue.
    #[serde(rename = "L")]
    pub queue_len: usize,
    /// Threads used for offline pool initialization.
    pub workers: usize,
    /// Seeded (reproducible) mode when set.
    pub seed: Option<u64>,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            r: 2,
            n: 16,
            r_i: 100,
            n_i: 3,
            r_d_inv: 10,
            n_d: 3,
            queue_len: 64,
            workers: default_workers(),
            seed: None,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl CacheConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("r_i", self.r_i), ("r_d_inv", self.r_d_inv)] {
            if v < 2 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be at least 2")));
            }
        }
        for (name, v) in
            [("n", self.n), ("n_i", self.n_i), ("n_d", self.n_d), ("L", self.queue_len), ("workers", self.workers)]
        {
            if v < 1 {
                return Err(Error::InvalidParams(format!("{name} must be at least 1")));
            }
        }
        if self.n_d > crate::radix::MAX_DECIMAL_DIGITS {
            return Err(Error::InvalidParams(format!(
                "n_d = {} exceeds the supported {} decimal digits",
                self.n_d,
                crate::radix::MAX_DECIMAL_DIGITS
            )));
        }
        Ok(())
    }

    pub fn rng_mode(&self) -> RngMode {
        RngMode::from_seed(self.seed)
    }

    /// Set one field from its textual name, as used by `key=value` files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.trim().parse().map_err(|_| Error::InvalidParams(format!("{key}: cannot parse {value:?}")))
        }
        match key.trim() {
            "r" => self.r = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "r_i" | "ri" => self.r_i = num(key, value)?,
            "n_i" | "ni" => self.n_i = num(key, value)?,
            "r_d_inv" => self.r_d_inv = num(key, value)?,
            "n_d" | "nd" => self.n_d = num(key, value)?,
            "L" | "queue_len" => self.queue_len = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "seed" => {
                self.seed = match value.trim() {
                    "" | "none" => None,
                    v => Some(num(key, v)?),
                }
            }
            other => return Err(Error::InvalidParams(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }
}
