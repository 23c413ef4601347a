//! Cached homomorphic encryption.
//!
//! Encrypting a plaintext from scratch is the expensive step of additive
//! homomorphic schemes. This crate instead assembles fresh-looking
//! ciphertexts from precomputed encryptions using only cheap homomorphic
//! additions and plaintext-constant multiplications:
//!
//! * [`encrypt::as_enc`] decomposes an integer in radix `r` and sums
//!   randomly chosen entries of a [`pool::StaticRadixPool`].
//! * [`encrypt::fs_enc`] handles signed decimals with a salt-split digit
//!   encoding over single-use [`pool::StreamCoeffPool`] queues.
//! * [`encrypt::rache_fast_enc`] is the earlier radix-cache baseline.
//!
//! The homomorphic schemes themselves live in [`he`].

pub mod config;
pub mod encrypt;
pub mod error;
pub mod he;
pub mod pool;
pub mod radix;
pub mod rng;

pub use config::CacheConfig;
pub use error::{Error, Result};
pub use he::{keygen, BackendKind, BackendParams, Ciphertext, KeyMaterial, PublicKey, Scale, SecretKey};
