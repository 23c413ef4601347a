//! Effective configuration: defaults, then a `key=value` file, then flags.

use std::fmt;
use std::path::PathBuf;

use clap::Args;
use streche_core::{BackendKind, BackendParams, CacheConfig};

use crate::error::CliError;

/// Environment variable consulted when no seed is given otherwise.
pub const SEED_ENV: &str = "STRECHE_SEED";

#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// exact-additive, approx-rlwe or mock.
    #[arg(long)]
    pub backend: Option<String>,
    /// Paillier modulus or RLWE coefficient-modulus bits.
    #[arg(long)]
    pub modulus_bits: Option<u32>,
    /// Plain-text `key=value` file; flags take precedence over it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Static pool radix.
    #[arg(long)]
    pub r: Option<u32>,
    /// Static pool levels.
    #[arg(long)]
    pub n: Option<usize>,
    /// FSEnc integer radix.
    #[arg(long = "ri")]
    pub r_i: Option<u32>,
    /// FSEnc integer digits.
    #[arg(long = "ni")]
    pub n_i: Option<usize>,
    /// FSEnc fractional radix reciprocal.
    #[arg(long = "rd-inv")]
    pub r_d_inv: Option<u32>,
    /// Decimal digits.
    #[arg(long = "nd")]
    pub n_d: Option<usize>,
    /// Streaming queue length.
    #[arg(long = "L")]
    pub queue_len: Option<usize>,
    /// Pool initialization threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Deterministic mode seed (falls back to STRECHE_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// More progress output on stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub backend: BackendParams,
    pub cache: CacheConfig,
    pub verbose: u8,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        Self::resolve_with_env(args, std::env::var(SEED_ENV).ok())
    }

    pub fn resolve_with_env(args: &CommonArgs, env_seed: Option<String>) -> Result<Self, CliError> {
        let mut backend = BackendParams::approx_rlwe();
        let mut cache = CacheConfig::default();
        let mut file_seed = false;
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let entries = parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            // The backend resets its parameters, so apply it before the rest.
            if let Some((_, v)) = entries.iter().rev().find(|(k, _)| k == "backend") {
                backend = backend_params(v)?;
            }
            for (k, v) in entries.iter().filter(|(k, _)| k != "backend") {
                match k.as_str() {
                    "modulus_bits" => {
                        backend.modulus_bits = v.parse().map_err(|_| {
                            CliError::Usage(format!("{}: modulus_bits {v:?} is not a number", path.display()))
                        })?
                    }
                    _ => {
                        file_seed |= k == "seed";
                        cache.set(k, v).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                    }
                }
            }
        }
        if let Some(b) = &args.backend {
            let params = backend_params(b)?;
            if params.kind != backend.kind {
                backend = params;
            }
        }
        if let Some(bits) = args.modulus_bits {
            backend.modulus_bits = bits;
        }
        set(&mut cache.r, args.r);
        set(&mut cache.n, args.n);
        set(&mut cache.r_i, args.r_i);
        set(&mut cache.n_i, args.n_i);
        set(&mut cache.r_d_inv, args.r_d_inv);
        set(&mut cache.n_d, args.n_d);
        set(&mut cache.queue_len, args.queue_len);
        set(&mut cache.workers, args.workers);
        if args.seed.is_some() {
            cache.seed = args.seed;
        } else if !file_seed {
            if let Some(s) = env_seed.filter(|s| !s.trim().is_empty()) {
                cache.seed =
                    Some(s.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={s:?} is not a number")))?);
            }
        }
        backend.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        cache.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Settings { backend, cache, verbose: args.verbose })
    }
}

impl fmt::Display for Settings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.backend;
        let c = &self.cache;
        write!(f, "backend={} modulus_bits={}", b.kind, b.modulus_bits)?;
        if b.kind == BackendKind::ApproxRlwe {
            write!(f, " ring_degree={} scale_bits={}", b.ring_degree, b.scale_bits)?;
        }
        write!(
            f,
            " r={} n={} r_i={} n_i={} r_d_inv={} n_d={} L={} workers={} seed={}",
            c.r,
            c.n,
            c.r_i,
            c.n_i,
            c.r_d_inv,
            c.n_d,
            c.queue_len,
            c.workers,
            c.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
        )
    }
}

fn set<T>(dst: &mut T, src: Option<T>) {
    if let Some(v) = src {
        *dst = v;
    }
}

pub fn backend_params(name: &str) -> Result<BackendParams, CliError> {
    let kind: BackendKind = name.parse().map_err(|e: streche_core::Error| CliError::Usage(e.to_string()))?;
    Ok(BackendParams::for_kind(kind))
}

/// `key=value` lines; blank lines and `#` comments are ignored.
fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
