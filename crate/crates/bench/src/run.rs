use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::index;
use serde::{Deserialize, Serialize};
use streche_core::encrypt::{as_enc, fs_enc, rache_fast_enc, FsEncParams, OpCounters, OpCounts};
use streche_core::he::{to_f64, BackendKind, BackendParams, Ciphertext, KeyMaterial, PublicKey};
use streche_core::pool::{init_static_pool, init_stream_pool, StaticRadixPool, StreamCoeffPool, StreamPoolParams};
use streche_core::radix::DecimalValue;
use streche_core::rng::HeRng;
use streche_core::CacheConfig;

use crate::error::{BenchError, Result};
use crate::microbench::MicrobenchReport;
use crate::parallel::ParallelReport;
use crate::timing::{median, millis};
use crate::workload::{Workload, WorkloadStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Vanilla,
    Rache,
    AsEnc,
    FsEnc,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Vanilla, Strategy::Rache, Strategy::AsEnc, Strategy::FsEnc];

    fn salt(self) -> u64 {
        0x100 + self as u64
    }

    fn is_baseline(self) -> bool {
        matches!(self, Strategy::Vanilla | Strategy::Rache)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Vanilla => "vanilla",
            Strategy::Rache => "rache",
            Strategy::AsEnc => "asenc",
            Strategy::FsEnc => "fsenc",
        })
    }
}

impl FromStr for Strategy {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| BenchError::InvalidOptions(format!("unknown strategy {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    /// Timed repetitions; the reported time is their median.
    pub repetitions: usize,
    /// Values encrypted in the discarded warm-up pass.
    pub warmup: usize,
    /// Fraction of outputs decrypted and checked after each run.
    pub verify_fraction: f64,
    /// Absolute verification tolerance; derived from the backend if unset.
    pub tolerance: Option<f64>,
    /// Longest wait for streaming pools to refill between repetitions.
    pub refill_timeout: Duration,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            repetitions: 3,
            warmup: 32,
            verify_fraction: 0.01,
            tolerance: None,
            refill_timeout: Duration::from_secs(600),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Offline,
    Online,
    Refill,
}

/// A timed interval, in milliseconds since the start of the strategy's run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub phase: Phase,
    pub start_ms: f64,
    pub end_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub offline_ms: f64,
    /// Median of `runs_ms`.
    pub online_ms: f64,
    pub runs_ms: Vec<f64>,
    /// Counters of the last timed run.
    pub counters: OpCounts,
    /// Stalls summed over all timed runs.
    pub stalls: u64,
    pub verified: usize,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub spans: Vec<Span>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub strategy: Strategy,
    pub baseline: Strategy,
    /// `baseline.online_ms / strategy.online_ms`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub cores: usize,
    pub os: String,
    pub arch: String,
}

impl HostInfo {
    pub fn current() -> Self {
        HostInfo {
            cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSummary {
    pub name: String,
    #[serde(flatten)]
    pub stats: WorkloadStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: CacheConfig,
    pub backend: BackendParams,
    pub seed: Option<u64>,
    pub host: HostInfo,
    pub workload: Option<WorkloadSummary>,
    pub options: Option<BenchOptions>,
    pub strategies: Vec<StrategyResult>,
    pub speedups: Vec<Speedup>,
    pub microbench: Option<MicrobenchReport>,
    pub parallel: Option<ParallelReport>,
}

impl BenchReport {
    pub fn empty(keys: &KeyMaterial, cfg: &CacheConfig) -> Self {
        BenchReport {
            config: cfg.clone(),
            backend: keys.params.clone(),
            seed: cfg.seed,
            host: HostInfo::current(),
            workload: None,
            options: None,
            strategies: Vec::new(),
            speedups: Vec::new(),
            microbench: None,
            parallel: None,
        }
    }

    pub fn result(&self, strategy: Strategy) -> Option<&StrategyResult> {
        self.strategies.iter().find(|r| r.strategy == strategy)
    }

    pub fn speedup(&self, strategy: Strategy, baseline: Strategy) -> Option<f64> {
        self.speedups.iter().find(|s| s.strategy == strategy && s.baseline == baseline).map(|s| s.ratio)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Verification tolerance of a strategy's outputs on a backend.
pub fn default_tolerance(params: &BackendParams, cfg: &CacheConfig, strategy: Strategy) -> f64 {
    match params.kind {
        BackendKind::ExactAdditive | BackendKind::Mock => 0.0,
        BackendKind::ApproxRlwe => {
            let unit = 2f64.powi(-10);
            if strategy == Strategy::FsEnc {
                // Pool noise is amplified by the largest integer digit weight.
                let weight = f64::from(cfg.r_i).powi(cfg.n_i.saturating_sub(1) as i32);
                unit.max(weight * 2f64.powi(-(params.scale_bits as i32) + 10))
            } else {
                unit
            }
        }
    }
}

#[allow(clippy::large_enum_variant)]
enum Prepared {
    Vanilla,
    Radix(StaticRadixPool),
    Coeff { int: StreamCoeffPool, dec: StreamCoeffPool, params: FsEncParams },
}

/// One strategy with its pools built and ready for online encryption.
pub struct Encryptor {
    strategy: Strategy,
    pk: PublicKey,
    prepared: Prepared,
}

impl Encryptor {
    /// Build the pools `strategy` needs (the offline phase).
    pub fn new(pk: &PublicKey, cfg: &CacheConfig, strategy: Strategy) -> Result<Self> {
        let prepared = match strategy {
            Strategy::Vanilla => Prepared::Vanilla,
            Strategy::Rache | Strategy::AsEnc => Prepared::Radix(init_static_pool(pk, cfg)?),
            Strategy::FsEnc => {
                let mode = cfg.rng_mode().derive(strategy.salt());
                let ip = StreamPoolParams::new(cfg.r_i, cfg.queue_len, cfg.workers);
                let dp = StreamPoolParams::new(cfg.r_d_inv - 1, cfg.queue_len, cfg.workers);
                Prepared::Coeff {
                    int: init_stream_pool(pk, &ip, mode.derive(1))?,
                    dec: init_stream_pool(pk, &dp, mode.derive(2))?,
                    params: FsEncParams::from(cfg),
                }
            }
        };
        Ok(Encryptor { strategy, pk: pk.clone(), prepared })
    }

    /// A radix-pool strategy over an existing pool, e.g. one loaded from a
    /// snapshot.
    pub fn with_static_pool(pool: StaticRadixPool, strategy: Strategy) -> Result<Self> {
        if !matches!(strategy, Strategy::Rache | Strategy::AsEnc) {
            return Err(BenchError::InvalidOptions(format!("{strategy} does not use a radix pool")));
        }
        Ok(Encryptor { strategy, pk: pool.public_key().clone(), prepared: Prepared::Radix(pool) })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn encrypt(&self, v: &DecimalValue, rng: &mut HeRng, ops: &OpCounters) -> Result<Ciphertext> {
        let strategy = self.strategy;
        Ok(match &self.prepared {
            Prepared::Vanilla => {
                ops.add_encs(1);
                self.pk.enc(&v.to_rational(), rng)?
            }
            Prepared::Radix(pool) if strategy == Strategy::Rache => {
                rache_fast_enc(pool, &unsigned(strategy, v)?, rng, ops)?
            }
            Prepared::Radix(pool) => as_enc(pool, &unsigned(strategy, v)?, rng, ops)?,
            Prepared::Coeff { int, dec, params } => fs_enc(int, dec, v, params, rng, ops)?,
        })
    }

    /// Block until streaming pools are full again. Returns false on timeout.
    pub fn wait_refilled(&self, timeout: Duration) -> bool {
        match &self.prepared {
            Prepared::Coeff { int, dec, .. } => int.wait_until_full(timeout) && dec.wait_until_full(timeout),
            _ => true,
        }
    }

    fn streams(&self) -> bool {
        matches!(self.prepared, Prepared::Coeff { .. })
    }
}

fn unsigned(strategy: Strategy, v: &DecimalValue) -> Result<BigUint> {
    if !v.is_integer() || v.is_negative() {
        return Err(BenchError::Unsupported {
            strategy: strategy.to_string(),
            value: v.to_string(),
            reason: "only non-negative integers are supported".into(),
        });
    }
    Ok(v.int_part().clone())
}

/// Encrypt every workload value with each strategy and report online times.
///
/// Pools are built and, for streaming pools, refilled outside the timed
/// spans. Each run decrypts a random `verify_fraction` of its outputs (at
/// least one) and fails on the first mismatch.
pub fn run_bench(
    keys: &KeyMaterial,
    cfg: &CacheConfig,
    workload: &Workload,
    strategies: &[Strategy],
    opts: &BenchOptions,
) -> Result<BenchReport> {
    cfg.validate()?;
    if opts.repetitions < 1 {
        return Err(BenchError::InvalidOptions("at least one repetition is required".into()));
    }
    if !(0.0..=1.0).contains(&opts.verify_fraction) {
        return Err(BenchError::InvalidOptions(format!("verify fraction {} outside [0, 1]", opts.verify_fraction)));
    }
    if workload.values.is_empty() {
        return Err(BenchError::InvalidSpec("workload is empty".into()));
    }
    let mut report = BenchReport::empty(keys, cfg);
    report.workload = Some(WorkloadSummary { name: workload.name.clone(), stats: workload.stats.clone() });
    report.options = Some(opts.clone());
    let unique: BTreeSet<Strategy> = strategies.iter().copied().collect();
    for &strategy in &unique {
        report.strategies.push(run_strategy(keys, cfg, workload, strategy, opts)?);
    }
    report.speedups = speedups(&report.strategies);
    Ok(report)
}

fn run_strategy(
    keys: &KeyMaterial,
    cfg: &CacheConfig,
    workload: &Workload,
    strategy: Strategy,
    opts: &BenchOptions,
) -> Result<StrategyResult> {
    let origin = Instant::now();
    let since = |t: Instant| millis(t - origin);
    let mut spans = Vec::new();

    let enc = Encryptor::new(&keys.public, cfg, strategy)?;
    let offline_end = Instant::now();
    spans.push(Span { phase: Phase::Offline, start_ms: 0.0, end_ms: since(offline_end) });

    let mode = cfg.rng_mode().derive(strategy.salt());
    let mut rng = mode.derive(3).rng();
    let mut pick_rng = mode.derive(4).rng();
    let tolerance = opts.tolerance.unwrap_or_else(|| default_tolerance(&keys.params, cfg, strategy));
    let values = &workload.values;

    let warm = ops_run(&enc, &values[..opts.warmup.min(values.len())], &mut rng, &[])?;
    drop(warm);

    let mut runs_ms = Vec::with_capacity(opts.repetitions);
    let mut stalls = 0;
    let mut counters = OpCounts::default();
    let (mut verified, mut max_abs_error) = (0, 0.0f64);
    for _ in 0..opts.repetitions {
        refill(&enc, opts, &mut spans, since)?;
        let sample_len = ((values.len() as f64 * opts.verify_fraction).ceil() as usize).clamp(1, values.len());
        let mut picks = index::sample(&mut pick_rng, values.len(), sample_len).into_vec();
        picks.sort_unstable();
        let start = Instant::now();
        let out = ops_run(&enc, values, &mut rng, &picks)?;
        let end = Instant::now();
        spans.push(Span { phase: Phase::Online, start_ms: since(start), end_ms: since(end) });
        runs_ms.push(millis(end - start));
        stalls += out.counts.stalls;
        counters = out.counts;
        for (i, ct) in out.kept {
            let err = verify(keys, strategy, &values[i], &ct, tolerance)?;
            max_abs_error = max_abs_error.max(err);
            verified += 1;
        }
    }
    Ok(StrategyResult {
        strategy,
        offline_ms: spans[0].end_ms,
        online_ms: median(runs_ms.clone()),
        runs_ms,
        counters,
        stalls,
        verified,
        max_abs_error,
        tolerance,
        spans,
    })
}

struct RunOutput {
    counts: OpCounts,
    kept: Vec<(usize, Ciphertext)>,
}

/// Encrypt `values`, keeping only the outputs at the sorted indices `keep`.
fn ops_run(enc: &Encryptor, values: &[DecimalValue], rng: &mut HeRng, keep: &[usize]) -> Result<RunOutput> {
    let ops = OpCounters::new();
    let mut kept = Vec::with_capacity(keep.len());
    let mut next = keep.iter().peekable();
    for (i, v) in values.iter().enumerate() {
        let ct = enc.encrypt(v, rng, &ops)?;
        if next.peek() == Some(&&i) {
            next.next();
            kept.push((i, ct));
        }
    }
    Ok(RunOutput { counts: ops.snapshot(), kept })
}

fn refill(enc: &Encryptor, opts: &BenchOptions, spans: &mut Vec<Span>, since: impl Fn(Instant) -> f64) -> Result<()> {
    if enc.streams() {
        let start = Instant::now();
        let full = enc.wait_refilled(opts.refill_timeout);
        spans.push(Span { phase: Phase::Refill, start_ms: since(start), end_ms: since(Instant::now()) });
        if !full {
            return Err(BenchError::InvalidOptions("streaming pools did not refill before the timeout".into()));
        }
    }
    Ok(())
}

fn verify(keys: &KeyMaterial, strategy: Strategy, v: &DecimalValue, ct: &Ciphertext, tolerance: f64) -> Result<f64> {
    let got = keys.secret.dec(ct)?;
    let err = to_f64(&(got.clone() - v.to_rational())).abs();
    if err > tolerance {
        return Err(BenchError::Verification {
            strategy: strategy.to_string(),
            plaintext: v.to_string(),
            decrypted: format!("{}", to_f64(&got)),
        });
    }
    Ok(err)
}

fn speedups(results: &[StrategyResult]) -> Vec<Speedup> {
    let mut out = Vec::new();
    for base in results.iter().filter(|r| r.strategy.is_baseline()) {
        for r in results.iter().filter(|r| r.strategy != base.strategy) {
            out.push(Speedup { strategy: r.strategy, baseline: base.strategy, ratio: base.online_ms / r.online_ms });
        }
    }
    out
}
