//! `streche`: key management, self-tests, benchmarks and file encryption
//! with cached homomorphic encryptors.

mod error;
mod selftest;
mod settings;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use streche_bench::workload::{Workload, DESK_SCALE_COUNT};
use streche_bench::{
    bench_parallel_caching, default_tolerance, gen_synthetic, load_csv, microbench_backend, render_table, run_bench,
    BenchOptions, BenchReport, Encryptor, Strategy, WorkloadSpec,
};
use streche_core::encrypt::OpCounters;
use streche_core::he::{to_f64, Ciphertext, KeyMaterial};
use streche_core::pool::{init_static_pool, init_stream_pool, StaticRadixPool, StreamPoolParams};
use streche_core::{keygen, PublicKey};

use crate::error::CliError;
use crate::settings::{CommonArgs, Settings};

#[derive(Parser, Debug)]
#[command(name = "streche", version, about = "Cached homomorphic encryption: keys, self-tests and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a key pair.
    Keygen {
        #[command(flatten)]
        common: CommonArgs,
        /// Public key output.
        #[arg(long)]
        out: PathBuf,
        /// Secret key output (written owner-only).
        #[arg(long)]
        out_secret: Option<PathBuf>,
    },
    /// Run roundtrip and invariant checks on a backend.
    Selftest {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Median latency of enc, eval_add and eval_mul_plain.
    Microbench {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// JSON report output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time encryption strategies over a workload.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        workload: WorkloadArgs,
        /// vanilla, rache, asenc or fsenc; repeat or comma-separate.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<Strategy>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Fraction of outputs decrypted and checked per run.
        #[arg(long, default_value_t = 0.01)]
        verify_fraction: f64,
        /// JSON report output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Offline pool initialization time per worker count.
    ParallelBench {
        #[command(flatten)]
        common: CommonArgs,
        /// Ciphertexts per pool.
        #[arg(long, default_value_t = DESK_SCALE_COUNT)]
        size: usize,
        /// Ascending worker counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// JSON report output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encrypt one CSV column into a ciphertext file.
    EncryptFile {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        keys: KeyArgs,
        /// Input CSV.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        column: usize,
        #[arg(long, default_value = "vanilla")]
        strategy: Strategy,
        /// Radix pool snapshot from `cache-warm` (rache and asenc).
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Ciphertext output.
        #[arg(long)]
        out: PathBuf,
        /// Re-read the output and decrypt every row against the input.
        #[arg(long)]
        verify: bool,
    },
    /// Build a strategy's pools and save them as snapshots.
    CacheWarm {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        keys: KeyArgs,
        #[arg(long, default_value = "asenc")]
        strategy: Strategy,
        /// Snapshot output; fsenc writes `<out>.int` and `<out>.dec`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct WorkloadArgs {
    /// A CSV path or `synthetic:NAME` (one of the built-in presets).
    #[arg(long)]
    workload: Option<String>,
    /// CSV column index.
    #[arg(long, default_value_t = 0)]
    column: usize,
    /// Number of records (default: 10000, or the preset size with --full-scale).
    #[arg(long)]
    count: Option<usize>,
    /// Use the preset's full record count.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args, Debug)]
struct KeyArgs {
    /// Public key file; generated from the seed when absent.
    #[arg(long)]
    public: Option<PathBuf>,
    /// Secret key file matching --public (needed for --verify).
    #[arg(long)]
    secret: Option<PathBuf>,
    /// Write the secret key of generated keys here (owner-only).
    #[arg(long)]
    out_secret: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("streche: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn settings(common: &CommonArgs) -> Result<Settings, CliError> {
    Settings::resolve(common)
}

fn announce(s: &Settings) {
    println!("# config: {s}");
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Keygen { common, out, out_secret } => {
            let s = settings(&common)?;
            announce(&s);
            let keys = keygen(&s.backend, s.cache.seed)?;
            write_file(&out, &keys.public_bytes(), false)?;
            println!("public key {} written to {}", hex(&keys.public.key_id()), out.display());
            if let Some(path) = out_secret {
                write_file(&path, &keys.secret_bytes(), true)?;
                println!("secret key written to {}", path.display());
            }
            Ok(())
        }
        Command::Selftest { common } => {
            let s = settings(&common)?;
            announce(&s);
            let keys = keygen(&s.backend, s.cache.seed)?;
            let mut rng = s.cache.rng_mode().derive(0x57).rng();
            let failures = selftest::run(keys, &s.cache, &mut rng);
            if failures > 0 {
                return Err(CliError::Failure(format!("{failures} self-test check(s) failed")));
            }
            println!("all self-test checks passed");
            Ok(())
        }
        Command::Microbench { common, trials, out } => {
            let s = settings(&common)?;
            announce(&s);
            let keys = keygen(&s.backend, s.cache.seed)?;
            let mut report = BenchReport::empty(&keys, &s.cache);
            report.microbench = Some(microbench_backend(&keys, trials, s.cache.seed)?);
            emit(&report, out.as_deref())
        }
        Command::Bench { common, workload, strategy, reps, verify_fraction, out } => {
            let s = settings(&common)?;
            // Required inputs are checked before any expensive work.
            let source = workload
                .workload
                .clone()
                .ok_or_else(|| CliError::Usage("bench needs --workload <path.csv|synthetic:NAME>".into()))?;
            announce(&s);
            let data = load_workload(&source, &workload, &s)?;
            let keys = keygen(&s.backend, s.cache.seed)?;
            let strategies = if strategy.is_empty() { default_strategies(&keys, &data) } else { strategy };
            let opts = BenchOptions { repetitions: reps, verify_fraction, ..BenchOptions::default() };
            if s.verbose > 0 {
                eprintln!("benchmarking {} values with {strategies:?}", data.values.len());
            }
            let report = run_bench(&keys, &s.cache, &data, &strategies, &opts)?;
            emit(&report, out.as_deref())
        }
        Command::ParallelBench { common, size, counts, reps, out } => {
            let s = settings(&common)?;
            announce(&s);
            let keys = keygen(&s.backend, s.cache.seed)?;
            let seed = s.cache.seed.unwrap_or_else(rand_seed);
            let mut report = BenchReport::empty(&keys, &s.cache);
            report.parallel = Some(bench_parallel_caching(&keys, size, &counts, reps, seed)?);
            emit(&report, out.as_deref())
        }
        Command::EncryptFile { common, keys, input, column, strategy, cache, out, verify } => {
            let s = settings(&common)?;
            announce(&s);
            encrypt_file(&s, &keys, &input, column, strategy, cache.as_deref(), &out, verify)
        }
        Command::CacheWarm { common, keys, strategy, out } => {
            let s = settings(&common)?;
            announce(&s);
            cache_warm(&s, &keys, strategy, &out)
        }
    }
}

fn emit(report: &BenchReport, out: Option<&Path>) -> Result<(), CliError> {
    print!("{}", render_table(report));
    if let Some(path) = out {
        let json = report.to_json()?;
        write_file(path, json.as_bytes(), false)?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn load_workload(source: &str, args: &WorkloadArgs, s: &Settings) -> Result<Workload, CliError> {
    let mut data = if let Some(name) = source.strip_prefix("synthetic:") {
        let spec = WorkloadSpec::preset(name).ok_or_else(|| {
            let names: Vec<_> = WorkloadSpec::preset_names().collect();
            CliError::Usage(format!("unknown synthetic workload {name:?}; choose one of {}", names.join(", ")))
        })?;
        let spec = match args.count {
            Some(c) => spec.with_count(c),
            None if args.full_scale => spec,
            None => spec.desk_scale(),
        };
        gen_synthetic(&spec, s.cache.seed.unwrap_or_else(rand_seed))?
    } else {
        load_csv(Path::new(source), args.column, s.cache.n_d)?
    };
    if let Some(c) = args.count.filter(|&c| c < data.values.len()) {
        data = Workload::new(data.name, data.values[..c].to_vec());
    }
    Ok(data)
}

fn default_strategies(keys: &KeyMaterial, data: &Workload) -> Vec<Strategy> {
    let mut out = vec![Strategy::Vanilla];
    if data.is_unsigned_integer() {
        out.extend([Strategy::Rache, Strategy::AsEnc]);
    }
    if keys.params.kind.supports_real_constants() {
        out.push(Strategy::FsEnc);
    }
    out
}

/// Key material from files, or generated from the settings.
fn load_keys(s: &Settings, args: &KeyArgs) -> Result<(PublicKey, Option<KeyMaterial>), CliError> {
    match (&args.public, &args.secret) {
        (Some(p), Some(sk)) => {
            let keys = KeyMaterial::from_bytes(&read_file(p)?, &read_file(sk)?)?;
            Ok((keys.public.clone(), Some(keys)))
        }
        (Some(p), None) => Ok((KeyMaterial::public_from_bytes(&read_file(p)?)?.1, None)),
        (None, Some(_)) => Err(CliError::Usage("--secret needs the matching --public".into())),
        (None, None) => {
            let keys = keygen(&s.backend, s.cache.seed)?;
            if let Some(path) = &args.out_secret {
                write_file(path, &keys.secret_bytes(), true)?;
                let public = path.with_extension("pub");
                write_file(&public, &keys.public_bytes(), false)?;
                println!("generated keys written to {} and {}", public.display(), path.display());
            }
            Ok((keys.public.clone(), Some(keys)))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn encrypt_file(
    s: &Settings,
    key_args: &KeyArgs,
    input: &Path,
    column: usize,
    strategy: Strategy,
    cache: Option<&Path>,
    out: &Path,
    verify: bool,
) -> Result<(), CliError> {
    let data = load_csv(input, column, s.cache.n_d)?;
    let (pk, keys) = load_keys(s, key_args)?;
    if verify && keys.is_none() {
        return Err(CliError::Usage("--verify needs the secret key (--secret)".into()));
    }
    let enc = match cache {
        Some(path) => {
            let pool = StaticRadixPool::from_snapshot(&pk, &s.cache, &read_file(path)?)?;
            Encryptor::with_static_pool(pool, strategy)?
        }
        None => Encryptor::new(&pk, &s.cache, strategy)?,
    };
    let mut rng = s.cache.rng_mode().derive(0xe1).rng();
    let ops = OpCounters::new();
    let mut bytes = Vec::new();
    for v in &data.values {
        let ct = enc.encrypt(v, &mut rng, &ops)?.to_bytes();
        bytes.extend_from_slice(&(ct.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&ct);
    }
    write_file(out, &bytes, false)?;
    let counts = ops.snapshot();
    println!(
        "{} ciphertexts written to {} ({} adds, {} const muls, {} encs, {} stalls)",
        data.values.len(),
        out.display(),
        counts.adds,
        counts.const_muls,
        counts.encs,
        counts.stalls
    );
    if let (true, Some(keys)) = (verify, keys) {
        let cts = read_ciphertexts(&read_file(out)?)?;
        if cts.len() != data.values.len() {
            return Err(CliError::Failure(format!("{} rows in, {} ciphertexts out", data.values.len(), cts.len())));
        }
        let tol = default_tolerance(&keys.params, &s.cache, strategy);
        for (row, (ct, v)) in cts.iter().zip(&data.values).enumerate() {
            let got = keys.secret.dec(ct)?;
            if to_f64(&(got.clone() - v.to_rational())).abs() > tol {
                return Err(CliError::Failure(format!("row {}: {v} decrypted to {}", row + 1, to_f64(&got))));
            }
        }
        println!("verified {} of {} rows", cts.len(), data.values.len());
    }
    Ok(())
}

/// Split a ciphertext file into its length-prefixed records.
fn read_ciphertexts(mut bytes: &[u8]) -> Result<Vec<Ciphertext>, CliError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let bad = || CliError::Failure("truncated ciphertext file".into());
        let len = u32::from_be_bytes(bytes.get(..4).ok_or_else(bad)?.try_into().unwrap()) as usize;
        let record = bytes.get(4..4 + len).ok_or_else(bad)?;
        out.push(Ciphertext::from_bytes(record).map_err(|e| CliError::Failure(e.to_string()))?);
        bytes = &bytes[4 + len..];
    }
    Ok(out)
}

fn cache_warm(s: &Settings, key_args: &KeyArgs, strategy: Strategy, out: &Path) -> Result<(), CliError> {
    let (pk, _) = load_keys(s, key_args)?;
    match strategy {
        Strategy::Vanilla => Err(CliError::Usage("vanilla encryption uses no pool".into())),
        Strategy::Rache | Strategy::AsEnc => {
            let pool = init_static_pool(&pk, &s.cache)?;
            write_file(out, &pool.to_snapshot(), false)?;
            println!("radix pool of {} entries written to {}", pool.len(), out.display());
            Ok(())
        }
        Strategy::FsEnc => {
            let c = &s.cache;
            let mode = c.rng_mode().derive(0xca);
            for (suffix, max, salt) in [("int", c.r_i, 1), ("dec", c.r_d_inv - 1, 2)] {
                let params = StreamPoolParams::new(max, c.queue_len, c.workers);
                let pool = init_stream_pool(&pk, &params, mode.derive(salt))?;
                let path = PathBuf::from(format!("{}.{suffix}", out.display()));
                write_file(&path, &pool.to_snapshot(), false)?;
                println!("{suffix} pool of {} entries written to {}", pool.total_occupancy(), path.display());
            }
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8], secret: bool) -> Result<(), CliError> {
    let mut opts = fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    if secret {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    #[cfg(not(unix))]
    let _ = secret;
    let mut f = opts.open(path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn rand_seed() -> u64 {
    rand::random()
}
