//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line (straight to stdout, so it shows without `--nocapture`) and then
//! asserts. Tests share one lock so timed sections never overlap.

use std::collections::HashSet;
use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::Rng;
use streche_bench::{
    bench_parallel_caching, gen_synthetic, microbench_backend, run_bench, BenchOptions, Strategy, WorkloadSpec,
};
use streche_core::encrypt::{as_enc, czero, fs_enc, rache_fast_enc, FsEncParams, OpCounters};
use streche_core::he::{int, BackendParams, Ciphertext, KeyMaterial};
use streche_core::pool::{init_static_pool, init_stream_pool, StreamCoeffPool, StreamPoolParams};
use streche_core::radix::{parse_decimal, DecimalValue, Sign};
use streche_core::rng::RngMode;
use streche_core::{keygen, CacheConfig};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, pass: bool, detail: String) {
    let line = format!("criterion {criterion}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn paillier_256() -> &'static KeyMaterial {
    static KEYS: OnceLock<KeyMaterial> = OnceLock::new();
    KEYS.get_or_init(|| keygen(&BackendParams::exact_additive(256), Some(1001)).unwrap())
}

fn paillier_1024() -> &'static KeyMaterial {
    static KEYS: OnceLock<KeyMaterial> = OnceLock::new();
    KEYS.get_or_init(|| keygen(&BackendParams::exact_additive(1024), Some(1002)).unwrap())
}

fn rlwe() -> &'static KeyMaterial {
    static KEYS: OnceLock<KeyMaterial> = OnceLock::new();
    KEYS.get_or_init(|| keygen(&BackendParams::approx_rlwe(), Some(1003)).unwrap())
}

fn radix_cfg(r: u32, n: usize, seed: u64) -> CacheConfig {
    CacheConfig { r, n, seed: Some(seed), ..CacheConfig::default() }
}

/// Radices and the smallest level counts with `r^n > 10^7`.
const SWEEP: [(u32, usize); 3] = [(2, 24), (3, 15), (6, 9)];

struct Sweep {
    inputs: usize,
    failures: Vec<(u32, u64)>,
    /// Per radix: largest op count seen and the bound it must respect.
    worst: Vec<(u32, u64, u64)>,
    /// Per radix: op count of encrypting zero and the expected `2n`.
    zero_ops: Vec<(u32, u64, u64)>,
    elapsed: Duration,
}

/// All `m` in `[0, 10^4]` plus `10^3` random `m < 10^7` for every radix.
fn asenc_sweep() -> &'static Sweep {
    static SWEEP_RESULT: OnceLock<Sweep> = OnceLock::new();
    SWEEP_RESULT.get_or_init(|| {
        let keys = paillier_256();
        let start = Instant::now();
        let mut pick = RngMode::Seeded(7).rng();
        let mut out =
            Sweep { inputs: 0, failures: Vec::new(), worst: Vec::new(), zero_ops: Vec::new(), elapsed: Duration::ZERO };
        for (r, n) in SWEEP {
            let pool = init_static_pool(&keys.public, &radix_cfg(r, n, 11)).unwrap();
            let mut rng = RngMode::Seeded(u64::from(r)).rng();
            let bound = n as u64 * u64::from(r.max(2)) + n as u64 * u64::from(r - 1);
            let mut worst = 0;
            let inputs: Vec<u64> = (0..=10_000).chain((0..1000).map(|_| pick.random_range(0..10_000_000))).collect();
            for &m in &inputs {
                let ops = OpCounters::new();
                let ct = as_enc(&pool, &BigUint::from(m), &mut rng, &ops).unwrap();
                let cost = ops.snapshot().homomorphic_ops();
                worst = worst.max(cost);
                if m == 0 {
                    out.zero_ops.push((r, cost, 2 * n as u64));
                }
                if keys.secret.dec(&ct).unwrap() != int(m as i64) {
                    out.failures.push((r, m));
                }
            }
            out.inputs += inputs.len();
            out.worst.push((r, worst, bound));
        }
        out.elapsed = start.elapsed();
        out
    })
}

#[test]
fn criterion_1_asenc_correctness() {
    let _guard = serial();
    let s = asenc_sweep();
    let fast = s.elapsed < Duration::from_secs(120);
    report(
        1,
        s.failures.is_empty() && fast,
        format!(
            "{} inputs over r in {{2,3,6}}, {} mismatches {:?}, {:.1}s (limit 120s)",
            s.inputs,
            s.failures.len(),
            &s.failures[..s.failures.len().min(5)],
            s.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_op_count_bound() {
    let _guard = serial();
    let s = asenc_sweep();
    let within = s.worst.iter().all(|&(_, worst, bound)| worst <= bound);
    let zero_exact = s.zero_ops.len() == SWEEP.len() && s.zero_ops.iter().all(|&(_, got, want)| got == want);
    report(3, within && zero_exact, format!("(r, max ops, bound) {:?}; (r, zero ops, 2n) {:?}", s.worst, s.zero_ops));
}

/// Integer pool over `0..=r_i`, decimal pool over `0..r_d`, both with
/// queue length `l`.
fn coeff_pools(keys: &KeyMaterial, p: &FsEncParams, l: usize, seed: u64) -> (StreamCoeffPool, StreamCoeffPool) {
    let mode = RngMode::Seeded(seed);
    let ip = StreamPoolParams::new(p.r_i, l, 1);
    let dp = StreamPoolParams::new(p.r_d_inv - 1, l, 1);
    (
        init_stream_pool(&keys.public, &ip, mode.derive(1)).unwrap(),
        init_stream_pool(&keys.public, &dp, mode.derive(2)).unwrap(),
    )
}

struct FsRun {
    values: usize,
    failures: usize,
    max_error: f64,
    elapsed: Duration,
    duplicates: u64,
    audited: usize,
    max_occupancy: usize,
    queue_len: usize,
    stalls: u64,
}

const FS_PARAMS: FsEncParams = FsEncParams { r_i: 1000, n_i: 2, r_d_inv: 10, n_d: 3 };
const FS_QUEUE_LEN: usize = 16;

/// `10^4` random three-decimal values in `[0, 10^6)` through `fs_enc` on
/// approx-rlwe, with both pools audited.
fn fsenc_run() -> &'static FsRun {
    static RUN: OnceLock<FsRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let keys = rlwe();
        let start = Instant::now();
        let (ip, dp) = coeff_pools(keys, &FS_PARAMS, FS_QUEUE_LEN, 21);
        ip.enable_audit();
        dp.enable_audit();
        let mut pick = RngMode::Seeded(22).rng();
        let mut rng = RngMode::Seeded(23).rng();
        let ops = OpCounters::new();
        let (mut failures, mut max_error) = (0, 0.0f64);
        let count = 10_000;
        for _ in 0..count {
            let milli: u64 = pick.random_range(0..1_000_000_000);
            let v = DecimalValue::new(Sign::Positive, BigUint::from(milli / 1000), milli % 1000, 3).unwrap();
            let ct = fs_enc(&ip, &dp, &v, &FS_PARAMS, &mut rng, &ops).unwrap();
            let err = (keys.secret.dec_f64(&ct).unwrap() - v.to_f64()).abs();
            max_error = max_error.max(err);
            if err > 2f64.powi(-10) {
                failures += 1;
            }
        }
        FsRun {
            values: count,
            failures,
            max_error,
            elapsed: start.elapsed(),
            duplicates: ip.audit_duplicates() + dp.audit_duplicates(),
            audited: ip.audited_count() + dp.audited_count(),
            max_occupancy: ip.max_occupancy().max(dp.max_occupancy()),
            queue_len: FS_QUEUE_LEN,
            stalls: ip.stall_count() + dp.stall_count(),
        }
    })
}

#[test]
fn criterion_2_fsenc_correctness() {
    let _guard = serial();
    let run = fsenc_run();
    let fast = run.elapsed < Duration::from_secs(300);
    report(
        2,
        run.failures == 0 && fast,
        format!(
            "{} values, {} outside 2^-10, max error {:.3e}, {:.1}s (limit 300s), r_i={} n_i={} n_d={}",
            run.values,
            run.failures,
            run.max_error,
            run.elapsed.as_secs_f64(),
            FS_PARAMS.r_i,
            FS_PARAMS.n_i,
            FS_PARAMS.n_d
        ),
    );
}

#[test]
fn criterion_4_functionality_ordering() {
    let _guard = serial();
    let r = microbench_backend(rlwe(), 1000, Some(4)).unwrap();
    let add_vs_mul = r.add_ns / r.mul_plain_ns;
    report(
        4,
        r.add_relative >= 5.0 && add_vs_mul >= 10.0,
        format!(
            "median enc {:.0}ns, add {:.0}ns, mul_plain {:.0}ns; enc/add {:.1} (>= 5), add/mul_plain {:.1} (>= 10)",
            r.enc_ns, r.add_ns, r.mul_plain_ns, r.add_relative, add_vs_mul
        ),
    );
}

#[test]
fn criterion_5_asenc_vs_rache() {
    let _guard = serial();
    let keys = paillier_1024();
    let workload = gen_synthetic(&WorkloadSpec::preset("hg38").unwrap().with_count(10_000), 5).unwrap();
    let cfg = radix_cfg(6, 4, 55);
    let opts = BenchOptions::default();
    let rep = run_bench(keys, &cfg, &workload, &[Strategy::Rache, Strategy::AsEnc], &opts).unwrap();
    let ratio = rep.speedup(Strategy::AsEnc, Strategy::Rache).unwrap();
    let (a, b) = (rep.result(Strategy::AsEnc).unwrap(), rep.result(Strategy::Rache).unwrap());
    report(
        5,
        ratio >= 1.5,
        format!(
            "hg38-style {} values (mean {:.3}), asenc {:.0}ms vs rache {:.0}ms, speedup {ratio:.2}x (>= 1.5x)",
            workload.stats.count, workload.stats.mean, a.online_ms, b.online_ms
        ),
    );
}

#[test]
fn criterion_6_fsenc_vs_vanilla() {
    let _guard = serial();
    let keys = rlwe();
    let workload = gen_synthetic(&WorkloadSpec::preset("P_RetailPrice").unwrap().with_count(10_000), 6).unwrap();
    let cfg =
        CacheConfig { r_i: 100, n_i: 2, r_d_inv: 10, n_d: 2, queue_len: 64, seed: Some(66), ..CacheConfig::default() };
    let rep =
        run_bench(keys, &cfg, &workload, &[Strategy::Vanilla, Strategy::FsEnc], &BenchOptions::default()).unwrap();
    let ratio = rep.speedup(Strategy::FsEnc, Strategy::Vanilla).unwrap();
    let fs = rep.result(Strategy::FsEnc).unwrap();
    let van = rep.result(Strategy::Vanilla).unwrap();
    report(
        6,
        ratio >= 1.5 && fs.stalls == 0,
        format!(
            "{} values, L=64, fsenc {:.0}ms vs vanilla {:.0}ms, speedup {ratio:.2}x (>= 1.5x), stalls {} (== 0), {} cores",
            workload.stats.count, fs.online_ms, van.online_ms, fs.stalls, rep.host.cores
        ),
    );
}

#[test]
fn criterion_7_parallel_caching() {
    let _guard = serial();
    let rep = bench_parallel_caching(rlwe(), 10_000, &[1, 8], 3, 77).unwrap();
    let speedup = rep.points[1].speedup;
    report(
        7,
        speedup >= 3.0 && rep.identical_contents,
        format!(
            "{} entries, 1 worker {:.0}ms, 8 workers {:.0}ms, speedup {speedup:.2}x (>= 3x), identical contents {}, {} cores",
            rep.pool_size,
            rep.points[0].median_ms,
            rep.points[1].median_ms,
            rep.identical_contents,
            std::thread::available_parallelism().map_or(1, |n| n.get())
        ),
    );
}

#[test]
fn criterion_8_streaming_discipline() {
    let _guard = serial();
    let run = fsenc_run();
    let keys = rlwe();
    let params = StreamPoolParams { start_paused: true, ..StreamPoolParams::new(9, 1, 1) };
    let pool = init_stream_pool(&keys.public, &params, RngMode::Seeded(88)).unwrap();
    let tol = 2f64.powi(-10);
    let mut correct = true;
    for k in [3i64, 3, 3, -4, -4] {
        let ct = pool.take_signed(k).unwrap();
        correct &= (keys.secret.dec_f64(&ct).unwrap() - k as f64).abs() <= tol;
    }
    let stalls = pool.stall_count();
    report(
        8,
        run.duplicates == 0 && run.audited > 0 && run.max_occupancy <= run.queue_len && correct && stalls == 3,
        format!(
            "{} entries audited with {} repeats, max occupancy {} (L={}), {} stalls in the run; paused L=1 pool: {} stalls (== 3), fallback values correct {}",
            run.audited, run.duplicates, run.max_occupancy, run.queue_len, run.stalls, stalls, correct
        ),
    );
}

#[test]
fn criterion_9_czero_statistics() {
    let _guard = serial();
    let keys = paillier_256();
    let (r, n) = (2u32, 10usize);
    let pool = init_static_pool(&keys.public, &radix_cfg(r, n, 99)).unwrap();
    let ops = OpCounters::new();
    let mut rng = RngMode::Seeded(9).rng();
    let runs = 10_000;
    let mut nonzero = 0;
    for _ in 0..runs {
        let ct = czero(&pool, &mut rng, &ops).unwrap();
        if keys.secret.dec(&ct).unwrap() != int(0) {
            nonzero += 1;
        }
    }
    let mean = ops.snapshot().homomorphic_ops() as f64 / runs as f64;
    let expected = (n as f64 - 1.0) * (f64::from(r) + 1.0) / 2.0;
    let rel = (mean - expected).abs() / expected;
    report(
        9,
        rel <= 0.05 && nonzero == 0,
        format!(
            "{runs} runs r={r} n={n}: mean ops {mean:.3} vs {expected} ({:.2}% off, <= 5%), {nonzero} nonzero decryptions",
            rel * 100.0
        ),
    );
}

fn distinct(cts: &[Ciphertext]) -> bool {
    cts.iter().map(Ciphertext::digest).collect::<HashSet<_>>().len() == cts.len()
}

#[test]
fn criterion_10_randomization() {
    let _guard = serial();
    let trials = 1000;
    let mut notes = Vec::new();
    let mut ok = true;

    let keys = paillier_256();
    let pool = init_static_pool(&keys.public, &radix_cfg(2, 16, 10)).unwrap();
    let m = BigUint::from(13u8);
    let mut rng = RngMode::Seeded(10).rng();
    let ops = OpCounters::new();
    let vanilla: Vec<_> = (0..trials).map(|_| keys.public.enc_int(13, &mut rng).unwrap()).collect();
    let asenc: Vec<_> = (0..trials).map(|_| as_enc(&pool, &m, &mut rng, &ops).unwrap()).collect();
    let rache: Vec<_> = (0..trials).map(|_| rache_fast_enc(&pool, &m, &mut rng, &ops).unwrap()).collect();
    for (name, cts) in [("vanilla", &vanilla), ("asenc", &asenc), ("rache", &rache)] {
        let unique = distinct(cts);
        let values = cts.iter().all(|c| keys.secret.dec(c).unwrap() == int(13));
        ok &= unique && values;
        notes.push(format!("{name}: distinct {unique}, decrypt {values}"));
    }

    let keys = rlwe();
    let params = FsEncParams { r_i: 10, n_i: 3, r_d_inv: 10, n_d: 3 };
    let (ip, dp) = coeff_pools(keys, &params, 32, 101);
    let v = parse_decimal("123.456", 3).unwrap();
    let fsenc: Vec<_> = (0..trials).map(|_| fs_enc(&ip, &dp, &v, &params, &mut rng, &ops).unwrap()).collect();
    let unique = distinct(&fsenc);
    let values = fsenc.iter().all(|c| (keys.secret.dec_f64(c).unwrap() - 123.456).abs() <= 2f64.powi(-10));
    ok &= unique && values;
    notes.push(format!("fsenc: distinct {unique}, decrypt {values}"));

    // Exact arithmetic shows salts are value-neutral, not merely within noise.
    let mock = keygen(&BackendParams::mock(), Some(102)).unwrap();
    let (ip, dp) = coeff_pools(&mock, &params, 4, 103);
    let mut neutral = true;
    for text in ["0", "123.456", "-987.001", "999.999", "0.5"] {
        let v = parse_decimal(text, 3).unwrap();
        for seed in 0..200 {
            let ct = fs_enc(&ip, &dp, &v, &params, &mut RngMode::Seeded(seed).rng(), &ops).unwrap();
            neutral &= mock.secret.dec(&ct).unwrap() == v.to_rational();
        }
    }
    ok &= neutral;
    notes.push(format!("salts value-neutral {neutral}"));
    report(10, ok, format!("{trials} encryptions each; {}", notes.join("; ")));
}
