use std::collections::HashSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use streche_core::encrypt::{as_enc, czero, czero_with_coins, fs_enc, rache_fast_enc, FsEncParams, OpCounters};
use streche_core::he::{int, BackendParams, KeyMaterial};
use streche_core::pool::{init_static_pool, init_stream_pool, StaticRadixPool, StreamCoeffPool, StreamPoolParams};
use streche_core::radix::{int_digits, parse_decimal};
use streche_core::rng::RngMode;
use streche_core::{keygen, CacheConfig, Error};

fn paillier() -> KeyMaterial {
    keygen(&BackendParams::exact_additive(256), Some(31)).unwrap()
}

fn rlwe() -> KeyMaterial {
    keygen(&BackendParams::approx_rlwe(), Some(32)).unwrap()
}

fn radix_pool(keys: &KeyMaterial, r: u32, n: usize) -> StaticRadixPool {
    let cfg = CacheConfig { r, n, workers: 1, seed: Some(33), ..CacheConfig::default() };
    init_static_pool(&keys.public, &cfg).unwrap()
}

fn coeff_pools(keys: &KeyMaterial, p: &FsEncParams, l: usize) -> (StreamCoeffPool, StreamCoeffPool) {
    let ip = StreamPoolParams::new(p.r_i, l, 1);
    let dp = StreamPoolParams::new(p.r_d_inv - 1, l, 1);
    (
        init_stream_pool(&keys.public, &ip, RngMode::Seeded(1)).unwrap(),
        init_stream_pool(&keys.public, &dp, RngMode::Seeded(2)).unwrap(),
    )
}

#[test]
fn czero_decrypts_to_zero() {
    let keys = paillier();
    let pool = radix_pool(&keys, 2, 10);
    let ops = OpCounters::new();
    for seed in 0..100 {
        let ct = czero(&pool, &mut RngMode::Seeded(seed).rng(), &ops).unwrap();
        assert_eq!(keys.secret.dec(&ct).unwrap(), int(0));
    }
}

#[test]
fn czero_all_tails_is_the_pool_zero() {
    let keys = paillier();
    let pool = radix_pool(&keys, 2, 10);
    let ops = OpCounters::new();
    let ct = czero_with_coins(&pool, &[false; 9], &mut RngMode::Seeded(0).rng(), &ops).unwrap();
    assert_eq!(ops.snapshot().homomorphic_ops(), 0);
    assert_eq!(ct.digest(), pool.zero().digest());
    let all = czero_with_coins(&pool, &[true; 9], &mut RngMode::Seeded(0).rng(), &ops).unwrap();
    assert_eq!(ops.snapshot().adds, 9 * 3);
    assert_eq!(keys.secret.dec(&all).unwrap(), int(0));
    assert!(czero_with_coins(&pool, &[true; 3], &mut RngMode::Seeded(0).rng(), &ops).is_err());
}

#[test]
fn czero_mean_cost_matches_expectation() {
    let keys = keygen(&BackendParams::mock(), None).unwrap();
    let pool = radix_pool(&keys, 2, 10);
    let ops = OpCounters::new();
    let mut rng = RngMode::Seeded(4).rng();
    for _ in 0..10_000 {
        czero(&pool, &mut rng, &ops).unwrap();
    }
    let mean = ops.snapshot().adds as f64 / 1e4;
    // (n - 1)(r + 1) / 2 for levels 2..=n.
    assert!((mean - 13.5).abs() <= 0.05 * 13.5, "{mean}");
}

#[test]
fn rache_examples() {
    let keys = paillier();
    let pool = radix_pool(&keys, 2, 4);
    let mut rng = RngMode::Seeded(5).rng();
    let ops = OpCounters::new();
    assert_eq!(keys.secret.dec(&rache_fast_enc(&pool, &BigUint::from(0u8), &mut rng, &ops).unwrap()).unwrap(), int(0));
    let m = BigUint::from(13u8);
    let digit_sum: u32 = int_digits(&m, 2, 4).unwrap().digits().iter().sum();
    assert_eq!(digit_sum, 3);
    assert!(digit_sum <= 4 * 2);
    for _ in 0..20 {
        ops.reset();
        let before = ops.snapshot();
        let ct = rache_fast_enc(&pool, &m, &mut rng, &ops).unwrap();
        assert_eq!(keys.secret.dec(&ct).unwrap(), int(13));
        let adds = ops.snapshot().since(&before).adds;
        // 3 digit additions plus a CZero costing a multiple of r + 1.
        assert!(adds >= 3 && (adds - 3).is_multiple_of(3), "{adds}");
    }
    // Capacity is r^(n+1).
    assert!(rache_fast_enc(&pool, &BigUint::from(31u8), &mut rng, &ops).is_ok());
    assert!(matches!(rache_fast_enc(&pool, &BigUint::from(32u8), &mut rng, &ops), Err(Error::Capacity(_))));
}

#[test]
fn as_enc_examples() {
    let keys = paillier();
    let pool = radix_pool(&keys, 2, 4);
    let mut rng = RngMode::Seeded(6).rng();
    let ops = OpCounters::new();
    let zero = as_enc(&pool, &BigUint::from(0u8), &mut rng, &ops).unwrap();
    assert_eq!(keys.secret.dec(&zero).unwrap(), int(0));
    assert_eq!(ops.snapshot().homomorphic_ops(), 8);
    ops.reset();
    let a = as_enc(&pool, &BigUint::from(13u8), &mut rng, &ops).unwrap();
    assert_eq!(ops.snapshot().homomorphic_ops(), 5);
    assert_eq!(ops.snapshot().encs, 0);
    let b = as_enc(&pool, &BigUint::from(13u8), &mut rng, &ops).unwrap();
    assert_eq!(keys.secret.dec(&a).unwrap(), int(13));
    assert_eq!(keys.secret.dec(&b).unwrap(), int(13));
    assert_ne!(a.digest(), b.digest());
    assert!(as_enc(&pool, &BigUint::from(15u8), &mut rng, &ops).is_ok());
    assert!(matches!(as_enc(&pool, &BigUint::from(16u8), &mut rng, &ops), Err(Error::Capacity(_))));
}

#[test]
fn as_enc_distinct_payloads() {
    let keys = keygen(&BackendParams::exact_additive(128), Some(7)).unwrap();
    let pool = radix_pool(&keys, 3, 8);
    let mut rng = RngMode::Seeded(7).rng();
    let ops = OpCounters::new();
    let m = BigUint::from(1234u32);
    let fps: HashSet<u64> = (0..1000).map(|_| as_enc(&pool, &m, &mut rng, &ops).unwrap().fingerprint()).collect();
    assert_eq!(fps.len(), 1000);
}

#[test]
fn fs_enc_examples() {
    let keys = rlwe();
    let p = FsEncParams { r_i: 2, n_i: 4, r_d_inv: 10, n_d: 3 };
    let (ip, dp) = coeff_pools(&keys, &p, 8);
    let mut rng = RngMode::Seeded(8).rng();
    let ops = OpCounters::new();
    let tol = 2f64.powi(-10);
    for text in ["0", "3.14", "15.999", "-7.5", "0.001"] {
        let v = parse_decimal(text, 3).unwrap();
        let before = ops.snapshot();
        let ct = fs_enc(&ip, &dp, &v, &p, &mut rng, &ops).unwrap();
        let got = keys.secret.dec_f64(&ct).unwrap();
        assert!((got - v.to_f64()).abs() <= tol, "{text}: {got}");
        let used = ops.snapshot().since(&before);
        assert_eq!(used.adds, 2 * 7);
        let negations = used.const_muls - 7 - 1;
        assert!(negations <= 7 + u64::from(v.is_negative()));
    }
    let big = parse_decimal("16", 3).unwrap();
    assert!(matches!(fs_enc(&ip, &dp, &big, &p, &mut rng, &ops), Err(Error::Capacity(_))));
    let precise = parse_decimal("1.2345", 4).unwrap();
    assert!(matches!(fs_enc(&ip, &dp, &precise, &p, &mut rng, &ops), Err(Error::Precision { .. })));
}

#[test]
fn fs_enc_consumes_two_entries_per_digit() {
    let keys = keygen(&BackendParams::mock(), None).unwrap();
    let p = FsEncParams { r_i: 10, n_i: 3, r_d_inv: 10, n_d: 2 };
    let (ip, dp) = coeff_pools(&keys, &p, 32);
    ip.pause();
    dp.pause();
    ip.enable_audit();
    dp.enable_audit();
    let ops = OpCounters::new();
    let v = parse_decimal("123.45", 2).unwrap();
    let ct = fs_enc(&ip, &dp, &v, &p, &mut RngMode::Seeded(9).rng(), &ops).unwrap();
    assert_eq!(keys.secret.dec(&ct).unwrap(), v.to_rational());
    assert_eq!(ip.audited_count(), 1 + 2 * 3);
    assert_eq!(dp.audited_count(), 2 * 2);
    assert_eq!(ip.total_occupancy(), 11 * 32 - 7);
}

#[test]
fn fs_enc_requires_real_constants() {
    let keys = paillier();
    let p = FsEncParams { r_i: 2, n_i: 4, r_d_inv: 10, n_d: 3 };
    let (ip, dp) = coeff_pools(&keys, &p, 1);
    let v = parse_decimal("1", 3).unwrap();
    let ops = OpCounters::new();
    assert!(matches!(fs_enc(&ip, &dp, &v, &p, &mut RngMode::Seeded(0).rng(), &ops), Err(Error::Capability(_))));
}

#[test]
fn fs_enc_salt_never_changes_the_value() {
    let keys = keygen(&BackendParams::mock(), None).unwrap();
    let p = FsEncParams { r_i: 7, n_i: 4, r_d_inv: 10, n_d: 3 };
    let (ip, dp) = coeff_pools(&keys, &p, 16);
    let ops = OpCounters::new();
    let v = parse_decimal("-1234.567", 3).unwrap();
    let mut fps = HashSet::new();
    for seed in 0..200 {
        let ct = fs_enc(&ip, &dp, &v, &p, &mut RngMode::Seeded(seed).rng(), &ops).unwrap();
        assert_eq!(keys.secret.dec(&ct).unwrap(), v.to_rational());
        fps.insert(ct.fingerprint());
    }
    assert_eq!(fps.len(), 200);
}

#[test]
fn fs_enc_stalls_are_online_encryptions() {
    let keys = keygen(&BackendParams::mock(), None).unwrap();
    let p = FsEncParams { r_i: 10, n_i: 2, r_d_inv: 10, n_d: 1 };
    let (ip, dp) = coeff_pools(&keys, &p, 1);
    ip.pause();
    dp.pause();
    let ops = OpCounters::new();
    let mut rng = RngMode::Seeded(10).rng();
    for text in ["12.3", "45.6", "78.9", "99.9"] {
        let v = parse_decimal(text, 1).unwrap();
        let ct = fs_enc(&ip, &dp, &v, &p, &mut rng, &ops).unwrap();
        assert_eq!(keys.secret.dec(&ct).unwrap(), v.to_rational());
    }
    let counts = ops.snapshot();
    assert!(counts.stalls > 0);
    assert_eq!(counts.encs, counts.stalls);
    assert_eq!(counts.stalls, ip.stall_count() + dp.stall_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn as_enc_roundtrip_and_op_bound(m in 0u32..=10_000, r in prop::sample::select(vec![2u32, 3, 6]), seed: u64) {
        let keys = keygen(&BackendParams::mock(), None).unwrap();
        let n = match r { 2 => 14, 3 => 9, _ => 6 };
        let pool = radix_pool(&keys, r, n);
        let ops = OpCounters::new();
        let ct = as_enc(&pool, &BigUint::from(m), &mut RngMode::Seeded(seed).rng(), &ops).unwrap();
        prop_assert_eq!(keys.secret.dec(&ct).unwrap(), int(i64::from(m)));
        let bound = n as u64 * u64::from(r.max(2)) + n as u64 * u64::from(r - 1);
        prop_assert!(ops.snapshot().homomorphic_ops() <= bound);
    }

    #[test]
    fn rache_roundtrip(m in 0u32..=10_000, seed: u64) {
        let keys = keygen(&BackendParams::mock(), None).unwrap();
        let pool = radix_pool(&keys, 3, 8);
        let ops = OpCounters::new();
        let ct = rache_fast_enc(&pool, &BigUint::from(m), &mut RngMode::Seeded(seed).rng(), &ops).unwrap();
        prop_assert_eq!(keys.secret.dec(&ct).unwrap(), int(i64::from(m)));
    }
}
