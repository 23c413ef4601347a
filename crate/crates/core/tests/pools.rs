use std::collections::HashSet;
use std::sync::Arc;
use std::time::Duration;

use num_rational::BigRational;
use streche_core::he::{int, BackendParams, KeyMaterial};
use streche_core::pool::{init_static_pool, init_stream_pool, StaticRadixPool, StreamCoeffPool, StreamPoolParams};
use streche_core::rng::RngMode;
use streche_core::{keygen, CacheConfig, Error};

fn paillier(bits: u32) -> KeyMaterial {
    keygen(&BackendParams::exact_additive(bits), Some(21)).unwrap()
}

fn cfg(r: u32, n: usize, workers: usize) -> CacheConfig {
    CacheConfig { r, n, workers, seed: Some(5), ..CacheConfig::default() }
}

fn value_table(keys: &KeyMaterial, pool: &StaticRadixPool) -> Vec<Vec<BigRational>> {
    (0..=pool.max_level())
        .map(|i| pool.level(i).unwrap().iter().map(|c| keys.secret.dec(c).unwrap()).collect())
        .collect()
}

fn stream(keys: &KeyMaterial, c: u32, l: usize, paused: bool) -> StreamCoeffPool {
    let params = StreamPoolParams { start_paused: paused, ..StreamPoolParams::new(c, l, 2) };
    init_stream_pool(&keys.public, &params, RngMode::Seeded(9)).unwrap()
}

#[test]
fn static_pool_layout_and_values() {
    let keys = paillier(128);
    let pool = init_static_pool(&keys.public, &cfg(2, 4, 2)).unwrap();
    assert_eq!(pool.len(), 20);
    assert_eq!(pool.width(), 4);
    let table = value_table(&keys, &pool);
    for (i, level) in table.iter().enumerate() {
        assert!(level.iter().all(|v| *v == int(1 << i)));
    }
    assert_eq!(keys.secret.dec(pool.zero()).unwrap(), int(0));
    for i in 0..=4 {
        let fps: HashSet<u64> = pool.level(i).unwrap().iter().map(|c| c.fingerprint()).collect();
        assert_eq!(fps.len(), 4);
    }
}

#[test]
fn static_pool_is_independent_of_worker_count() {
    let keys = paillier(128);
    let one = init_static_pool(&keys.public, &cfg(2, 4, 1)).unwrap();
    let eight = init_static_pool(&keys.public, &cfg(2, 4, 8)).unwrap();
    assert_eq!(value_table(&keys, &one), value_table(&keys, &eight));
    // Seeded mode reproduces payloads too, not just values.
    let digests = |p: &StaticRadixPool| -> Vec<[u8; 32]> { p.level(3).unwrap().iter().map(|c| c.digest()).collect() };
    assert_eq!(digests(&one), digests(&eight));
}

#[test]
fn static_pool_budget_and_level_errors() {
    let toy = paillier(16);
    assert!(matches!(init_static_pool(&toy.public, &cfg(6, 9, 1)), Err(Error::BudgetOverflow(_))));
    let keys = paillier(128);
    let pool = init_static_pool(&keys.public, &cfg(2, 4, 1)).unwrap();
    let mut rng = RngMode::Seeded(1).rng();
    assert_eq!(keys.secret.dec(pool.sample(0, &mut rng).unwrap()).unwrap(), int(1));
    assert!(matches!(pool.sample(5, &mut rng), Err(Error::LevelOutOfRange { level: 5, max: 4 })));
}

#[test]
fn sampling_is_uniform() {
    let keys = keygen(&BackendParams::mock(), None).unwrap();
    let pool = init_static_pool(&keys.public, &cfg(2, 4, 1)).unwrap();
    let mut rng = RngMode::Seeded(2).rng();
    let mut counts = [0u32; 4];
    for _ in 0..10_000 {
        counts[pool.sample_with_index(2, &mut rng).unwrap().0] += 1;
    }
    // Each count is Binomial(10^4, 1/4): sd ~ 43.3.
    for c in counts {
        assert!((f64::from(c) - 2500.0).abs() < 4.0 * 43.3, "{counts:?}");
    }
    let chi2: f64 = counts.iter().map(|&c| (f64::from(c) - 2500.0).powi(2) / 2500.0).sum();
    // 3 degrees of freedom, p = 0.001 critical value.
    assert!(chi2 < 16.27, "chi2 = {chi2}");
}

#[test]
fn static_snapshot_roundtrip_and_refusals() {
    let keys = paillier(128);
    let c = cfg(3, 3, 2);
    let pool = init_static_pool(&keys.public, &c).unwrap();
    let bytes = pool.to_snapshot();
    let back = StaticRadixPool::from_snapshot(&keys.public, &c, &bytes).unwrap();
    assert_eq!(value_table(&keys, &back), value_table(&keys, &pool));
    assert!(StaticRadixPool::from_snapshot(&keys.public, &cfg(3, 4, 2), &bytes).is_err());
    let other = keygen(&BackendParams::exact_additive(128), Some(99)).unwrap();
    assert!(StaticRadixPool::from_snapshot(&other.public, &c, &bytes).is_err());
    assert!(StaticRadixPool::from_snapshot(&keys.public, &c, &bytes[..bytes.len() - 1]).is_err());
}

#[test]
fn stream_pool_fill() {
    let keys = paillier(128);
    let pool = stream(&keys, 9, 16, true);
    assert_eq!(pool.total_occupancy(), 160);
    for _ in 0..16 {
        assert_eq!(keys.secret.dec(&pool.take(7).unwrap()).unwrap(), int(7));
    }
    assert_eq!(pool.stall_count(), 0);
    let tiny = stream(&keys, 2, 1, true);
    assert_eq!(tiny.total_occupancy(), 3);
}

#[test]
fn stall_fallback_with_refill_suspended() {
    let keys = paillier(128);
    let pool = stream(&keys, 3, 1, true);
    let a = pool.take(3).unwrap();
    let b = pool.take(3).unwrap();
    assert_eq!(pool.stall_count(), 1);
    assert_eq!(keys.secret.dec(&a).unwrap(), int(3));
    assert_eq!(keys.secret.dec(&b).unwrap(), int(3));
    assert_ne!(a.digest(), b.digest());
    pool.resume();
    assert!(pool.wait_until_full(Duration::from_secs(10)));
    assert_eq!(pool.occupancy(3).unwrap(), 1);
    assert_eq!(pool.max_occupancy(), 1);
}

#[test]
fn signed_takes() {
    let keys = paillier(128);
    let pool = stream(&keys, 9, 4, false);
    assert_eq!(keys.secret.dec(&pool.take_signed(-4).unwrap()).unwrap(), int(-4));
    assert_eq!(keys.secret.dec(&pool.take_signed(0).unwrap()).unwrap(), int(0));
    let sum = keys.public.eval_add(&pool.take_signed(6).unwrap(), &pool.take_signed(-6).unwrap()).unwrap();
    assert_eq!(keys.secret.dec(&sum).unwrap(), int(0));
    assert!(matches!(pool.take_signed(-10), Err(Error::CoefficientOutOfRange { coefficient: -10, max: 9 })));
    assert!(matches!(pool.take(10), Err(Error::CoefficientOutOfRange { .. })));
}

#[test]
fn entries_are_never_reused() {
    let keys = keygen(&BackendParams::mock(), None).unwrap();
    let pool = stream(&keys, 4, 8, false);
    pool.enable_audit();
    for i in 0..1000u32 {
        let ct = pool.take(i % 5).unwrap();
        assert_eq!(keys.secret.dec(&ct).unwrap(), int(i64::from(i % 5)));
    }
    assert_eq!(pool.audited_count(), 1000);
    assert_eq!(pool.audit_duplicates(), 0);
    assert!(pool.max_occupancy() <= 8);
}

#[test]
fn occupancy_bound_under_concurrent_stress() {
    let keys = keygen(&BackendParams::mock(), None).unwrap();
    let params = StreamPoolParams { producers: 3, ..StreamPoolParams::new(3, 4, 2) };
    let pool = Arc::new(init_stream_pool(&keys.public, &params, RngMode::Entropy).unwrap());
    pool.enable_audit();
    let watcher = {
        let pool = Arc::clone(&pool);
        std::thread::spawn(move || {
            let mut worst = 0;
            for _ in 0..2000 {
                for k in 0..=3 {
                    worst = worst.max(pool.occupancy(k).unwrap());
                }
            }
            worst
        })
    };
    for i in 0..5000u32 {
        pool.take(i % 4).unwrap();
        if i % 500 == 0 {
            pool.pause();
            std::thread::yield_now();
            pool.resume();
        }
    }
    assert!(watcher.join().unwrap() <= 4);
    assert!(pool.max_occupancy() <= 4);
    assert_eq!(pool.audit_duplicates(), 0);
}

#[test]
fn refill_keeps_up_with_a_slower_consumer() {
    let keys = keygen(&BackendParams::mock(), None).unwrap();
    let pool = stream(&keys, 9, 64, false);
    for i in 0..10_000u32 {
        pool.take(i % 10).unwrap();
        if i % 64 == 0 {
            std::thread::sleep(Duration::from_micros(200));
        }
    }
    assert_eq!(pool.stall_count(), 0);
}

#[test]
fn stream_snapshot_roundtrip() {
    let keys = paillier(128);
    let pool = stream(&keys, 2, 3, true);
    let bytes = pool.to_snapshot();
    let params = StreamPoolParams { start_paused: true, ..StreamPoolParams::new(2, 3, 1) };
    let back = StreamCoeffPool::from_snapshot(&keys.public, &params, RngMode::Seeded(1), &bytes).unwrap();
    assert_eq!(back.total_occupancy(), 9);
    assert_eq!(keys.secret.dec(&back.take(2).unwrap()).unwrap(), int(2));
    let wrong = StreamPoolParams::new(2, 4, 1);
    assert!(StreamCoeffPool::from_snapshot(&keys.public, &wrong, RngMode::Seeded(1), &bytes).is_err());
}
