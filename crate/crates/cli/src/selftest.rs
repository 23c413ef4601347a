//! Roundtrip and invariant checks against one backend.

use num_bigint::BigUint;
use streche_bench::{default_tolerance, Strategy};
use streche_core::encrypt::{as_enc, czero, fs_enc, rache_fast_enc, FsEncParams, OpCounters};
use streche_core::he::{int, real, to_f64, BackendKind, Ciphertext, KeyMaterial};
use streche_core::pool::{init_static_pool, init_stream_pool, StaticRadixPool, StreamPoolParams};
use streche_core::radix::parse_decimal;
use streche_core::rng::HeRng;
use streche_core::CacheConfig;

type Check = fn(&Ctx, &mut HeRng) -> Result<(), String>;

struct Ctx {
    keys: KeyMaterial,
    cfg: CacheConfig,
    tol: f64,
}

impl Ctx {
    fn expect(&self, what: &str, ct: &Ciphertext, want: f64) -> Result<(), String> {
        let got = to_f64(&self.keys.secret.dec(ct).map_err(|e| e.to_string())?);
        if (got - want).abs() > self.tol {
            return Err(format!("{what}: decrypted {got}, expected {want}"));
        }
        Ok(())
    }

    /// A small radix pool large enough for the test values.
    fn radix_pool(&self) -> Result<StaticRadixPool, String> {
        let cfg = CacheConfig { r: 2, n: 10, ..self.cfg.clone() };
        init_static_pool(&self.keys.public, &cfg).map_err(|e| e.to_string())
    }
}

const CHECKS: [(&str, Check); 8] = [
    ("enc/dec roundtrip", roundtrip),
    ("homomorphic add/sub", add_sub),
    ("plaintext multiplication", mul_plain),
    ("serialization", serialization),
    ("czero decrypts to zero", czero_zero),
    ("asenc and rache", radix_encryptors),
    ("fsenc", fsenc),
    ("pool snapshot", snapshot),
];

/// Run every check, printing one line each. Returns the failure count.
pub fn run(keys: KeyMaterial, cfg: &CacheConfig, rng: &mut HeRng) -> usize {
    let tol = default_tolerance(&keys.params, cfg, Strategy::AsEnc);
    let ctx = Ctx { keys, cfg: cfg.clone(), tol };
    let mut failures = 0;
    for (name, check) in CHECKS {
        match check(&ctx, rng) {
            Ok(()) => println!("ok    {name}"),
            Err(e) => {
                failures += 1;
                println!("FAIL  {name}: {e}");
            }
        }
    }
    failures
}

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn roundtrip(ctx: &Ctx, rng: &mut HeRng) -> Result<(), String> {
    for m in [0i64, 1, -1, 13, 12_345, -20_000] {
        let ct = ctx.keys.public.enc_int(m, rng).map_err(err)?;
        ctx.expect(&format!("enc({m})"), &ct, m as f64)?;
    }
    if ctx.keys.params.kind.supports_real_constants() {
        let ct = ctx.keys.public.enc(&real(1499.25), rng).map_err(err)?;
        ctx.expect("enc(1499.25)", &ct, 1499.25)?;
    }
    Ok(())
}

fn add_sub(ctx: &Ctx, rng: &mut HeRng) -> Result<(), String> {
    let pk = &ctx.keys.public;
    let a = pk.enc_int(1234, rng).map_err(err)?;
    let b = pk.enc_int(-34, rng).map_err(err)?;
    ctx.expect("1234 + -34", &pk.eval_add(&a, &b).map_err(err)?, 1200.0)?;
    ctx.expect("1234 - -34", &pk.eval_sub(&a, &b).map_err(err)?, 1268.0)?;
    ctx.expect("-(1234)", &pk.negate(&a).map_err(err)?, -1234.0)
}

fn mul_plain(ctx: &Ctx, rng: &mut HeRng) -> Result<(), String> {
    let pk = &ctx.keys.public;
    let a = pk.enc_int(21, rng).map_err(err)?;
    ctx.expect("3 * 21", &pk.eval_mul_plain(&int(3), &a).map_err(err)?, 63.0)?;
    if ctx.keys.params.kind.supports_real_constants() {
        ctx.expect("0.5 * 21", &pk.eval_mul_plain(&real(0.5), &a).map_err(err)?, 10.5)?;
    } else if pk.eval_mul_plain(&real(0.5), &a).is_ok() {
        return Err("a fractional constant was accepted by an integer-only backend".into());
    }
    Ok(())
}

fn serialization(ctx: &Ctx, rng: &mut HeRng) -> Result<(), String> {
    let pk = &ctx.keys.public;
    let ct = pk.eval_mul_plain(&int(2), &pk.enc_int(77, rng).map_err(err)?).map_err(err)?;
    let back = Ciphertext::from_bytes(&ct.to_bytes()).map_err(err)?;
    if back.digest() != ct.digest() {
        return Err("ciphertext bytes changed across a roundtrip".into());
    }
    ctx.expect("deserialized 2 * 77", &back, 154.0)?;
    let keys = KeyMaterial::from_bytes(&ctx.keys.public_bytes(), &ctx.keys.secret_bytes()).map_err(err)?;
    if keys.public.key_id() != pk.key_id() {
        return Err("public key changed across a roundtrip".into());
    }
    let again = to_f64(&keys.secret.dec(&ct).map_err(err)?);
    if (again - 154.0).abs() > ctx.tol {
        return Err(format!("reloaded secret key decrypted {again}"));
    }
    Ok(())
}

fn czero_zero(ctx: &Ctx, rng: &mut HeRng) -> Result<(), String> {
    let pool = ctx.radix_pool()?;
    let ops = OpCounters::new();
    for _ in 0..20 {
        ctx.expect("czero", &czero(&pool, rng, &ops).map_err(err)?, 0.0)?;
    }
    Ok(())
}

fn radix_encryptors(ctx: &Ctx, rng: &mut HeRng) -> Result<(), String> {
    let pool = ctx.radix_pool()?;
    let ops = OpCounters::new();
    for m in (0u32..=64).chain([1000, 1023]) {
        let v = BigUint::from(m);
        ctx.expect(&format!("as_enc({m})"), &as_enc(&pool, &v, rng, &ops).map_err(err)?, f64::from(m))?;
        ctx.expect(&format!("rache({m})"), &rache_fast_enc(&pool, &v, rng, &ops).map_err(err)?, f64::from(m))?;
    }
    let before = ops.snapshot();
    as_enc(&pool, &BigUint::from(0u8), rng, &ops).map_err(err)?;
    let zero_cost = ops.snapshot().since(&before).homomorphic_ops();
    if zero_cost != 2 * pool.max_level() as u64 {
        return Err(format!("as_enc(0) took {zero_cost} operations, expected {}", 2 * pool.max_level()));
    }
    if as_enc(&pool, &BigUint::from(1024u32), rng, &ops).is_ok() {
        return Err("as_enc accepted a value beyond the pool capacity".into());
    }
    Ok(())
}

fn fsenc(ctx: &Ctx, rng: &mut HeRng) -> Result<(), String> {
    let pk = &ctx.keys.public;
    let params = FsEncParams { r_i: 10, n_i: 4, r_d_inv: 10, n_d: 2 };
    let cfg = CacheConfig { r_i: params.r_i, n_i: params.n_i, n_d: params.n_d, ..ctx.cfg.clone() };
    let mode = cfg.rng_mode().derive(0x5e);
    let ip = init_stream_pool(pk, &StreamPoolParams::new(params.r_i, 4, cfg.workers), mode.derive(1)).map_err(err)?;
    let dp = init_stream_pool(pk, &StreamPoolParams::new(params.r_d_inv - 1, 4, cfg.workers), mode.derive(2))
        .map_err(err)?;
    let ops = OpCounters::new();
    let value = parse_decimal("-123.45", params.n_d).map_err(err)?;
    if ctx.keys.params.kind == BackendKind::ExactAdditive {
        return match fs_enc(&ip, &dp, &value, &params, rng, &ops) {
            Err(streche_core::Error::Capability(_)) => Ok(()),
            other => Err(format!("expected a capability error, got {other:?}")),
        };
    }
    let tol = default_tolerance(&ctx.keys.params, &cfg, Strategy::FsEnc);
    for text in ["0", "-123.45", "9999.99", "0.01", "42"] {
        let v = parse_decimal(text, params.n_d).map_err(err)?;
        let ct = fs_enc(&ip, &dp, &v, &params, rng, &ops).map_err(err)?;
        let got = to_f64(&ctx.keys.secret.dec(&ct).map_err(err)?);
        if (got - v.to_f64()).abs() > tol {
            return Err(format!("fs_enc({text}) decrypted {got}"));
        }
    }
    Ok(())
}

fn snapshot(ctx: &Ctx, rng: &mut HeRng) -> Result<(), String> {
    let pool = ctx.radix_pool()?;
    let cfg = CacheConfig { r: pool.radix(), n: pool.max_level(), ..ctx.cfg.clone() };
    let loaded = StaticRadixPool::from_snapshot(&ctx.keys.public, &cfg, &pool.to_snapshot()).map_err(err)?;
    if loaded.len() != pool.len() {
        return Err(format!("snapshot restored {} of {} entries", loaded.len(), pool.len()));
    }
    let ops = OpCounters::new();
    ctx.expect(
        "as_enc(300) on a restored pool",
        &as_enc(&loaded, &BigUint::from(300u32), rng, &ops).map_err(err)?,
        300.0,
    )
}
