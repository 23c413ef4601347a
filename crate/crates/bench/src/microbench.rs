use rand::Rng;
use serde::{Deserialize, Serialize};
use streche_core::he::{real, BackendKind, KeyMaterial};
use streche_core::rng::RngMode;

use crate::error::{BenchError, Result};
use crate::timing::{median, timed};

/// Median per-operation latencies of one backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrobenchReport {
    pub backend: BackendKind,
    pub trials: usize,
    pub enc_ns: f64,
    pub add_ns: f64,
    pub mul_plain_ns: f64,
    /// `enc_ns / op_ns`: how many times faster than a fresh encryption.
    pub add_relative: f64,
    pub mul_plain_relative: f64,
}

/// Time `enc`, `eval_add` and `eval_mul_plain` individually over random
/// values in `[1, 20000]`.
pub fn microbench_backend(keys: &KeyMaterial, trials: usize, seed: Option<u64>) -> Result<MicrobenchReport> {
    if trials < 100 {
        return Err(BenchError::InvalidOptions(format!("microbench needs at least 100 trials, got {trials}")));
    }
    let pk = &keys.public;
    let mut rng = RngMode::from_seed(seed).derive(0x4d).rng();
    let exact = !pk.kind().supports_real_constants();
    let draw = |rng: &mut _| {
        let x: f64 = Rng::random_range(rng, 1.0..=20_000.0);
        real(if exact { x.round() } else { x })
    };

    let (mut enc, mut add, mut mul) = (Vec::new(), Vec::new(), Vec::new());
    // Discarded warm-up rounds, then the measured trials.
    let warmup = trials / 10;
    for t in 0..warmup + trials {
        let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let (ca, d_enc) = timed(|| pk.enc(&a, &mut rng));
        let ca = ca?;
        let cb = pk.enc(&b, &mut rng)?;
        let (sum, d_add) = timed(|| pk.eval_add(&ca, &cb));
        let (prod, d_mul) = timed(|| pk.eval_mul_plain(&c, &ca));
        sum?;
        prod?;
        if t >= warmup {
            enc.push(d_enc.as_secs_f64() * 1e9);
            add.push(d_add.as_secs_f64() * 1e9);
            mul.push(d_mul.as_secs_f64() * 1e9);
        }
    }
    let (enc_ns, add_ns, mul_plain_ns) = (median(enc), median(add), median(mul));
    Ok(MicrobenchReport {
        backend: pk.kind(),
        trials,
        enc_ns,
        add_ns,
        mul_plain_ns,
        add_relative: enc_ns / add_ns,
        mul_plain_relative: enc_ns / mul_plain_ns,
    })
}
