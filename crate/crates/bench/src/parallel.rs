use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use streche_core::he::KeyMaterial;
use streche_core::pool::{init_stream_pool, StreamPoolParams};
use streche_core::rng::RngMode;

use crate::error::{BenchError, Result};
use crate::timing::{median, millis, timed};

/// Coefficient range of the pool timed by [`bench_parallel_caching`].
const COEFFICIENT_MAX: u32 = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelPoint {
    pub workers: usize,
    pub median_ms: f64,
    pub runs_ms: Vec<f64>,
    /// First point's median divided by this one's.
    pub speedup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelReport {
    pub pool_size: usize,
    pub points: Vec<ParallelPoint>,
    /// Whether every worker count produced the same decrypted pool.
    pub identical_contents: bool,
}

/// Time offline initialization of a coefficient pool of about `pool_size`
/// entries for each worker count.
pub fn bench_parallel_caching(
    keys: &KeyMaterial,
    pool_size: usize,
    counts: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<ParallelReport> {
    if counts.is_empty() || counts.windows(2).any(|w| w[0] > w[1]) || counts[0] < 1 {
        return Err(BenchError::InvalidOptions(format!(
            "worker counts must be ascending and positive, got {counts:?}"
        )));
    }
    if repetitions < 1 || pool_size < 1 {
        return Err(BenchError::InvalidOptions("need a positive pool size and repetition count".into()));
    }
    let queue_len = pool_size.div_ceil(COEFFICIENT_MAX as usize + 1);
    let mut points: Vec<ParallelPoint> = Vec::new();
    let mut reference: Option<Vec<Vec<BigRational>>> = None;
    let mut identical = true;
    for &workers in counts {
        let params = StreamPoolParams {
            producers: 1,
            start_paused: true,
            ..StreamPoolParams::new(COEFFICIENT_MAX, queue_len, workers)
        };
        let mut runs = Vec::with_capacity(repetitions);
        let mut last = None;
        // The first initialization of each point is a discarded warm-up.
        for rep in 0..=repetitions {
            let (pool, elapsed) = timed(|| init_stream_pool(&keys.public, &params, RngMode::Seeded(seed)));
            let pool = pool?;
            if rep > 0 {
                runs.push(millis(elapsed));
                last = Some(pool);
            }
        }
        let pool = last.expect("at least one repetition");
        let table = pool
            .entries()
            .iter()
            .map(|q| q.iter().map(|c| keys.secret.dec(c)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        match &reference {
            None => reference = Some(table),
            Some(r) => identical &= *r == table,
        }
        let median_ms = median(runs.clone());
        let speedup = points.first().map_or(1.0, |p| p.median_ms / median_ms);
        points.push(ParallelPoint { workers, median_ms, runs_ms: runs, speedup });
    }
    Ok(ParallelReport { pool_size: queue_len * (COEFFICIENT_MAX as usize + 1), points, identical_contents: identical })
}
