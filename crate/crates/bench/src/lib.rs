//! Benchmark harness for the cached encryptors: workload loading and
//! synthesis, per-operation microbenchmarks, end-to-end strategy runs and
//! parallel pool initialization, with JSON and plain-text reports.

pub mod error;
pub mod microbench;
pub mod parallel;
pub mod run;
pub mod table;
pub mod timing;
pub mod workload;

pub use error::{BenchError, Result};
pub use microbench::{microbench_backend, MicrobenchReport};
pub use parallel::{bench_parallel_caching, ParallelReport};
pub use run::{default_tolerance, run_bench, BenchOptions, BenchReport, Encryptor, Strategy};
pub use table::render_table;
pub use workload::{gen_synthetic, load_csv, Workload, WorkloadSpec};
