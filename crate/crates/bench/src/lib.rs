//! Benchmark harness: dataset generation, training drivers, evaluation and
//! rendering, shared between the `silrrt` binary and the acceptance suite.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod render;

pub use error::{BenchError, ExitCode};

/// Environment variable capping the evaluation worker count.
pub const THREADS_ENV: &str = "SILRRT_THREADS";

/// Runs `f` inside a rayon pool sized by `SILRRT_THREADS` (global pool when
/// unset or unparsable).
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}
