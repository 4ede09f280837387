//! Replication fan-out.
//!
//! Results come back indexed by replication, and every reduction downstream
//! runs sequentially in index order, so outputs do not depend on the number
//! of workers.

use rayon::prelude::*;

/// Computes `f(0), ..., f(count - 1)` on `workers` threads.
pub fn map_indexed<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers <= 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to start worker pool");
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

/// Worker count from an explicit value, else `VOTERDYN_WORKERS`, else 1.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var("VOTERDYN_WORKERS").ok()?.parse().ok())
        .unwrap_or(1)
        .max(1)
}
