use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluates `f(0..n)` and returns the results in index order, on `workers`
/// threads. The output never depends on the worker count.
pub(crate) fn run_indexed<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 {
        return Ok((0..n as u64).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::numerical(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n as u64).into_par_iter().map(&f).collect()))
}
