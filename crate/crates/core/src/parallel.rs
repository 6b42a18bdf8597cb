//! Worker-count knob shared by the scan and Monte Carlo drivers.

use crate::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads (`0` = rayon default).
///
/// Results never depend on the worker count: every parallel loop in the
/// crate computes independent items and collects them in index order.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    Ok(pool.install(f))
}
