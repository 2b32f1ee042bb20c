//! Data-parallel map helpers. With the `parallel` feature (default) the
//! heavy inner loops run on rayon; without it they fall back to plain
//! sequential iteration with identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
/// Output order always matches input order.
#[cfg(feature = "parallel")]
pub fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential reference path, always available (used by the benches to
/// compare against the parallel path).
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Cap worker parallelism from the COMPOSE_THREADS environment variable
/// (0 or unset = automatic). Call once near process start; later calls are
/// ignored by rayon.
#[cfg(feature = "parallel")]
pub fn init_thread_pool_from_env() {
    if let Ok(v) = std::env::var("COMPOSE_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn init_thread_pool_from_env() {}
