use rayon::ThreadPoolBuilder;

/// Environment variable that overrides the default worker count.
pub const WORKERS_ENV: &str = "WLKIT_WORKERS";

/// Worker count from `WLKIT_WORKERS`, falling back to the number of
/// available processors.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` inside a dedicated rayon pool of `workers` threads (0 means the
/// default). Falls back to the global pool if the pool cannot be built.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    let n = if workers == 0 { default_workers() } else { workers };
    match ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
