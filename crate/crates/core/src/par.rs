//! Trial-level data parallelism.
//!
//! With the `parallel` feature (default) independent trials are spread over
//! a rayon pool; without it they run in a plain loop. Both paths return
//! results in trial-index order, so aggregation never depends on scheduling.

/// Runs `f(0..count)` and collects the results in index order.
pub fn map_trials<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_trials_parallel(count, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_trials_sequential(count, f)
    }
}

pub fn map_trials_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_trials_parallel<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Runs `op` inside a pool bounded to `workers` threads. `None` or a
/// sequential build runs `op` on the caller's thread.
pub fn with_workers<R, OP>(workers: Option<usize>, op: OP) -> R
where
    R: Send,
    OP: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(w) = workers {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
        {
            return pool.install(op);
        }
    }
    let _ = workers;
    op()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v = map_trials(100, |i| i * i);
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(map_trials_sequential(5, |i| i), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn bounded_pool_matches_default() {
        let a = with_workers(Some(2), || map_trials(50, |i| i as u64 * 3));
        let b = map_trials(50, |i| i as u64 * 3);
        assert_eq!(a, b);
    }
}
