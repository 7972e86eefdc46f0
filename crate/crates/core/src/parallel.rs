//! Fan-out over independent work units (tensors, grid points).
//!
//! With the `parallel` feature (default) the maps run on rayon; without it
//! they degrade to plain iteration. Output order always matches input order,
//! so results never depend on thread count.

/// Map over items, in parallel when available.
pub fn map_items<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Always-sequential twin of [`map_items`]; the bench suite compares the two
/// and tests assert identical results.
pub fn map_items_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Size the global worker pool. `None` keeps the default (one worker per
/// core). Calling this more than once is harmless; later calls are ignored.
#[cfg(feature = "parallel")]
pub fn init_thread_pool(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
pub fn init_thread_pool(_threads: Option<usize>) {}
