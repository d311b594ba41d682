//! Fan-out of independent work items (seeds, sweep points, BFS sources).
//!
//! With the `parallel` feature (default) [`par_map`] runs on the rayon global
//! pool; without it every entry point degrades to the sequential loop.
//! [`seq_map`] is always sequential and exists so both paths can be compared
//! side by side.

/// Maps `f` over `items` in order, one after another.
pub fn seq_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Maps `f` over `items`, in parallel when available. Output order always
/// matches input order.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    seq_map(items, f)
}

/// Sizes the global worker pool. Only the first call has an effect; returns
/// false when the pool was already initialised (or the build is sequential).
pub fn init_workers(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
