//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the work runs on the rayon pool, sized by
//! `QBAXTER_THREADS` when [`init_threads`] is called first.

/// Maps `f` over `items`, keeping the input order.
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seq(items, f)
    }
}

/// Sequential version of [`map`].
pub fn map_seq<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Configures the global pool from `QBAXTER_THREADS`; a no-op without the `parallel` feature
/// or when the pool already exists. Returns the thread count in use.
pub fn init_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = std::env::var("QBAXTER_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
