//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! global pool; without it, or with [`Exec::Sequential`], items are processed
//! in order on the calling thread. Output order always matches input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Whether [`Exec::Parallel`] actually runs in parallel in this build.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
