//! Data-parallel map helpers with a sequential fallback.
//!
//! With the `parallel` feature the work is spread over rayon's pool; without
//! it, or with [`Execution::Sequential`], the same closures run in order on
//! the calling thread. Outputs are always returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch of independent evaluations is scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<I, T, F>(exec: Execution, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Splits `start..end` into fixed-size chunks and maps `f` over them.
///
/// The chunk boundaries depend only on `chunk`, never on the worker count,
/// so folding the returned partials in order is reproducible.
pub fn map_chunks<T, F>(exec: Execution, start: u64, end: u64, chunk: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
{
    assert!(chunk > 0);
    let n_chunks = end.saturating_sub(start).div_ceil(chunk) as usize;
    map_indices(exec, n_chunks, |i| {
        let lo = start + i as u64 * chunk;
        f(lo..(lo + chunk).min(end))
    })
}
