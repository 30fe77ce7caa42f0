//! Index-parallel map abstraction.
//!
//! Kernels express batch work (over paths or grid nodes) as a map over
//! `0..n`. Results always come back in index order, so any reduction done
//! afterwards is independent of how the work was scheduled.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every index on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

impl<E: Executor> Executor for &E {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (**self).map_indexed(n, f)
    }
}

/// Collects a batch of fallible results, returning the error with the
/// smallest index if any failed.
pub fn collect_results<T, E>(results: Vec<Result<T, E>>) -> Result<Vec<T>, E> {
    results.into_iter().collect()
}

/// Runs `f` for every path index, tagging a failure with its path.
pub fn map_paths<T: Send, E: Executor + ?Sized>(
    exec: &E,
    n_paths: usize,
    f: impl Fn(usize) -> crate::error::Result<T> + Sync + Send,
) -> crate::error::Result<Vec<T>> {
    collect_results(exec.map_indexed(n_paths, |i| f(i).map_err(|e| e.on_path(i))))
}
