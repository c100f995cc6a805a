//! Injection point for path-level parallelism.

use alloc::vec::Vec;

/// Maps an index range to results, preserving index order in the output.
///
/// Implementations may evaluate `f` concurrently but must return results in
/// index order so that every reduction downstream is schedule independent.
pub trait Executor: Sync {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Plain in-order loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}
