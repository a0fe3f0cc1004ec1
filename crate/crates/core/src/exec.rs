//! Parallel-map abstraction; the core runs sequentially, the std crate plugs in threads.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(&self, items: &[T], f: F) -> Vec<R>;

    /// Seconds on some monotone clock, for stage timings; 0 when unavailable.
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(&self, items: &[T], f: F) -> Vec<R> {
        items.iter().map(f).collect()
    }
}
