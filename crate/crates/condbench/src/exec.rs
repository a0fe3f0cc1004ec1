use std::time::Instant;

use condbench_core::exec::Executor;
use rayon::prelude::*;

/// Runs independent tasks on the rayon pool; results keep the input order.
pub struct Rayon {
    start: Instant,
}

impl Rayon {
    pub fn new() -> Self {
        Rayon { start: Instant::now() }
    }
}

impl Default for Rayon {
    fn default() -> Self {
        Rayon::new()
    }
}

impl Executor for Rayon {
    fn map<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(&self, items: &[T], f: F) -> Vec<R> {
        let f = &f;
        items.par_iter().map(|x| f(x)).collect()
    }

    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}
