//! Task execution for sweeps: an indexed map whose results always come back
//! in index order, regardless of how many workers ran it.

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Executor {
    workers: usize,
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Self { workers: 1 }
    }

    /// `workers = 0` means one per available core.
    pub fn with_workers(workers: usize) -> Self {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        Self { workers }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `(0..n).map(f)`, possibly on several threads. The first error by index wins.
    pub fn map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.workers > 1 && n > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| crate::Error::InvalidConfig(format!("worker pool: {e}")))?;
            let results: Vec<Result<T>> = pool.install(|| (0..n).into_par_iter().map(&f).collect());
            return results.into_iter().collect();
        }
        (0..n).map(f).collect()
    }
}
