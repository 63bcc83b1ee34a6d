//! Deterministic fan-out of independent jobs (replicas, projections,
//! particles) over a fixed-size worker pool. Results always come back in
//! job order, so any reduction done by the caller is independent of the
//! number of workers.

use rayon::prelude::*;

use crate::{Error, Result};

pub struct Pool {
    inner: rayon::ThreadPool,
    workers: usize,
}

impl Pool {
    /// `workers = 0` means one worker per available core.
    pub fn new(workers: usize) -> Result<Self> {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            workers
        };
        let inner = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        Ok(Self { inner, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(0), ..., f(n-1)` evaluated on the pool, returned in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.workers == 1 {
            return (0..n).map(f).collect();
        }
        self.inner.install(|| (0..n).into_par_iter().map(f).collect())
    }

    /// Like [`Pool::map`]; the error of the lowest failing index wins.
    pub fn try_map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

impl Default for Pool {
    fn default() -> Self {
        Self::new(1).expect("single worker pool")
    }
}
