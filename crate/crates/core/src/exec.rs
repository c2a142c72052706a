//! Worker pool used for the data-parallel parts of the pipeline.
//!
//! With the `parallel` feature (default) and more than one worker, maps run
//! on a dedicated rayon pool. Otherwise every map is a plain sequential
//! iterator. Output order always matches input order, so callers get the
//! same results regardless of worker count.

#[cfg(feature = "parallel")]
use std::sync::Arc;

#[derive(Clone)]
pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Self::new(1)
    }

    /// `workers == 0` means one worker per logical core.
    pub fn new(workers: usize) -> Self {
        let workers = if workers == 0 { default_workers() } else { workers };
        #[cfg(feature = "parallel")]
        {
            let pool = (workers > 1).then(|| {
                Arc::new(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .thread_name(|i| format!("veriflow-worker-{i}"))
                        .build()
                        .expect("failed to build worker pool"),
                )
            });
            Self { workers, pool }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Self { workers }
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::new(0)
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
