//! Fork-join evaluation of a pure function over family indices.
//!
//! Results are collected into index order before anything looks at them, so
//! the outcome (including which error is reported) does not depend on the
//! worker count.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecutorError {
    #[error("thread count must be at least 1")]
    ZeroThreads,
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct StageExecutor {
    threads: usize,
    #[cfg(feature = "parallel")]
    pool: Option<std::sync::Arc<rayon::ThreadPool>>,
}

impl StageExecutor {
    /// Single-threaded executor.
    pub fn sequential() -> Self {
        StageExecutor {
            threads: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// `None` uses every available core (the global pool). Without the
    /// `parallel` feature all requests run sequentially.
    pub fn new(threads: Option<usize>) -> Result<Self, ExecutorError> {
        if threads == Some(0) {
            return Err(ExecutorError::ZeroThreads);
        }
        let global = threads.is_none();
        let threads = threads.unwrap_or_else(available_threads);
        if threads == 1 {
            return Ok(Self::sequential());
        }
        #[cfg(feature = "parallel")]
        {
            if global {
                return Ok(StageExecutor { threads, pool: None });
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| ExecutorError::Pool(e.to_string()))?;
            Ok(StageExecutor {
                threads,
                pool: Some(std::sync::Arc::new(pool)),
            })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = global;
            Ok(Self::sequential())
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// `f(0), ..., f(n-1)` in index order; the error of the lowest failing
    /// index wins.
    pub fn map<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync,
    {
        #[cfg(feature = "parallel")]
        if self.threads > 1 && n > 1 {
            use rayon::prelude::*;
            let run = || (0..n).into_par_iter().map(&f).collect::<Vec<Result<T, E>>>();
            let results = match &self.pool {
                Some(pool) => pool.install(run),
                None => run(),
            };
            return results.into_iter().collect();
        }
        (0..n).map(f).collect()
    }
}

impl Default for StageExecutor {
    fn default() -> Self {
        Self::new(None).unwrap_or_else(|_| Self::sequential())
    }
}

pub fn available_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads().max(1)
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_in_index_order() {
        for threads in [1, 2, 4] {
            let ex = StageExecutor::new(Some(threads)).unwrap();
            let out: Result<Vec<usize>, ()> = ex.map(100, |i| Ok(i * i));
            assert_eq!(out.unwrap(), (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_is_deterministic() {
        for threads in [1, 2, 4] {
            let ex = StageExecutor::new(Some(threads)).unwrap();
            let out: Result<Vec<usize>, usize> = ex.map(64, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
            assert_eq!(out, Err(3));
        }
    }

    #[test]
    fn zero_threads_rejected() {
        assert_eq!(StageExecutor::new(Some(0)).unwrap_err(), ExecutorError::ZeroThreads);
    }
}
