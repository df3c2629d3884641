//! Execution policy for the embarrassingly parallel loops (realizations,
//! limit-law samples). Results are always collected in index order, so the
//! output of a parallel run is identical to the sequential one.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Sizes the global worker pool. Has no effect without the `parallel`
/// feature, and fails if the pool was already initialised with another size.
#[cfg(feature = "parallel")]
pub fn configure_threads(jobs: usize) -> Result<(), String> {
    if jobs == 0 {
        return Ok(());
    }
    // querying the pool size first would initialise it with the default
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
        Ok(()) => Ok(()),
        Err(_) if rayon::current_num_threads() == jobs => Ok(()),
        Err(e) => Err(e.to_string()),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_jobs: usize) -> Result<(), String> {
    Ok(())
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_indexed`]; the first error in index order wins.
pub fn try_map_indexed<T, E, F>(exec: Execution, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(exec, n, f).into_iter().collect()
}

/// Pairwise (cascade) summation. Order-independent up to the fixed tree shape,
/// which depends only on the slice length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
