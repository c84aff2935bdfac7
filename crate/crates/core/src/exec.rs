//! Sequential / data-parallel dispatch for the per-node inner loops.
//!
//! Every parallel path computes each output element independently (no
//! cross-thread floating-point reduction), so both strategies produce
//! bit-identical results. Without the `parallel` feature the parallel
//! strategy silently degrades to the sequential one.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this strategy actually fans out to a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `out[i] = f(i)` for `i in 0..len`.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Minimum of `f(i)` under `Ord`, skipping `None`.
    pub fn min_by_key_indexed<K, F>(self, len: usize, f: F) -> Option<K>
    where
        K: Ord + Send,
        F: Fn(usize) -> Option<K> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().filter_map(f).min();
        }
        (0..len).filter_map(f).min()
    }
}
