//! Order-preserving data-parallel maps.
//!
//! With the `parallel` feature these dispatch to rayon above a size
//! threshold; without it they are plain loops. Results are collected in
//! index order and any reduction is done by the caller sequentially, so the
//! output is bit-identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the rayon overhead dominates.
pub const PARALLEL_THRESHOLD: usize = 64;

pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range_with_threshold(len, PARALLEL_THRESHOLD, f)
}

/// Like [`map_range`] but for items that are individually expensive
/// (whole trials, perturbation directions).
pub fn map_tasks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range_with_threshold(len, 2, f)
}

fn map_range_with_threshold<T, F>(len: usize, threshold: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if len >= threshold {
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threshold;
    (0..len).map(f).collect()
}

/// Fallible variant; returns the first error in index order.
pub fn try_map_range<T, E, F>(len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_range(len, f).into_iter().collect()
}

pub fn try_map_tasks<T, E, F>(len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_tasks(len, f).into_iter().collect()
}
