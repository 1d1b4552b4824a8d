//! Per-face maps. Results are collected in face order, so any reduction done
//! afterwards is independent of the thread count.

use crate::error::Result;

#[cfg(feature = "parallel")]
pub(crate) fn map_faces<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    // Small meshes are not worth the scheduling overhead.
    if count < 256 {
        return (0..count).map(f).collect();
    }
    let results: Vec<Result<T>> = (0..count).into_par_iter().map(f).collect();
    // Sequential pass so the reported error is always the lowest face id.
    results.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_faces<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..count).map(f).collect()
}
