//! Deterministic parallel reductions.
//!
//! Results must not depend on the thread count, so reductions are computed
//! as fixed-size chunk partials (parallel) followed by a sequential sum in
//! chunk order. Chunk boundaries depend only on the input length.

use rayon::prelude::*;

/// Chunk size for deterministic reductions. Fixed so the reduction tree is
/// identical for any thread count.
const CHUNK: usize = 4096;

/// Dot product with a thread-count-independent summation order.
pub fn det_dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// Sum of squares with a thread-count-independent summation order.
pub fn det_norm_sq(a: &[f64]) -> f64 {
    a.par_chunks(CHUNK)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// Sum with a thread-count-independent summation order.
pub fn det_sum(a: &[f64]) -> f64 {
    a.par_chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}
