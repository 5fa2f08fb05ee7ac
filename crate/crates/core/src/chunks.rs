//! Deterministic chunked map used by the kernel passes.
//!
//! Work is split into fixed-size chunks, mapped (in parallel when the
//! `parallel` feature is on), and the per-chunk results are combined in
//! chunk order. The reduction order is therefore independent of thread
//! scheduling and of whether `parallel` is enabled at all, which keeps
//! floating-point results bit-identical across configurations.

use alloc::vec::Vec;

pub(crate) const CHUNK: usize = 4096;

#[cfg(feature = "parallel")]
pub(crate) fn map_chunks<'a, T, F>(items: &'a [T], f: F) -> Vec<Vec<f64>>
where
    T: Sync,
    F: Fn(usize, &'a [T]) -> Vec<f64> + Sync + Send,
{
    use rayon::prelude::*;
    items
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| f(ci * CHUNK, chunk))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_chunks<'a, T, F>(items: &'a [T], f: F) -> Vec<Vec<f64>>
where
    F: Fn(usize, &'a [T]) -> Vec<f64>,
{
    items
        .chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| f(ci * CHUNK, chunk))
        .collect()
}

/// Sum chunk-local accumulator vectors into one, in chunk order.
pub(crate) fn fold_partials(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; len];
    for part in parts {
        for (o, p) in out.iter_mut().zip(&part) {
            *o += p;
        }
    }
    out
}

/// Concatenate chunk-local output vectors, in chunk order.
pub(crate) fn concat_partials(parts: Vec<Vec<f64>>) -> Vec<f64> {
    let mut out = Vec::new();
    for part in parts {
        out.extend_from_slice(&part);
    }
    out
}

/// Order-preserving map over items, parallel when the feature is on.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
