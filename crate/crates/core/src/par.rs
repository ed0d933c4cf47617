//! Data-parallel loop helpers.
//!
//! With the `parallel` feature the loops below run on the rayon pool; without
//! it they fall back to plain iterators. Reductions are always evaluated as a
//! fixed-size chunk partition followed by a sequential fold over the chunk
//! partials, so both builds (and every thread count) produce bit-identical
//! sums.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Element count per reduction chunk. Fixed so results never depend on the
/// thread count.
pub const REDUCE_CHUNK: usize = 4096;

/// Below this many elements the parallel build stays on the calling thread.
pub const PAR_THRESHOLD: usize = 1 << 14;

/// Applies `f` to every element.
pub fn for_each_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if data.len() >= PAR_THRESHOLD {
        data.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
        return;
    }
    data.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
}

/// Applies `f` to consecutive chunks of `chunk` elements.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(&mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if data.len() >= PAR_THRESHOLD && data.len() > chunk {
        data.par_chunks_mut(chunk).for_each(&f);
        return;
    }
    data.chunks_mut(chunk).for_each(f);
}

/// Deterministic sum of `f(i)` for `i in 0..len`.
pub fn sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let n_chunks = len.div_ceil(REDUCE_CHUNK);
    let chunk_sum = |c: usize| {
        let start = c * REDUCE_CHUNK;
        let end = (start + REDUCE_CHUNK).min(len);
        (start..end).map(&f).sum::<f64>()
    };
    #[cfg(feature = "parallel")]
    if len >= PAR_THRESHOLD {
        let partials: Vec<f64> = (0..n_chunks).into_par_iter().map(chunk_sum).collect();
        return partials.iter().sum();
    }
    (0..n_chunks).map(chunk_sum).sum()
}

/// Maps `f` over items, preserving order. Used for batch work such as
/// parameter sweeps where each item is an independent trajectory.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
