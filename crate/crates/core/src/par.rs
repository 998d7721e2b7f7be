//! Path-level data parallelism. Sequential unless the `parallel` feature is on.

use alloc::vec::Vec;

/// Applies `f` to each `stride`-sized chunk of `buf` (chunk index, chunk) and collects results.
pub(crate) fn map_chunks_mut<T, F>(buf: &mut [f64], stride: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut [f64]) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        buf.par_chunks_mut(stride)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        buf.chunks_mut(stride)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect()
    }
}

/// Maps `f` over `0..n`.
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
