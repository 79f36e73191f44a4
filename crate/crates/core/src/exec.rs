//! Execution helpers with a data-parallel default and a sequential fallback.
//!
//! Every parallel loop in this crate partitions work by independent output
//! regions, so results are bitwise identical at any thread count and with the
//! `parallel` feature disabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether the crate was built with the `parallel` feature.
pub const PARALLEL_ENABLED: bool = cfg!(feature = "parallel");

/// Runs `f` inside a thread pool of `threads` workers. `threads == 0` means
/// the default pool. Without the `parallel` feature the closure runs inline.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            f()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool construction")
                .install(f)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Worker count a request resolves to: the default pool size for 0, the
/// request itself otherwise, always 1 without the `parallel` feature.
pub fn effective_threads(requested: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        if requested == 0 {
            rayon::current_num_threads()
        } else {
            requested
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = requested;
        1
    }
}

/// Applies `f(chunk_index, chunk)` to consecutive chunks of `chunk` elements.
/// Chunks are disjoint, so the parallel and sequential paths write the same
/// bytes.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if chunk == 0 || data.is_empty() {
        return;
    }
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sums `f(i)` over `0..n` in f64. Addition order differs between the
/// parallel and sequential paths, so callers must tolerate reassociation;
/// this helper is only used for statistics, never for kernel outputs.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_writes_cover_all_rows() {
        let mut data = vec![0u32; 12];
        for_each_chunk_mut(&mut data, 3, |i, row| {
            for v in row.iter_mut() {
                *v = i as u32 + 1;
            }
        });
        assert_eq!(data, vec![1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4]);
    }

    #[test]
    fn map_indexed_preserves_order() {
        let out = map_indexed(5, |i| i * i);
        assert_eq!(out, vec![0, 1, 4, 9, 16]);
    }

    #[test]
    fn with_threads_returns_closure_value() {
        let v = with_threads(1, || map_indexed(4, |i| i + 1));
        assert_eq!(v, vec![1, 2, 3, 4]);
    }
}
