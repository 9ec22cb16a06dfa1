//! Data-parallel driver used by the hot loops (window scans, Monte-Carlo
//! trials, brute-force moment sums).
//!
//! Work is always split into fixed-size chunks and the per-chunk results are
//! combined in chunk order, so the output (including floating-point sums) is
//! byte-identical regardless of worker count, and identical between the
//! parallel and sequential builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk size used for index-range work. Fixed so that reductions associate
/// the same way no matter how many workers run.
pub const CHUNK: usize = 4096;

/// Map `f` over `0..n` in fixed chunks and combine the per-chunk values in
/// chunk order. `f` receives a half-open index range.
pub fn map_ranges<T, F, G>(n: usize, f: F, mut combine: G) -> Option<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    G: FnMut(T, T) -> T,
{
    let nchunks = n.div_ceil(CHUNK);
    let chunk_range = |c: usize| (c * CHUNK)..((c + 1) * CHUNK).min(n);

    #[cfg(feature = "parallel")]
    let parts: Vec<T> = (0..nchunks)
        .into_par_iter()
        .map(|c| f(chunk_range(c)))
        .collect();

    #[cfg(not(feature = "parallel"))]
    let parts: Vec<T> = (0..nchunks).map(|c| f(chunk_range(c))).collect();

    parts.into_iter().reduce(|a, b| combine(a, b))
}

/// Map `f` over the items of a slice, preserving order.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
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

/// True when this build actually runs work on a rayon pool.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Configure the global worker pool. Returns the effective worker count.
/// Calling it twice, or after the pool was already used, keeps the existing
/// pool (rayon only allows one global initialisation).
pub fn set_workers(n: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        1
    }
}
