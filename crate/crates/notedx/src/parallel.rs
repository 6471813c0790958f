//! Data-parallel helpers with a sequential fallback.
//!
//! The `parallel` feature (on by default) backs these with rayon. Without it,
//! or when the caller asks for sequential execution (`--deterministic`),
//! everything runs in order on the calling thread. Output order is the input
//! order in both modes; only floating-point *reduction* order can differ
//! between modes, which is why gradient folds take an explicit flag.

use std::sync::OnceLock;

static POOL_INIT: OnceLock<()> = OnceLock::new();

/// Worker count from `NOTEDX_WORKERS` (0 or unset = library default).
pub fn configured_workers() -> usize {
    std::env::var("NOTEDX_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0)
}

/// Build the global thread pool once, honoring `NOTEDX_WORKERS`.
pub fn init_workers() {
    POOL_INIT.get_or_init(|| {
        #[cfg(feature = "parallel")]
        {
            let n = configured_workers();
            if n > 0 {
                // Ignore the error if a pool already exists.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    });
}

/// Order-preserving indexed map over a slice.
pub fn map_indexed<T, U, F>(items: &[T], sequential: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if !sequential {
            use rayon::prelude::*;
            init_workers();
            return items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
        }
    }
    let _ = sequential;
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Fold items into accumulators, then merge.
///
/// Sequential mode folds everything in index order into a single
/// accumulator, so the result is bit-reproducible. Parallel mode folds
/// contiguous chunks independently, then merges the chunk accumulators in
/// chunk order on the calling thread — so for a fixed worker count the
/// floating-point summation order is fixed too, and repeated runs agree.
pub fn fold_chunks<T, A, F, M>(items: &[T], sequential: bool, make: impl Fn() -> A + Sync, fold: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    F: Fn(&mut A, usize, &T) + Sync,
    M: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !sequential && items.len() > 1 {
            use rayon::prelude::*;
            init_workers();
            let workers = rayon::current_num_threads().max(1);
            let chunk = items.len().div_ceil(workers);
            let parts: Vec<A> = items
                .par_chunks(chunk)
                .enumerate()
                .map(|(ci, slice)| {
                    let mut acc = make();
                    for (j, item) in slice.iter().enumerate() {
                        fold(&mut acc, ci * chunk + j, item);
                    }
                    acc
                })
                .collect();
            return parts
                .into_iter()
                .reduce(&merge)
                .unwrap_or_else(make);
        }
    }
    let _ = &merge;
    let mut acc = make();
    for (i, item) in items.iter().enumerate() {
        fold(&mut acc, i, item);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let items: Vec<usize> = (0..1000).collect();
        let seq = map_indexed(&items, true, |i, &x| i * 2 + x);
        let par = map_indexed(&items, false, |i, &x| i * 2 + x);
        assert_eq!(seq, par);
    }

    #[test]
    fn fold_chunks_sums_integers_identically() {
        let items: Vec<u64> = (0..10_000).collect();
        let seq = fold_chunks(&items, true, || 0u64, |a, _, &x| *a += x, |a, b| a + b);
        let par = fold_chunks(&items, false, || 0u64, |a, _, &x| *a += x, |a, b| a + b);
        assert_eq!(seq, par);
    }

    #[test]
    fn fold_chunks_sees_global_indices() {
        let items = vec![1u64; 512];
        let idx_sum = fold_chunks(&items, false, || 0u64, |a, i, _| *a += i as u64, |a, b| a + b);
        assert_eq!(idx_sum, (0..512).sum::<u64>());
    }
}
