//! Batch scheduling for the Monte Carlo estimators.
//!
//! Work is split into fixed-size batches; each batch owns an independent rng
//! substream, so the merged result is identical whether batches run on one
//! thread or many.

/// Samples per batch. Fixed so the shard plan (and thus the sample sequence)
/// never depends on thread count.
pub const BATCH: usize = 4096;

/// Number of batches covering `samples` draws.
pub fn batch_count(samples: usize) -> usize {
    samples.div_ceil(BATCH)
}

/// Size of batch `index` when covering `samples` draws.
pub fn batch_len(samples: usize, index: usize) -> usize {
    BATCH.min(samples - index * BATCH)
}

/// Maps `f` over batch indices, in parallel when the `parallel` feature is
/// enabled. Results come back in index order either way.
pub fn indexed_batch_map<T, F>(batches: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..batches).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..batches).map(f).collect()
    }
}

/// Always-sequential twin of [`indexed_batch_map`]; the benchmark suite uses
/// it as the baseline under any feature set.
pub fn indexed_batch_map_seq<T, F>(batches: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..batches).map(f).collect()
}

/// Caps the global worker pool. `None` leaves the default. Safe to call more
/// than once; only the first call wins.
pub fn init_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}
