//! Replica-parallel map-reduce.
//!
//! Replicas are cut into fixed blocks of [`BLOCK`] consecutive indices. Each
//! block is folded sequentially into its own accumulator, and the block
//! accumulators are merged in block order. The partition does not depend on
//! the number of workers, so every result is bit-identical whether it runs
//! on one thread or many.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const BLOCK: u64 = 512;

/// How replicas are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon worker pool; `workers = 0` uses the global pool.
    #[cfg(feature = "parallel")]
    Parallel { workers: usize },
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Auto,
}

impl Execution {
    /// `workers = 1` means sequential; anything else is parallel when the
    /// feature is compiled in.
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 {
            return Execution::Sequential;
        }
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel { workers }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Mergeable per-block state.
pub trait Accumulator: Send {
    fn merge(&mut self, other: Self);
}

/// Runs `step(workspace, acc, replica)` for `replica in 0..n`.
pub fn map_reduce<W, A, MW, MA, S>(n: u64, exec: Execution, make_workspace: MW, make_acc: MA, step: S) -> A
where
    A: Accumulator,
    MW: Fn() -> W + Sync,
    MA: Fn() -> A + Sync,
    S: Fn(&mut W, &mut A, u64) + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let run_block = |b: u64| {
        let mut ws = make_workspace();
        let mut acc = make_acc();
        let end = ((b + 1) * BLOCK).min(n);
        for replica in b * BLOCK..end {
            step(&mut ws, &mut acc, replica);
        }
        acc
    };
    let parts: Vec<A> = match exec {
        Execution::Sequential => (0..blocks).map(run_block).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } => {
            let go = || (0..blocks).into_par_iter().map(run_block).collect();
            if workers == 0 {
                go()
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("failed to build worker pool")
                    .install(go)
            }
        }
        Execution::Auto => {
            #[cfg(feature = "parallel")]
            {
                (0..blocks).into_par_iter().map(run_block).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..blocks).map(run_block).collect()
            }
        }
    };
    let mut total = make_acc();
    for part in parts {
        total.merge(part);
    }
    total
}
