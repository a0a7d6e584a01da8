//! Execution policy shared by the data-parallel kernels.
//!
//! Every heavy operation takes a [`Parallelism`] and routes its work through the helpers
//! here. With the `parallel` feature disabled, or with [`Parallelism::Sequential`], the
//! same closures run in order on the calling thread, so results never depend on the policy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    #[default]
    Sequential,
    Threads(usize),
}

impl Parallelism {
    /// `threads <= 1` means sequential.
    pub fn with_threads(threads: usize) -> Self {
        if threads <= 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Threads(threads)
        }
    }

    pub fn available() -> Self {
        Self::with_threads(
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        )
    }

    pub fn workers(&self) -> usize {
        match self {
            Parallelism::Sequential => 1,
            Parallelism::Threads(n) => *n,
        }
    }

    #[cfg(feature = "parallel")]
    fn is_parallel(&self) -> bool {
        matches!(self, Parallelism::Threads(n) if *n > 1)
    }

    /// Runs `op` inside a pool sized for this policy.
    pub fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers())
                .build()
            {
                return pool.install(op);
            }
        }
        op()
    }

    /// `(0..n).map(f).collect()`, in index order regardless of policy.
    pub fn map_collect<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return self.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Calls `f(chunk_index, chunk)` for consecutive `chunk_len`-sized pieces of `data`.
    pub fn for_each_chunk_mut<T, F>(&self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk_len = chunk_len.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            self.install(|| {
                data.par_chunks_mut(chunk_len)
                    .enumerate()
                    .for_each(|(i, c)| f(i, c))
            });
            return;
        }
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }

    /// `items.into_iter().map(f).collect()`, in input order regardless of policy.
    pub fn map_owned<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return self.install(|| items.into_par_iter().map(&f).collect());
        }
        items.into_iter().map(f).collect()
    }
}

/// Splits `0..len` into `parts` contiguous ranges whose sizes differ by at most one.
pub fn split_range(start: u64, end: u64, parts: usize) -> Vec<(u64, u64)> {
    let parts = parts.max(1) as u64;
    let len = end - start;
    (0..parts)
        .map(|i| {
            let a = start + (len as u128 * i as u128 / parts as u128) as u64;
            let b = start + (len as u128 * (i + 1) as u128 / parts as u128) as u64;
            (a, b)
        })
        .filter(|(a, b)| a < b)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_covers_range() {
        let r = split_range(3, 20, 4);
        assert_eq!(r.first().unwrap().0, 3);
        assert_eq!(r.last().unwrap().1, 20);
        for w in r.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert_eq!(split_range(0, 2, 5).len(), 2);
    }

    #[test]
    fn map_collect_is_policy_independent() {
        let seq = Parallelism::Sequential.map_collect(100, |i| i * i);
        let par = Parallelism::Threads(3).map_collect(100, |i| i * i);
        assert_eq!(seq, par);
    }
}
