//! Data-parallel execution with a sequential fallback.
//!
//! Every batch evaluation in the crate goes through [`Exec`], so the same
//! code path can be benchmarked in both modes. Without the `parallel` feature
//! `Exec::Parallel` silently runs sequentially.

/// Execution strategy for embarrassingly parallel loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Map `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Map `f` over a slice, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.map_range(items.len(), |i| f(&items[i]))
    }

    /// Sum of `f(i)` over `0..n`. The reduction order is fixed (chunked
    /// partial sums added left to right) so results do not depend on the
    /// thread count.
    pub fn sum_range<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        const CHUNK: usize = 64;
        let chunks = n.div_ceil(CHUNK);
        let partial = self.map_range(chunks, |c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).map(&f).sum::<f64>()
        });
        partial.into_iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a = Exec::Sequential.sum_range(10_000, f);
        let b = Exec::Parallel.sum_range(10_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
        let v = Exec::Parallel.map(&[1, 2, 3], |x| x * 2);
        assert_eq!(v, vec![2, 4, 6]);
    }
}
