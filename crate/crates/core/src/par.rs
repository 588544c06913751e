//! Ordered data-parallel maps with a sequential fallback.
//!
//! Work is split into fixed-size chunks whose partial results are combined
//! by pairwise reduction in chunk order, so the floating-point result is the
//! same whether chunks run on one thread or many.

use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Observations per reduction chunk.
pub const CHUNK_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled and
    /// degrades to [`Execution::Sequential`] otherwise.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `f(i)` for `i in 0..n`, results in index order.
pub fn map_indices<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f` to consecutive index ranges of length [`CHUNK_SIZE`] and
/// reduces the partials pairwise in order.
pub fn chunked_reduce<T, F, M>(n: usize, exec: Execution, f: F, merge: M) -> Option<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
    M: Fn(T, T) -> T,
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    let partials = map_indices(chunks, exec, |c| {
        let start = c * CHUNK_SIZE;
        f(start..(start + CHUNK_SIZE).min(n))
    });
    pairwise(partials, &merge)
}

fn pairwise<T, M: Fn(T, T) -> T>(mut items: Vec<T>, merge: &M) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Sizes the global rayon pool. Returns false if it was already built or
/// the `parallel` feature is off.
pub fn set_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let xs: Vec<f64> = (0..10_007).map(|i| ((i as f64) * 0.37).sin() * 1e3).collect();
        let sum = |exec| {
            chunked_reduce(xs.len(), exec, |r| xs[r].iter().sum::<f64>(), |a, b| a + b).unwrap()
        };
        assert_eq!(
            sum(Execution::Sequential).to_bits(),
            sum(Execution::Parallel).to_bits()
        );
    }

    #[test]
    fn pairwise_keeps_order() {
        let words: Vec<String> = (0..7).map(|i| i.to_string()).collect();
        let joined = pairwise(words, &|a: String, b: String| a + &b).unwrap();
        assert_eq!(joined, "0123456");
        assert!(pairwise(Vec::<u8>::new(), &|a, _| a).is_none());
    }

    #[test]
    fn map_indices_preserves_order() {
        let out = map_indices(1000, Execution::Parallel, |i| i * 2);
        assert!(out.iter().enumerate().all(|(i, &v)| v == 2 * i));
    }
}
