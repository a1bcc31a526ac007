//! Execution strategy for per-record loops.
//!
//! Dataset generation and per-record evaluation are independent across
//! records, so they map over indices. With the `parallel` feature (default)
//! the map runs on rayon; without it the same code runs sequentially.
//! Output order is always index order, so results never depend on the
//! strategy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn par_map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Send + Sync,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n` sequentially (the `parallel` feature is disabled).
#[cfg(not(feature = "parallel"))]
pub fn par_map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Send + Sync,
{
    (0..n).map(f).collect()
}

/// Always-sequential map over `0..n`; the baseline the bench suite compares
/// the parallel path against.
pub fn seq_map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree_in_order() {
        let p = par_map_indexed(100, |i| i * i);
        let s = seq_map_indexed(100, |i| i * i);
        assert_eq!(p, s);
    }
}
