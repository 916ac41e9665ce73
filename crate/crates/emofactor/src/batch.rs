//! Order-preserving batch map over independent items.
//!
//! With the `parallel` feature (default) [`run_batch`] fans work out over the
//! rayon pool; without it both entry points are plain sequential maps. Results
//! come back in input order either way, so reductions performed afterwards see
//! a fixed summation order and stay bit-identical across runs and across the
//! two modes. [`run_batch_serial`] is always sequential and exists so the
//! bench suite can compare the two paths inside one binary.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
pub fn run_batch<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
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

/// Sequential twin of [`run_batch`], independent of the `parallel` feature.
pub fn run_batch_serial<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}
