//! Data-parallel execution helpers.
//!
//! Every hot loop in the crate is a pure map over examples, samples, trees or
//! sweep cells. These helpers run that map with rayon when the `parallel`
//! feature is enabled and fall back to a plain iterator otherwise. Results are
//! collected in index order and reduced sequentially, so outputs are
//! bit-identical across both modes and across thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over a slice, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_slice<T: Sync, U: Send, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U + Send + Sync,
{
    items.par_iter().map(f).collect()
}

/// Map `f` over a slice, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map `f` over an index range, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_range<U: Send, F>(len: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Send + Sync,
{
    (0..len).into_par_iter().map(f).collect()
}

/// Map `f` over an index range, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(len: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..len).map(f).collect()
}

/// Always-sequential twin of [`map_range`]; the bench suite compares the two.
pub fn map_range_seq<U, F>(len: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..len).map(f).collect()
}

/// Deterministic sum of a mapped range: parallel map, ordered sequential fold.
pub fn sum_range<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    map_range(len, f).iter().sum()
}
