//! Data-parallel primitives with a sequential fallback.
//!
//! With the default `parallel` feature the helpers fan work out over rayon;
//! without it they run plain loops. Every reduction is defined by a total
//! order (unique index as the final tie-break), so both paths — and any
//! rayon schedule — produce identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `start..end` and collects results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_range<U, F>(start: usize, end: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (start..end).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<U, F>(start: usize, end: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (start..end).map(f).collect()
}

/// Returns the minimum of `key(i)` for `i` in `start..end` under
/// lexicographic order, or `None` for an empty range. `K` must embed a
/// unique component (callers include the index) so the minimum is unique
/// and schedule-independent.
#[cfg(feature = "parallel")]
pub(crate) fn min_over_range<K, F>(start: u64, end: u64, key: F) -> Option<K>
where
    K: PartialOrd + Send,
    F: Fn(u64) -> K + Sync + Send,
{
    (start..end)
        .into_par_iter()
        .map(key)
        .reduce_with(|a, b| if b < a { b } else { a })
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn min_over_range<K, F>(start: u64, end: u64, key: F) -> Option<K>
where
    K: PartialOrd,
    F: Fn(u64) -> K,
{
    let mut best: Option<K> = None;
    for i in start..end {
        let k = key(i);
        match &best {
            Some(b) if !(k < *b) => {}
            _ => best = Some(k),
        }
    }
    best
}

/// Finds the smallest `i` in `start..end` with `pred(i)`, if any.
#[cfg(feature = "parallel")]
pub(crate) fn find_first_in_range<F>(start: u64, end: u64, pred: F) -> Option<u64>
where
    F: Fn(u64) -> bool + Sync + Send,
{
    (start..end).into_par_iter().find_first(|&i| pred(i))
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn find_first_in_range<F>(start: u64, end: u64, pred: F) -> Option<u64>
where
    F: Fn(u64) -> bool,
{
    (start..end).find(|&i| pred(i))
}
