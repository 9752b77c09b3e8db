//! Deterministic parallel reductions over index ranges.

use std::ops::Range;

use rayon::prelude::*;

use crate::number::Scalar;

/// Work unit for range splitting. Fixed so that float sums do not depend on the worker count.
pub const CHUNK: usize = 1 << 13;

/// Σ over `0..len` of `f(range)` for consecutive fixed-size ranges, combined left to right.
pub fn sum_ranges<T: Scalar>(len: usize, f: impl Fn(Range<usize>) -> T + Sync) -> T {
    let parts: Vec<T> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(len)))
        .collect();
    parts.into_iter().fold(T::zero(), |a, b| a + b)
}
