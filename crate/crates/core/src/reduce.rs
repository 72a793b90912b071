//! Order-fixed summation. Every reduction in the crate goes through these
//! helpers so that results do not depend on the number of worker threads.

use std::ops::{Add, Range};

use rayon::prelude::*;

/// Number of leaf values summed left-to-right before entering the tree.
const LEAF: usize = 32;

/// Streaming pairwise (cascade) summation.
///
/// Leaves of [`LEAF`] consecutive values are summed sequentially; leaves are
/// then merged like a binary counter, so the association pattern depends only
/// on the number of values pushed.
#[derive(Clone, Debug)]
pub struct PairwiseSum<T> {
    leaf: T,
    leaf_len: usize,
    stack: Vec<(u32, T)>,
    zero: T,
}

impl<T: Copy + Add<Output = T>> PairwiseSum<T> {
    pub fn new(zero: T) -> Self {
        Self {
            leaf: zero,
            leaf_len: 0,
            stack: Vec::new(),
            zero,
        }
    }

    #[inline]
    pub fn push(&mut self, v: T) {
        self.leaf = self.leaf + v;
        self.leaf_len += 1;
        if self.leaf_len == LEAF {
            self.flush_leaf();
        }
    }

    fn flush_leaf(&mut self) {
        let mut level = 0u32;
        let mut value = std::mem::replace(&mut self.leaf, self.zero);
        self.leaf_len = 0;
        while let Some(&(l, top)) = self.stack.last() {
            if l != level {
                break;
            }
            self.stack.pop();
            value = top + value;
            level += 1;
        }
        self.stack.push((level, value));
    }

    pub fn finish(mut self) -> T {
        let mut acc = if self.leaf_len > 0 {
            Some(self.leaf)
        } else {
            None
        };
        while let Some((_, v)) = self.stack.pop() {
            acc = Some(match acc {
                Some(a) => v + a,
                None => v,
            });
        }
        acc.unwrap_or(self.zero)
    }
}

/// Pairwise sum of a slice-like iterator.
pub fn pairwise_sum<T, I>(zero: T, values: I) -> T
where
    T: Copy + Add<Output = T>,
    I: IntoIterator<Item = T>,
{
    let mut acc = PairwiseSum::new(zero);
    for v in values {
        acc.push(v);
    }
    acc.finish()
}

/// Split `range` into consecutive chunks of `chunk` indices.
pub fn chunk_ranges(range: Range<u64>, chunk: u64) -> Vec<Range<u64>> {
    let chunk = chunk.max(1);
    let mut out = Vec::new();
    let mut lo = range.start;
    while lo < range.end {
        let hi = (lo + chunk).min(range.end);
        out.push(lo..hi);
        lo = hi;
    }
    out
}

/// Evaluate `f` on every item, using up to `workers` threads, and return the
/// results in input order.
pub fn ordered_map<I, T, F>(items: Vec<I>, workers: usize, f: F) -> Vec<T>
where
    I: Send + Sync,
    T: Send,
    F: Fn(&I) -> T + Send + Sync,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(&f).collect(),
    }
}
