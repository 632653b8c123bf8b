//! Fork-join abstraction used by the parallel kernels.
//!
//! The core never spawns threads itself. Kernels split work into a tree whose
//! shape depends only on the input size and hand both halves of every node to
//! an [`Executor`]; the std companion plugs a thread pool in here. Because the
//! tree shape and the leaf-level accumulation order are fixed, results are
//! bitwise identical for every executor and thread count.

use alloc::vec::Vec;
use core::ops::Range;

pub trait Executor: Sync {
    fn join<A, B, RA, RB>(&self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send;
}

/// Runs both halves on the calling thread, left first.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn join<A, B, RA, RB>(&self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        let ra = a();
        let rb = b();
        (ra, rb)
    }
}

/// Splits `0..len` into blocks of `block` items and reduces them pairwise.
///
/// `leaf` maps one block range to a partial result, `combine` merges the left
/// and right partials of a node. Returns `None` when `len == 0`.
pub fn tree_reduce<E, T, L, C>(exec: &E, len: usize, block: usize, leaf: &L, combine: &C) -> Option<T>
where
    E: Executor + ?Sized,
    T: Send,
    L: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    if len == 0 {
        return None;
    }
    let block = block.max(1);
    let blocks = len.div_ceil(block);
    Some(reduce_blocks(exec, 0..blocks, len, block, leaf, combine))
}

fn reduce_blocks<E, T, L, C>(
    exec: &E,
    blocks: Range<usize>,
    len: usize,
    block: usize,
    leaf: &L,
    combine: &C,
) -> T
where
    E: Executor + ?Sized,
    T: Send,
    L: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    if blocks.len() == 1 {
        let start = blocks.start * block;
        return leaf(start..(start + block).min(len));
    }
    let mid = blocks.start + blocks.len() / 2;
    let (left, right) = exec.join(
        || reduce_blocks(exec, blocks.start..mid, len, block, leaf, combine),
        || reduce_blocks(exec, mid..blocks.end, len, block, leaf, combine),
    );
    combine(left, right)
}

/// Evaluates `f` on every index in `0..len`, preserving order.
pub fn map_indexed<E, T, F>(exec: &E, len: usize, block: usize, f: &F) -> Vec<T>
where
    E: Executor + ?Sized,
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    tree_reduce(
        exec,
        len,
        block,
        &|range: Range<usize>| range.map(f).collect::<Vec<T>>(),
        &|mut left: Vec<T>, right: Vec<T>| {
            left.extend(right);
            left
        },
    )
    .unwrap_or_default()
}
