//! MSD radix sort of an index array over two coefficient arenas, keyed by the coefficient
//! vector read from the top degree down, and the adjacent common-prefix scan.

use std::cmp::Ordering;

use crate::exec::Parallelism;

use super::Digit;

/// Set on indices that refer to the second arena.
pub(crate) const TAG: u32 = 1 << 31;

const SMALL: usize = 48;

pub(crate) struct Keys<'a, D> {
    pub a: &'a [D],
    pub b: &'a [D],
    pub m: usize,
}

impl<D: Digit> Keys<'_, D> {
    #[inline(always)]
    fn row(&self, idx: u32) -> &[D] {
        let (arena, j) = if idx & TAG != 0 {
            (self.b, (idx & !TAG) as usize)
        } else {
            (self.a, idx as usize)
        };
        &arena[j * self.m..(j + 1) * self.m]
    }

    /// Digit at key position `depth`, i.e. coefficient `m - 1 - depth`.
    #[inline(always)]
    fn digit(&self, idx: u32, depth: usize) -> usize {
        self.row(idx)[self.m - 1 - depth].get() as usize
    }

    fn cmp_from(&self, x: u32, y: u32, depth: usize) -> Ordering {
        let (rx, ry) = (self.row(x), self.row(y));
        for pos in (0..self.m - depth).rev() {
            match rx[pos].cmp(&ry[pos]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        x.cmp(&y)
    }

    /// Length of the common prefix of the two keys, counted from the top coefficient.
    pub fn lcp(&self, x: u32, y: u32) -> usize {
        let (rx, ry) = (self.row(x), self.row(y));
        (0..self.m)
            .rev()
            .take_while(|&pos| rx[pos] == ry[pos])
            .count()
    }
}

/// Stable counting pass on key position `depth`; returns bucket boundaries (`p + 1` entries).
fn bucket_pass<D: Digit>(
    keys: &Keys<D>,
    idx: &mut [u32],
    tmp: &mut [u32],
    depth: usize,
    p: usize,
) -> Vec<usize> {
    let mut start = vec![0usize; p + 1];
    for &x in idx.iter() {
        start[keys.digit(x, depth) + 1] += 1;
    }
    for d in 0..p {
        start[d + 1] += start[d];
    }
    let mut next = start.clone();
    for &x in idx.iter() {
        let d = keys.digit(x, depth);
        tmp[next[d]] = x;
        next[d] += 1;
    }
    idx.copy_from_slice(tmp);
    start
}

/// Sorts `idx` on key positions `depth..m`; returns the number of comparison-sort calls.
fn sort_from<D: Digit>(
    keys: &Keys<D>,
    idx: &mut [u32],
    tmp: &mut [u32],
    depth: usize,
    p: usize,
) -> u64 {
    if idx.len() <= 1 || depth == keys.m {
        return 0;
    }
    if idx.len() <= SMALL {
        let mut comparisons = 0u64;
        idx.sort_unstable_by(|&x, &y| {
            comparisons += 1;
            keys.cmp_from(x, y, depth)
        });
        return comparisons;
    }
    let bounds = bucket_pass(keys, idx, tmp, depth, p);
    let mut comparisons = 0;
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo > 1 {
            comparisons += sort_from(keys, &mut idx[lo..hi], &mut tmp[lo..hi], depth + 1, p);
        }
    }
    comparisons
}

/// Sorts indices ascending by key, splitting the top-level buckets across workers.
pub(crate) fn sort_indices<D: Digit>(
    keys: &Keys<D>,
    idx: &mut [u32],
    p: usize,
    par: Parallelism,
) -> u64 {
    let mut tmp = vec![0u32; idx.len()];
    if idx.len() <= SMALL || keys.m == 0 {
        return sort_from(keys, idx, &mut tmp, 0, p);
    }
    let bounds = bucket_pass(keys, idx, &mut tmp, 0, p);
    let mut jobs = Vec::with_capacity(p);
    let (mut rest_idx, mut rest_tmp) = (idx, tmp.as_mut_slice());
    for w in bounds.windows(2) {
        let len = w[1] - w[0];
        let (bi, ri) = rest_idx.split_at_mut(len);
        let (bt, rt) = rest_tmp.split_at_mut(len);
        rest_idx = ri;
        rest_tmp = rt;
        if len > 1 {
            jobs.push((bi, bt));
        }
    }
    par.map_owned(jobs, |(bi, bt)| sort_from(keys, bi, bt, 1, p))
        .into_iter()
        .sum()
}

/// `out[j] = lcp(idx[j], idx[j + 1])`.
pub(crate) fn adjacent_lcp<D: Digit>(keys: &Keys<D>, idx: &[u32], par: Parallelism) -> Vec<u8> {
    let n = idx.len().saturating_sub(1);
    let mut out = vec![0u8; n];
    let chunk = (n / (par.workers() * 8).max(1)).max(1 << 14);
    par.for_each_chunk_mut(&mut out, chunk, |c, piece| {
        let base = c * chunk;
        for (t, o) in piece.iter_mut().enumerate() {
            *o = keys.lcp(idx[base + t], idx[base + t + 1]) as u8;
        }
    });
    out
}
