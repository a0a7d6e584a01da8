//! Gray-code scan over `{+-1}^d` for values that are linear in the signs.
//!
//! The value of a sign vector is `sum_y eps_y * row_y` (a vector of `m` field elements), so
//! one sign flip changes it by `+-2 row_y`. Steps follow [`SignVector::from_gray_index`]:
//! between indices `i` and `i + 1` the flipped position is `d - 1 - tz(i + 1)`.
//!
//! [`SignVector::from_gray_index`]: crate::signs::SignVector::from_gray_index

use crate::exec::{split_range, Parallelism};

pub(crate) struct GrayRows {
    p: u32,
    d: usize,
    m: usize,
    rows: Vec<u32>,
    twice: Vec<u32>,
    twice_neg: Vec<u32>,
}

#[inline(always)]
fn add_row(cur: &mut [u32], row: &[u32], p: u32) {
    for (c, &r) in cur.iter_mut().zip(row) {
        let s = *c + r;
        *c = s.min(s.wrapping_sub(p));
    }
}

impl GrayRows {
    /// `rows` holds `d` rows of length `m`, row `y` first at offset `y * m`.
    pub fn new(p: u32, d: usize, m: usize, rows: Vec<u32>) -> GrayRows {
        assert_eq!(rows.len(), d * m);
        assert!(d <= 63);
        let pp = p as u64;
        let twice: Vec<u32> = rows.iter().map(|&g| (2 * g as u64 % pp) as u32).collect();
        let twice_neg = twice
            .iter()
            .map(|&g| if g == 0 { 0 } else { p - g })
            .collect();
        GrayRows {
            p,
            d,
            m,
            rows,
            twice,
            twice_neg,
        }
    }

    pub fn row(&self, y: usize) -> &[u32] {
        &self.rows[y * self.m..(y + 1) * self.m]
    }

    /// Lex word of the vector at Gray index `index` (bit `b` is position `d - 1 - b`).
    fn word_at(index: u64) -> u64 {
        index ^ (index >> 1)
    }

    fn value_of_word(&self, word: u64) -> Vec<u32> {
        let mut cur = vec![0u32; self.m];
        for y in 0..self.d {
            let minus = (word >> (self.d - 1 - y)) & 1 == 1;
            let row = self.row(y);
            if minus {
                let neg: Vec<u32> = row
                    .iter()
                    .map(|&g| if g == 0 { 0 } else { self.p - g })
                    .collect();
                add_row(&mut cur, &neg, self.p);
            } else {
                add_row(&mut cur, row, self.p);
            }
        }
        cur
    }

    /// Calls `visit(index, value)` for every Gray index in `start..end`.
    pub fn scan(&self, start: u64, end: u64, mut visit: impl FnMut(u64, &[u32])) {
        if start >= end {
            return;
        }
        let mut word = Self::word_at(start);
        let mut cur = self.value_of_word(word);
        visit(start, &cur);
        let m = self.m;
        for i in start + 1..end {
            let b = i.trailing_zeros() as usize;
            word ^= 1 << b;
            let pos = self.d - 1 - b;
            let delta = if (word >> b) & 1 == 1 {
                &self.twice_neg[pos * m..(pos + 1) * m]
            } else {
                &self.twice[pos * m..(pos + 1) * m]
            };
            add_row(&mut cur, delta, self.p);
            visit(i, &cur);
        }
    }

    /// Splits `start..end` into independently seeded chunks, scans each into its own
    /// accumulator, and returns the accumulators in range order.
    pub fn scan_chunks<A, I, V>(
        &self,
        start: u64,
        end: u64,
        par: Parallelism,
        init: I,
        visit: V,
    ) -> Vec<A>
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        V: Fn(&mut A, u64, &[u32]) + Sync + Send,
    {
        let len = end.saturating_sub(start);
        let parts = if par.workers() <= 1 {
            1
        } else {
            ((par.workers() * 8) as u64)
                .min(len.div_ceil(1 << 12))
                .max(1) as usize
        };
        let ranges = split_range(start, end, parts);
        par.map_collect(ranges.len(), |c| {
            let (a, b) = ranges[c];
            let mut acc = init();
            self.scan(a, b, |i, v| visit(&mut acc, i, v));
            acc
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signs::SignVector;

    #[test]
    fn scan_matches_direct_evaluation() {
        let p = 31u32;
        let d = 5;
        let m = 3;
        let rows: Vec<u32> = (0..d * m).map(|i| (i as u32 * 7 + 3) % p).collect();
        let g = GrayRows::new(p, d, m, rows.clone());
        let mut seen = 0;
        g.scan(3, 29, |i, v| {
            let e = SignVector::from_gray_index(d, i);
            for k in 0..m {
                let mut s = 0i64;
                for y in 0..d {
                    s += e.get(y) as i64 * rows[y * m + k] as i64;
                }
                assert_eq!(v[k] as i64, s.rem_euclid(p as i64));
            }
            seen += 1;
        });
        assert_eq!(seen, 26);
    }

    #[test]
    fn chunked_scan_is_policy_independent() {
        let g = GrayRows::new(13, 10, 1, (1..=10).collect());
        let count = |par| -> u64 {
            g.scan_chunks(0, 1 << 10, par, || 0u64, |a, _, v| *a += (v[0] == 0) as u64)
                .into_iter()
                .sum()
        };
        assert_eq!(
            count(Parallelism::Sequential),
            count(Parallelism::Threads(3))
        );
    }
}
