//! Prime-field arithmetic and the per-prime structural context.
//!
//! Elements are plain `u32` values in `[0, p)`; products widen to `u64` before reduction.
//! All conventions that make outputs deterministic live here: the generator is the least
//! primitive root `gamma`, the primitive `2r`-th root is `gamma` itself, and the square-root
//! branch on the residues is `sqrt(gamma^(2n)) = gamma^n` for `0 <= n < r`.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};

/// Discrete-log and power tables are only materialized below this modulus by default.
pub const DEFAULT_TABLE_CAP: u32 = 1 << 24;

#[derive(Debug, Clone)]
pub struct FieldCtx {
    p: u32,
    s: u32,
    q: u32,
    r: u32,
    gamma: u32,
    zeta_ts: Option<u32>,
    prime_factors: Vec<u32>,
    pow_table: Option<Vec<u32>>,
    dlog_table: Option<Vec<u32>>,
    pub(crate) crt_basis: OnceLock<Vec<Vec<u32>>>,
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.s == other.s
            && self.q == other.q
            && self.r == other.r
            && self.gamma == other.gamma
            && self.zeta_ts == other.zeta_ts
            && self.prime_factors == other.prime_factors
    }
}

impl Eq for FieldCtx {}

/// Serializable view of a context, as printed by the `ctx` subcommand.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CtxSummary {
    pub p: u32,
    pub s: u32,
    pub q: u32,
    pub r: u32,
    pub gamma: u32,
    pub zeta2r: u32,
    #[serde(rename = "zetaR")]
    pub zeta_r: u32,
    #[serde(rename = "zetaTS")]
    pub zeta_ts: Option<u32>,
    pub prime_factors_of_p_minus_1: Vec<u32>,
    pub legendre_2: i8,
    pub tables: bool,
}

/// Deterministic trial-division primality; fine for the `p < 2^31` range used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn distinct_prime_factors(mut n: u64) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d as u32);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n as u32);
    }
    out
}

pub fn make_field_ctx(p: u64) -> Result<FieldCtx> {
    make_field_ctx_with_cap(p, DEFAULT_TABLE_CAP)
}

/// Builds the context; the power and discrete-log tables are filled only when `p <= table_cap`.
pub fn make_field_ctx_with_cap(p: u64, table_cap: u32) -> Result<FieldCtx> {
    if p % 2 == 0 {
        return Err(Error::EvenInput(p));
    }
    if p >= 1 << 31 {
        return Err(Error::PrimeTooLarge(p));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let p32 = p as u32;
    let pm1 = p32 - 1;
    let s = pm1.trailing_zeros();
    let q = pm1 >> s;
    let r = pm1 / 2;
    let prime_factors = distinct_prime_factors(pm1 as u64);
    let gamma = (2..p32)
        .find(|&g| {
            prime_factors
                .iter()
                .all(|&l| pow_mod(g, (pm1 / l) as u64, p32) != 1)
        })
        // p = 3: the only generator is 2, and the loop above finds it.
        .expect("every prime has a primitive root");
    let zeta_ts = (s >= 2).then(|| pow_mod(gamma, 2 * q as u64, p32));

    let (pow_table, dlog_table) = if p32 <= table_cap {
        let mut pw = Vec::with_capacity(pm1 as usize);
        let mut dl = vec![0u32; p as usize];
        let mut cur = 1u32;
        for e in 0..pm1 {
            pw.push(cur);
            dl[cur as usize] = e;
            cur = ((cur as u64 * gamma as u64) % p) as u32;
        }
        (Some(pw), Some(dl))
    } else {
        (None, None)
    };

    Ok(FieldCtx {
        p: p32,
        s,
        q,
        r,
        gamma,
        zeta_ts,
        prime_factors,
        pow_table,
        dlog_table,
        crt_basis: OnceLock::new(),
    })
}

pub fn pow_mod(base: u32, mut exp: u64, p: u32) -> u32 {
    let p = p as u64;
    let mut b = base as u64 % p;
    let mut acc = 1u64 % p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        exp >>= 1;
    }
    acc as u32
}

impl FieldCtx {
    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn s(&self) -> u32 {
        self.s
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn r(&self) -> u32 {
        self.r
    }
    pub fn r_usize(&self) -> usize {
        self.r as usize
    }
    pub fn q_usize(&self) -> usize {
        self.q as usize
    }
    /// Least primitive root of `p`.
    pub fn gamma(&self) -> u32 {
        self.gamma
    }
    /// Primitive `2r`-th root of unity; equal to `gamma`.
    pub fn zeta2r(&self) -> u32 {
        self.gamma
    }
    /// Primitive `r`-th root, `gamma^2`; generates the residues.
    pub fn zeta_r(&self) -> u32 {
        self.mul(self.gamma, self.gamma)
    }
    /// Primitive `2^(s-1)`-th root `gamma^(2q)`, defined when `s >= 2`.
    pub fn zeta_ts(&self) -> Option<u32> {
        self.zeta_ts
    }
    pub fn prime_factors(&self) -> &[u32] {
        &self.prime_factors
    }
    pub fn has_tables(&self) -> bool {
        self.pow_table.is_some()
    }
    /// Number of blocks `S_i`, i.e. `2^(s-1)`.
    pub fn block_count(&self) -> usize {
        1usize << (self.s - 1)
    }

    pub fn summary(&self) -> CtxSummary {
        CtxSummary {
            p: self.p,
            s: self.s,
            q: self.q,
            r: self.r,
            gamma: self.gamma,
            zeta2r: self.zeta2r(),
            zeta_r: self.zeta_r(),
            zeta_ts: self.zeta_ts,
            prime_factors_of_p_minus_1: self.prime_factors.clone(),
            legendre_2: self.legendre(2),
            tables: self.has_tables(),
        }
    }

    #[inline]
    pub fn reduce_i64(&self, a: i64) -> u32 {
        a.rem_euclid(self.p as i64) as u32
    }
    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        let p = self.p as u64;
        (if s >= p { s - p } else { s }) as u32
    }
    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + (self.p - b)
        }
    }
    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }
    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }
    pub fn pow(&self, a: u32, e: u64) -> u32 {
        pow_mod(a, e, self.p)
    }
    /// Inverse of a nonzero element (Fermat).
    pub fn inv(&self, a: u32) -> u32 {
        debug_assert!(a % self.p != 0, "inverse of zero");
        self.pow(a, self.p as u64 - 2)
    }
    pub fn div(&self, a: u32, b: u32) -> u32 {
        self.mul(a, self.inv(b))
    }

    /// `gamma^e` for any integer exponent.
    #[inline]
    pub fn gamma_pow(&self, e: i64) -> u32 {
        let e = e.rem_euclid(self.p as i64 - 1) as usize;
        match &self.pow_table {
            Some(t) => t[e],
            None => self.pow(self.gamma, e as u64),
        }
    }

    /// Table of `gamma^e` for `0 <= e < p - 1`, built on demand when the context has none.
    pub(crate) fn gamma_powers(&self) -> std::borrow::Cow<'_, [u32]> {
        match &self.pow_table {
            Some(t) => std::borrow::Cow::Borrowed(t.as_slice()),
            None => {
                let mut v = Vec::with_capacity(self.p as usize - 1);
                let mut cur = 1u32;
                for _ in 0..self.p - 1 {
                    v.push(cur);
                    cur = self.mul(cur, self.gamma);
                }
                std::borrow::Cow::Owned(v)
            }
        }
    }

    /// Discrete log base `gamma`, in `[0, p-1)`; `None` for zero.
    pub fn dlog(&self, a: u32) -> Option<u32> {
        let a = a % self.p;
        if a == 0 {
            return None;
        }
        match &self.dlog_table {
            Some(t) => Some(t[a as usize]),
            None => Some(self.bsgs(a)),
        }
    }

    fn bsgs(&self, a: u32) -> u32 {
        let n = self.p as u64 - 1;
        let m = (n as f64).sqrt().ceil() as u64 + 1;
        let mut baby = HashMap::with_capacity(m as usize);
        let mut cur = 1u32;
        for j in 0..m {
            baby.entry(cur).or_insert(j);
            cur = self.mul(cur, self.gamma);
        }
        let giant = self.inv(self.pow(self.gamma, m));
        let mut y = a;
        for i in 0..=m {
            if let Some(&j) = baby.get(&y) {
                return ((i * m + j) % n) as u32;
            }
            y = self.mul(y, giant);
        }
        unreachable!("gamma generates the multiplicative group")
    }

    /// Euler's criterion mapped to `{-1, 0, 1}`.
    pub fn legendre(&self, a: u32) -> i8 {
        let a = a % self.p;
        if a == 0 {
            return 0;
        }
        if self.pow(a, self.r as u64) == 1 {
            1
        } else {
            -1
        }
    }

    /// `gamma^((p-1)/m)`, a primitive `m`-th root of unity.
    pub fn root_of_unity(&self, m: u64) -> Result<u32> {
        let n = self.p as u64 - 1;
        if m == 0 || n % m != 0 {
            return Err(Error::OrderDoesNotDivide {
                order: m,
                group_order: n,
            });
        }
        Ok(self.gamma_pow((n / m) as i64))
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: u32) -> u64 {
        let mut ord = self.p as u64 - 1;
        for &l in &self.prime_factors {
            while ord % l as u64 == 0 && self.pow(a, ord / l as u64) == 1 {
                ord /= l as u64;
            }
        }
        ord
    }

    /// The square root on the canonical branch: `gamma^(2n) -> gamma^n`.
    pub fn canonical_sqrt(&self, a: u32) -> Result<u32> {
        if self.legendre(a) != 1 {
            return Err(Error::NotAResidue(a));
        }
        let e = self.dlog(a).expect("nonzero");
        debug_assert!(e % 2 == 0);
        Ok(self.gamma_pow((e / 2) as i64))
    }

    /// The residues `gamma^(2n)` for `n = 0..r`, in that order.
    pub fn residues(&self) -> impl Iterator<Item = u32> + '_ {
        let z = self.zeta_r();
        (0..self.r).scan(1u32, move |cur, _| {
            let out = *cur;
            *cur = self.mul(*cur, z);
            Some(out)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_least_primitive_root(p: u32) -> u32 {
        (2..p)
            .find(|&g| {
                let mut seen = vec![false; p as usize];
                let mut cur = 1u32;
                for _ in 0..p - 1 {
                    seen[cur as usize] = true;
                    cur = (cur as u64 * g as u64 % p as u64) as u32;
                }
                seen[1..].iter().all(|&b| b)
            })
            .unwrap()
    }

    #[test]
    fn ctx_examples() {
        let c = make_field_ctx(13).unwrap();
        assert_eq!((c.s(), c.q(), c.r(), c.gamma()), (2, 3, 6, 2));
        let c = make_field_ctx(41).unwrap();
        assert_eq!((c.s(), c.q(), c.r()), (3, 5, 20));
        assert_eq!(c.gamma(), 6);
        let c = make_field_ctx(7).unwrap();
        assert_eq!((c.s(), c.q(), c.r()), (1, 3, 3));
        assert_eq!(c.zeta_ts(), None);
    }

    #[test]
    fn ctx_errors() {
        assert_eq!(make_field_ctx(15), Err(Error::NotPrime(15)));
        assert_eq!(make_field_ctx(16), Err(Error::EvenInput(16)));
        assert_eq!(make_field_ctx(2), Err(Error::EvenInput(2)));
        assert!(matches!(
            make_field_ctx(1u64 << 33 | 1),
            Err(Error::PrimeTooLarge(_))
        ));
    }

    #[test]
    fn generator_is_least_primitive_root() {
        for p in [3u32, 5, 7, 11, 13, 17, 29, 41, 97, 113, 353] {
            let c = make_field_ctx(p as u64).unwrap();
            assert_eq!(c.gamma(), brute_least_primitive_root(p), "p = {p}");
            assert_eq!(c.order(c.gamma()), p as u64 - 1);
        }
    }

    #[test]
    fn legendre_examples() {
        let c13 = make_field_ctx(13).unwrap();
        assert_eq!(c13.legendre(2), -1);
        assert_eq!(c13.legendre(0), 0);
        let c7 = make_field_ctx(7).unwrap();
        assert_eq!(c7.legendre(4), 1);
        // (2/p) = +1 iff p = +-1 mod 8
        for p in [7u64, 17, 23, 41, 3, 5, 11, 13, 29] {
            let c = make_field_ctx(p).unwrap();
            let expected = if p % 8 == 1 || p % 8 == 7 { 1 } else { -1 };
            assert_eq!(c.legendre(2), expected, "p = {p}");
        }
    }

    #[test]
    fn roots_of_unity() {
        let c13 = make_field_ctx(13).unwrap();
        assert_eq!(c13.root_of_unity(12).unwrap(), 2);
        assert_eq!(c13.root_of_unity(2).unwrap(), 12);
        assert!(matches!(
            c13.root_of_unity(5),
            Err(Error::OrderDoesNotDivide { .. })
        ));
        let c41 = make_field_ctx(41).unwrap();
        assert_eq!(c41.root_of_unity(4).unwrap(), pow_mod(6, 10, 41));
        for m in [1u64, 2, 4, 5, 8, 10, 20, 40] {
            let z = c41.root_of_unity(m).unwrap();
            assert_eq!(c41.order(z), m);
        }
    }

    #[test]
    fn zeta_ts_properties() {
        for p in [13u64, 17, 41, 97, 113] {
            let c = make_field_ctx(p).unwrap();
            let z = c.zeta_ts().unwrap();
            let half = 1u64 << (c.s() - 1);
            assert_eq!(c.pow(z, half), 1);
            assert_eq!(c.pow(z, half / 2), p as u32 - 1);
        }
    }

    #[test]
    fn canonical_sqrt_examples() {
        let c7 = make_field_ctx(7).unwrap();
        assert_eq!(c7.gamma(), 3);
        assert_eq!(c7.canonical_sqrt(4).unwrap(), 2);
        let c13 = make_field_ctx(13).unwrap();
        assert_eq!(c13.canonical_sqrt(1).unwrap(), 1);
        assert_eq!(c13.canonical_sqrt(4).unwrap(), 2);
        assert_eq!(c13.canonical_sqrt(2), Err(Error::NotAResidue(2)));
        assert_eq!(c13.canonical_sqrt(0), Err(Error::NotAResidue(0)));
    }

    #[test]
    fn tableless_context_matches_tabled() {
        let a = make_field_ctx(1009).unwrap();
        let b = make_field_ctx_with_cap(1009, 0).unwrap();
        assert!(!b.has_tables());
        assert_eq!(a, b);
        for x in [1u32, 2, 3, 100, 1008] {
            assert_eq!(a.dlog(x), b.dlog(x));
            assert_eq!(a.gamma_pow(x as i64 * 7 - 3), b.gamma_pow(x as i64 * 7 - 3));
        }
        for res in a.residues().take(50) {
            assert_eq!(a.canonical_sqrt(res), b.canonical_sqrt(res));
        }
    }

    #[test]
    fn large_prime_without_tables() {
        let p = 2_147_483_647u64; // 2^31 - 1
        let c = make_field_ctx(p).unwrap();
        assert!(!c.has_tables());
        assert_eq!(c.gamma(), 7);
        let a = c.mul(123_456_789, 123_456_789);
        let root = c.canonical_sqrt(a).unwrap();
        assert_eq!(c.mul(root, root), a);
    }

    #[test]
    fn residues_enumerate_squares() {
        let c = make_field_ctx(29).unwrap();
        let mut res: Vec<u32> = c.residues().collect();
        res.sort();
        let mut squares: Vec<u32> = (1..29u32).map(|x| x * x % 29).collect();
        squares.sort();
        squares.dedup();
        assert_eq!(res, squares);
    }
}
