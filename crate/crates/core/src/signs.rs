//! Sign vectors `eps in {+1, -1}^d`, the flip shift, orbit statistics and family sizes.
//!
//! Bit `n` set means `eps_n = -1`, so the all-plus vector is the zero word.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector {
    words: Vec<u64>,
    d: usize,
}

impl SignVector {
    pub fn plus(d: usize) -> SignVector {
        SignVector {
            words: vec![0; d.div_ceil(64)],
            d,
        }
    }

    pub fn minus(d: usize) -> SignVector {
        let mut v = SignVector::plus(d);
        for i in 0..d {
            v.set(i, -1);
        }
        v
    }

    /// From signs given as `+1` / `-1` (any negative value counts as minus).
    pub fn from_signs(signs: &[i8]) -> SignVector {
        let mut v = SignVector::plus(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            if s < 0 {
                v.set(i, -1);
            }
        }
        v
    }

    /// Position `n` is minus iff bit `n` of `word` is set; `d <= 64`.
    pub fn from_word(d: usize, word: u64) -> SignVector {
        debug_assert!(d <= 64);
        let mask = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
        SignVector {
            words: if d == 0 { vec![] } else { vec![word & mask] },
            d,
        }
    }

    /// The vector at position `index` of the lexicographic order: the most significant bit
    /// of `index` is position 0, so `d = 2` runs `(+,+), (+,-), (-,+), (-,-)`.
    pub fn from_lex_index(d: usize, index: u64) -> SignVector {
        SignVector::from_word(d, reverse_low_bits(index, d))
    }

    /// The vector visited at step `index` of the Gray-code order.
    pub fn from_gray_index(d: usize, index: u64) -> SignVector {
        SignVector::from_lex_index(d, index ^ (index >> 1))
    }

    pub fn len(&self) -> usize {
        self.d
    }
    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    /// The packed word for `d <= 64`.
    pub fn word(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    #[inline]
    pub fn is_minus(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        if self.is_minus(i) {
            -1
        } else {
            1
        }
    }

    pub fn set(&mut self, i: usize, sign: i8) {
        let bit = 1u64 << (i % 64);
        if sign < 0 {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn negated(&self) -> SignVector {
        let mut v = self.clone();
        for i in 0..self.d {
            v.flip(i);
        }
        v
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.d).map(|i| self.get(i)).collect()
    }

    pub fn minus_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `sigma^n(eps)_i = (-1)^floor((i + n) / d) eps_((i + n) mod d)`, for any integer `n`.
    pub fn flip_shift(&self, n: i64) -> SignVector {
        let d = self.d;
        if d == 0 {
            return self.clone();
        }
        let n = n.rem_euclid(2 * d as i64) as usize;
        let mut out = SignVector::plus(d);
        for i in 0..d {
            let j = i + n;
            let wraps = (j / d) % 2 == 1;
            if self.is_minus(j % d) != wraps {
                out.set(i, -1);
            }
        }
        out
    }

    /// Hex rendering of the packed bits, least significant word last.
    pub fn to_hex(&self) -> String {
        let mut s = String::from("0x");
        for (k, w) in self.words.iter().rev().enumerate() {
            if k == 0 {
                s.push_str(&format!("{w:x}"));
            } else {
                s.push_str(&format!("{w:016x}"));
            }
        }
        if self.words.is_empty() {
            s.push('0');
        }
        s
    }

    /// Accepts `(+,-,+)`, `+-+`, `(1,-1,1)` or a hex word `0x5` together with `d`.
    pub fn parse(text: &str, d: Option<usize>) -> Result<SignVector> {
        let t = text.trim();
        if let Some(hex) = t.strip_prefix("0x") {
            let d = d.ok_or_else(|| Error::Parse("a hex sign word needs a length".into()))?;
            let mut v = SignVector::plus(d);
            let digits: Vec<char> = hex.chars().rev().collect();
            for (k, ch) in digits.iter().enumerate() {
                let nib = ch
                    .to_digit(16)
                    .ok_or_else(|| Error::Parse(format!("bad hex digit '{ch}'")))?;
                for b in 0..4 {
                    if nib >> b & 1 == 1 {
                        let i = 4 * k + b;
                        if i >= d {
                            return Err(Error::Parse(format!("hex word wider than {d}")));
                        }
                        v.set(i, -1);
                    }
                }
            }
            return Ok(v);
        }
        let inner = t.trim_start_matches('(').trim_end_matches(')');
        let tokens: Vec<&str> = if inner.contains(',') {
            inner.split(',').map(str::trim).collect()
        } else {
            inner
                .char_indices()
                .filter(|(_, c)| !c.is_whitespace())
                .map(|(i, c)| &inner[i..i + c.len_utf8()])
                .collect()
        };
        let signs = tokens
            .iter()
            .map(|tok| match *tok {
                "+" | "1" | "+1" => Ok(1),
                "-" | "-1" | "\u{2212}" | "\u{2212}1" => Ok(-1),
                other => Err(Error::Parse(format!("bad sign '{other}'"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        if signs.is_empty() {
            return Err(Error::Parse("empty sign vector".into()));
        }
        if let Some(d) = d {
            if d != signs.len() {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: signs.len(),
                });
            }
        }
        Ok(SignVector::from_signs(&signs))
    }
}

fn reverse_low_bits(x: u64, d: usize) -> u64 {
    if d == 0 {
        0
    } else {
        x.reverse_bits() >> (64 - d)
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for i in 0..self.d {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if self.is_minus(i) { "-" } else { "+" })?;
        }
        f.write_str(")")
    }
}

impl Serialize for SignVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitStats {
    pub order: usize,
    pub alt_order: usize,
    pub orbit_size: usize,
}

/// Order and alternating order of `eps` under the flip shift, by iterating `sigma`.
pub fn orbit_stats(eps: &SignVector) -> OrbitStats {
    let neg = eps.negated();
    let mut cur = eps.clone();
    let mut alt = None;
    for n in 1..=2 * eps.len() {
        cur = cur.flip_shift(1);
        if alt.is_none() && cur == neg {
            alt = Some(n);
        }
        if cur == *eps {
            let alt_order = alt.expect("sigma^order = id is preceded by a negation");
            return OrbitStats {
                order: n,
                alt_order,
                orbit_size: n,
            };
        }
    }
    unreachable!("sigma^(2d) is the identity")
}

/// Least divisor `m` of `d` with `d/m` odd and `eps_(m x + y) = (-1)^x eps_y`.
pub fn alternating_order_structural(eps: &SignVector) -> usize {
    let d = eps.len();
    (1..=d)
        .filter(|m| d % m == 0 && (d / m) % 2 == 1)
        .find(|&m| {
            (m..d).all(|n| {
                let flipped = (n / m) % 2 == 1;
                eps.is_minus(n) == (eps.is_minus(n % m) != flipped)
            })
        })
        .unwrap_or(d)
}

fn family_size_cache() -> &'static Mutex<HashMap<u64, BigUint>> {
    static CACHE: std::sync::OnceLock<Mutex<HashMap<u64, BigUint>>> = std::sync::OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `N(d) = 2^d - sum_{l | d, l < d} N(l)`, so that `sum_{l | d} N(l) = 2^d`.
///
/// For odd `d` this is the number of length-`d` vectors of alternating order exactly `d`.
/// For even `d` it undercounts them: a divisor `l` with `d / l` even never occurs as an
/// alternating order of a length-`d` vector, yet the recursion subtracts it.
pub fn family_size(d: u64) -> BigUint {
    assert!(d >= 1, "family size needs d >= 1");
    if let Some(v) = family_size_cache().lock().unwrap().get(&d) {
        return v.clone();
    }
    let mut n = BigUint::one() << d;
    for l in (1..d).filter(|l| d % l == 0) {
        n -= family_size(l);
    }
    family_size_cache().lock().unwrap().insert(d, n.clone());
    n
}

/// `N'(d) = N(d) / (2d)`, the number of flip-shift orbits of exact alternating order `d`.
pub fn family_orbit_count(d: u64) -> BigRational {
    BigRational::new(family_size(d).into(), (2 * d).into())
}

/// Number of block-sign choices for an alternating-periodic family of period `d`: `2^d`.
pub fn ts_family_size(d: u64) -> BigUint {
    BigUint::one() << d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumOrder {
    Lexicographic,
    Gray,
}

/// Sign vectors at indices `start..end` of the chosen order over `{+-1}^d`, `d <= 63`.
pub fn enumerate_sign_vectors(
    d: usize,
    start: u64,
    end: u64,
    order: EnumOrder,
) -> Result<impl Iterator<Item = SignVector>> {
    if d > 63 {
        return Err(Error::TooLarge {
            what: "sign vector length",
            value: d as u64,
            cap: 63,
        });
    }
    let len = 1u64 << d;
    if start > end || end > len {
        return Err(Error::RangeOutOfBounds { start, end, len });
    }
    Ok((start..end).map(move |i| match order {
        EnumOrder::Lexicographic => SignVector::from_lex_index(d, i),
        EnumOrder::Gray => SignVector::from_gray_index(d, i),
    }))
}

/// `sum_{l | d} N(l)`, which equals `2^d`.
pub fn divisor_sum_of_family_sizes(d: u64) -> BigUint {
    (1..=d)
        .filter(|l| d % l == 0)
        .map(family_size)
        .fold(BigUint::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(s: &str) -> SignVector {
        SignVector::parse(s, None).unwrap()
    }

    #[test]
    fn flip_shift_examples() {
        assert_eq!(sv("(+,+,-)").flip_shift(1), sv("(+,-,-)"));
        let e = sv("(+,-,-,+,+)");
        assert_eq!(e.flip_shift(5), e.negated());
        assert_eq!(e.flip_shift(10), e);
        assert_eq!(e.flip_shift(-1).flip_shift(1), e);
    }

    #[test]
    fn single_shift_is_rotate_and_negate() {
        let e = sv("(-,+,+,-)");
        // (eps_1, ..., eps_{d-1}, -eps_0)
        assert_eq!(e.flip_shift(1), sv("(+,+,-,+)"));
    }

    #[test]
    fn orbit_examples() {
        let e = sv("(+,+,-,-,+,+)");
        let st = orbit_stats(&e);
        assert_eq!((st.alt_order, st.order), (2, 4));
        assert_eq!(alternating_order_structural(&e), 2);
        assert_eq!(alternating_order_structural(&SignVector::plus(6)), 6);
        assert_eq!(orbit_stats(&SignVector::plus(6)).alt_order, 6);
        assert_eq!(orbit_stats(&sv("(+)")).alt_order, 1);
    }

    #[test]
    fn family_sizes() {
        assert_eq!(family_size(1), BigUint::from(2u32));
        assert_eq!(family_size(2), BigUint::from(2u32));
        assert_eq!(family_size(4), BigUint::from(12u32));
        assert_eq!(
            family_orbit_count(16),
            BigRational::new(65280.into(), 32.into())
        );
        assert_eq!(ts_family_size(4), BigUint::from(16u32));
        for d in 1..=64u64 {
            assert_eq!(
                divisor_sum_of_family_sizes(d),
                BigUint::one() << d,
                "d = {d}"
            );
        }
    }

    #[test]
    fn family_size_counts_exact_alternating_order() {
        for d in (1..=11usize).step_by(2) {
            let count = (0..1u64 << d)
                .filter(|&w| alternating_order_structural(&SignVector::from_word(d, w)) == d)
                .count();
            assert_eq!(BigUint::from(count), family_size(d as u64), "d = {d}");
        }
    }

    #[test]
    fn enumeration_orders() {
        let lex: Vec<String> = enumerate_sign_vectors(2, 0, 4, EnumOrder::Lexicographic)
            .unwrap()
            .map(|v| v.to_string())
            .collect();
        assert_eq!(lex, ["(+,+)", "(+,-)", "(-,+)", "(-,-)"]);
        let gray: Vec<SignVector> = enumerate_sign_vectors(3, 0, 8, EnumOrder::Gray)
            .unwrap()
            .collect();
        for w in gray.windows(2) {
            let diff = (0..3).filter(|&i| w[0].get(i) != w[1].get(i)).count();
            assert_eq!(diff, 1);
        }
        assert_eq!(
            enumerate_sign_vectors(3, 4, 8, EnumOrder::Lexicographic)
                .unwrap()
                .count(),
            4
        );
        assert!(matches!(
            enumerate_sign_vectors(3, 4, 9, EnumOrder::Gray),
            Err(Error::RangeOutOfBounds { .. })
        ));
    }

    #[test]
    fn rendering_and_parsing() {
        let e = sv("+--+");
        assert_eq!(e.to_string(), "(+,-,-,+)");
        assert_eq!(e.to_hex(), "0x6");
        assert_eq!(SignVector::parse("0x6", Some(4)).unwrap(), e);
        assert_eq!(SignVector::parse("(1,-1,-1,1)", Some(4)).unwrap(), e);
        assert!(SignVector::parse("0x10", Some(4)).is_err());
        assert!(SignVector::parse("(+,*)", None).is_err());
        assert!(matches!(
            SignVector::parse("(+,-)", Some(3)),
            Err(Error::LengthMismatch { .. })
        ));
        let long = SignVector::minus(70);
        assert_eq!(long.to_hex(), "0x3fffffffffffffffff");
        assert_eq!(SignVector::parse(&long.to_hex(), Some(70)).unwrap(), long);
    }

    #[test]
    fn alternating_order_matches_orbit_exhaustively_small() {
        for d in 1..=10usize {
            for w in 0..1u64 << d {
                let e = SignVector::from_word(d, w);
                let st = orbit_stats(&e);
                assert_eq!(st.alt_order, alternating_order_structural(&e));
                assert_eq!(st.order, 2 * st.alt_order);
            }
        }
    }

    fn sign_vector(max_d: usize) -> impl Strategy<Value = SignVector> {
        proptest::collection::vec(any::<bool>(), 1..max_d).prop_map(|bits| {
            SignVector::from_signs(
                &bits
                    .iter()
                    .map(|&b| if b { -1 } else { 1 })
                    .collect::<Vec<_>>(),
            )
        })
    }

    proptest! {
        #[test]
        fn flip_shift_group_laws(e in sign_vector(90), n in -200i64..200) {
            let d = e.len() as i64;
            prop_assert_eq!(e.flip_shift(d), e.negated());
            prop_assert_eq!(e.flip_shift(2 * d), e.clone());
            prop_assert_eq!(e.negated().flip_shift(n), e.flip_shift(n).negated());
            prop_assert_eq!(e.flip_shift(n).flip_shift(1), e.flip_shift(n + 1));
        }

        #[test]
        fn orbit_divides(e in sign_vector(40)) {
            let st = orbit_stats(&e);
            prop_assert_eq!(e.len() % st.alt_order, 0);
            prop_assert_eq!(2 * e.len() % st.order, 0);
            prop_assert_eq!(st.alt_order, alternating_order_structural(&e));
        }
    }
}
