//! The dictionary between sign vectors and square-root polynomials.
//!
//! On the residues `gamma^(2n)` a square-root polynomial takes the values `eps_n gamma^n`;
//! inverting that evaluation gives `c_k = (1/r) sum_n eps_n gamma^(n(1-2k))`, a signed half
//! sum. This module also holds the subgroup version on odd-order subgroups, the exact count
//! of vanishing half sums, and a Gray-code brute-force counter to check it.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;

use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::field::FieldCtx;
use crate::gray::GrayRows;
use crate::poly::{evaluate_on_residues, Poly};
use crate::signs::SignVector;

/// Parameters of a signed half sum `H_{d,k}(eps) = sum_{n<d} eps_n zeta^(n k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfSumSpec {
    pub d: usize,
    pub k: i64,
    pub zeta: u32,
}

impl HalfSumSpec {
    /// Uses the canonical primitive `2d`-th root `gamma^((p-1)/(2d))`.
    pub fn new(ctx: &FieldCtx, d: usize, k: i64) -> Result<HalfSumSpec> {
        let zeta = ctx.root_of_unity(2 * d as u64)?;
        Self::with_zeta(ctx, d, k, zeta)
    }

    pub fn with_zeta(ctx: &FieldCtx, d: usize, k: i64, zeta: u32) -> Result<HalfSumSpec> {
        if k % 2 == 0 {
            return Err(Error::EvenExponent(k));
        }
        if zeta == 0 || ctx.order(zeta) != 2 * d as u64 {
            return Err(Error::OrderDoesNotDivide {
                order: 2 * d as u64,
                group_order: ctx.p() as u64 - 1,
            });
        }
        Ok(HalfSumSpec { d, k, zeta })
    }
}

pub fn half_sum(ctx: &FieldCtx, spec: &HalfSumSpec, eps: &SignVector) -> Result<u32> {
    if eps.len() != spec.d {
        return Err(Error::LengthMismatch {
            expected: spec.d,
            got: eps.len(),
        });
    }
    let two_d = 2 * spec.d as i64;
    let step = ctx.pow(spec.zeta, spec.k.rem_euclid(two_d) as u64);
    let mut term = 1u32;
    let mut acc = 0u32;
    for n in 0..spec.d {
        acc = if eps.is_minus(n) {
            ctx.sub(acc, term)
        } else {
            ctx.add(acc, term)
        };
        term = ctx.mul(term, step);
    }
    Ok(acc)
}

/// `sum_n eps_n gamma^(n * exponent)` over `n < r`, using the power table.
fn signed_gamma_sum(pw: &[u32], p: u32, eps: &SignVector, exponent: usize) -> u32 {
    let len = pw.len();
    let mut acc = [0u64; 2];
    let mut idx = 0usize;
    for n in 0..eps.len() {
        acc[eps.is_minus(n) as usize] += pw[idx] as u64;
        idx += exponent;
        if idx >= len {
            idx -= len;
        }
    }
    let pp = p as u64;
    ((acc[0] % pp + pp - acc[1] % pp) % pp) as u32
}

/// The unique `f` of length `r` with `f(gamma^(2n)) = eps_n gamma^n`.
pub fn coeffs_from_signs(ctx: &FieldCtx, eps: &SignVector) -> Result<Poly> {
    let r = ctx.r_usize();
    if eps.len() != r {
        return Err(Error::LengthMismatch {
            expected: r,
            got: eps.len(),
        });
    }
    let pw = ctx.gamma_powers();
    let pm1 = ctx.p() as i64 - 1;
    let inv_r = ctx.inv(r as u32);
    let coeffs = (0..r)
        .map(|k| {
            let e = (1 - 2 * k as i64).rem_euclid(pm1) as usize;
            ctx.mul(signed_gamma_sum(&pw, ctx.p(), eps, e), inv_r)
        })
        .collect();
    Ok(Poly::new(ctx.p(), coeffs))
}

/// Reads `eps_n = f(gamma^(2n)) gamma^(-n)` and rejects `f` unless every ratio is `+-1`.
pub fn signs_from_poly(ctx: &FieldCtx, f: &Poly) -> Result<SignVector> {
    if f.p() != ctx.p() {
        return Err(Error::NotASqrtPoly);
    }
    let values = evaluate_on_residues(ctx, f);
    let mut eps = SignVector::plus(ctx.r_usize());
    for (n, v) in values.into_iter().enumerate() {
        let ratio = ctx.mul(v, ctx.gamma_pow(-(n as i64)));
        if ratio == ctx.p() - 1 {
            eps.set(n, -1);
        } else if ratio != 1 {
            return Err(Error::NotASqrtPoly);
        }
    }
    Ok(eps)
}

/// Polynomial of degree `< d` computing square roots on the subgroup `mu_d` of odd order `d`.
///
/// Point `n` is `zeta_d^n` with `zeta_d = gamma^((p-1)/d)`; the value there is
/// `eps_n a^((d+1)/2)`, so the all-plus vector gives `x^((d+1)/2)`.
pub fn subgroup_coeffs(ctx: &FieldCtx, d: usize, eps: &SignVector) -> Result<Poly> {
    if d % 2 == 0 {
        return Err(Error::UnresolvedHalfRoot(d));
    }
    let r = ctx.r_usize();
    if r % d != 0 {
        return Err(Error::InvalidDivisor { d, r });
    }
    if eps.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            got: eps.len(),
        });
    }
    let pw = ctx.gamma_powers();
    let unit = (ctx.p() as usize - 1) / d;
    let m = d.div_ceil(2);
    let inv_d = ctx.inv(d as u32);
    let coeffs = (0..d)
        .map(|k| {
            let e = ((m + d - k) % d) * unit;
            ctx.mul(signed_gamma_sum(&pw, ctx.p(), eps, e), inv_d)
        })
        .collect();
    Ok(Poly::new(ctx.p(), coeffs))
}

/// Square-root polynomial on `mu_q` whose sign pattern repeats with period `N | q`.
pub fn periodic_pattern_poly(ctx: &FieldCtx, pattern: &SignVector) -> Result<Poly> {
    let q = ctx.q_usize();
    let n = pattern.len();
    if n == 0 || q % n != 0 {
        return Err(Error::PeriodDoesNotDivide {
            period: n,
            modulus: q,
        });
    }
    let mut ext = SignVector::plus(q);
    for i in 0..q {
        if pattern.is_minus(i % n) {
            ext.set(i, -1);
        }
    }
    subgroup_coeffs(ctx, q, &ext)
}

/// `|{eps in E_r : H_{r,ell}(eps) = 0}| = (2^r + (p-1)(2/p)) / p` for odd `ell` prime to `p - 1`.
pub fn count_vanishing_formula(ctx: &FieldCtx, ell: i64) -> Result<BigUint> {
    if ell % 2 == 0 {
        return Err(Error::EvenExponent(ell));
    }
    let g = (ell.unsigned_abs()).gcd(&(ctx.p() as u64 - 1));
    if g != 1 {
        return Err(Error::NotCoprime { ell, gcd: g });
    }
    let two_r = BigUint::one() << ctx.r();
    let pm1 = BigUint::from(ctx.p() - 1);
    let numer = if ctx.legendre(2) == 1 {
        two_r + pm1
    } else {
        two_r - pm1
    };
    let (quot, rem) = numer.div_rem(&BigUint::from(ctx.p()));
    debug_assert!(rem == BigUint::from(0u32));
    Ok(quot)
}

/// Largest `d` accepted by the brute-force counters.
pub const MAX_BRUTEFORCE_D: usize = 30;

/// Counts `eps` in Gray indices `range` (default: all of `E_d`) with `H_{d,ell}(eps) = 0`.
pub fn count_vanishing_bruteforce(
    ctx: &FieldCtx,
    d: usize,
    ell: i64,
    range: Option<(u64, u64)>,
    par: Parallelism,
) -> Result<BigUint> {
    if d > MAX_BRUTEFORCE_D {
        return Err(Error::TooLarge {
            what: "d",
            value: d as u64,
            cap: MAX_BRUTEFORCE_D as u64,
        });
    }
    let spec = HalfSumSpec::new(ctx, d, ell)?;
    let len = 1u64 << d;
    let (start, end) = range.unwrap_or((0, len));
    if start > end || end > len {
        return Err(Error::RangeOutOfBounds { start, end, len });
    }
    let step = ctx.pow(spec.zeta, ell.rem_euclid(2 * d as i64) as u64);
    let mut rows = Vec::with_capacity(d);
    let mut t = 1u32;
    for _ in 0..d {
        rows.push(t);
        t = ctx.mul(t, step);
    }
    let g = GrayRows::new(ctx.p(), d, 1, rows);
    let total: u128 = g
        .scan_chunks(
            start,
            end,
            par,
            || 0u128,
            |acc, _, v| *acc += (v[0] == 0) as u128,
        )
        .into_iter()
        .sum();
    Ok(BigUint::from(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field_ctx;
    use crate::poly::{is_sqrt_poly, Degree};
    use crate::signs::{enumerate_sign_vectors, EnumOrder};
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn half_sum_examples() {
        let c = make_field_ctx(13).unwrap();
        let spec = HalfSumSpec::new(&c, 6, 1).unwrap();
        let all_plus = SignVector::plus(6);
        let zk = c.pow(spec.zeta, 1);
        let expected = c.div(c.neg(2), c.sub(zk, 1));
        assert_eq!(half_sum(&c, &spec, &all_plus).unwrap(), expected);

        let one = HalfSumSpec::new(&c, 1, 1).unwrap();
        assert_eq!(half_sum(&c, &one, &SignVector::plus(1)).unwrap(), 1);
        assert_eq!(half_sum(&c, &one, &SignVector::minus(1)).unwrap(), 12);
        assert!(matches!(
            half_sum(&c, &spec, &SignVector::plus(5)),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(HalfSumSpec::new(&c, 6, 2), Err(Error::EvenExponent(2)));
    }

    #[test]
    fn half_sum_flip_shift_relation() {
        let c = make_field_ctx(41).unwrap();
        for k in [1i64, 3, -7, 19] {
            let spec = HalfSumSpec::new(&c, 20, k).unwrap();
            let zk = c.pow(spec.zeta, k.rem_euclid(40) as u64);
            for w in [0u64, 1, 0x5a5a5, 0xfffff, 0x12345] {
                let e = SignVector::from_word(20, w);
                let h = half_sum(&c, &spec, &e).unwrap();
                let hs = half_sum(&c, &spec, &e.flip_shift(1)).unwrap();
                assert_eq!(h, c.mul(zk, hs));
            }
        }
    }

    #[test]
    fn coefficients_are_scaled_half_sums() {
        let c = make_field_ctx(29).unwrap();
        let e = SignVector::from_word(14, 0x2b3c);
        let f = coeffs_from_signs(&c, &e).unwrap();
        let inv_r = c.inv(14);
        for k in 0..14i64 {
            let spec = HalfSumSpec::new(&c, 14, 1 - 2 * k).unwrap();
            assert_eq!(
                f.coeff(k as usize),
                c.mul(inv_r, half_sum(&c, &spec, &e).unwrap())
            );
        }
    }

    #[test]
    fn round_trip_p7() {
        let c = make_field_ctx(7).unwrap();
        let x2 = Poly::monomial(7, 3, 2, 1);
        let e = signs_from_poly(&c, &x2).unwrap();
        assert_eq!(coeffs_from_signs(&c, &e).unwrap(), x2);
    }

    #[test]
    fn p13_all_vectors_distinct_and_valid() {
        let c = make_field_ctx(13).unwrap();
        let mut seen = HashSet::new();
        for e in enumerate_sign_vectors(6, 0, 64, EnumOrder::Lexicographic).unwrap() {
            let f = coeffs_from_signs(&c, &e).unwrap();
            assert!(is_sqrt_poly(&c, &f));
            assert_eq!(signs_from_poly(&c, &f).unwrap(), e);
            seen.insert(f);
        }
        assert_eq!(seen.len(), 64);
        assert_eq!(
            signs_from_poly(&c, &Poly::monomial(13, 6, 1, 1)),
            Err(Error::NotASqrtPoly)
        );
    }

    #[test]
    fn known_minimal_polynomial_round_trips() {
        let c = make_field_ctx(41).unwrap();
        let f = Poly::parse(
            41,
            20,
            "15x^17+32x^16+4x^15+12x^14+37x^13+25x^12+5x^11+x^10+x^9+x^8+9x^6+29x^5+6x^4+36x^3+7x^2+33x+35",
        )
        .unwrap();
        let e = signs_from_poly(&c, &f).unwrap();
        let alt = crate::signs::alternating_order_structural(&e);
        assert_eq!(20 % alt, 0);
        assert_eq!(coeffs_from_signs(&c, &e).unwrap(), f);
    }

    #[test]
    fn subgroup_inversion_examples() {
        let c13 = make_field_ctx(13).unwrap();
        let f = subgroup_coeffs(&c13, 3, &SignVector::plus(3)).unwrap();
        assert_eq!(f, Poly::monomial(13, 3, 2, 1));
        for a in (1..13u32).filter(|&a| c13.pow(a, 3) == 1) {
            let v = f.eval(a);
            assert_eq!(c13.mul(v, v), a);
        }
        let one = subgroup_coeffs(&c13, 1, &SignVector::minus(1)).unwrap();
        assert_eq!(one, Poly::from_i64(13, &[-1]));
        assert_eq!(
            subgroup_coeffs(&c13, 2, &SignVector::plus(2)),
            Err(Error::UnresolvedHalfRoot(2))
        );
        assert!(matches!(
            subgroup_coeffs(&c13, 5, &SignVector::plus(5)),
            Err(Error::InvalidDivisor { .. })
        ));
    }

    #[test]
    fn subgroup_inversion_computes_signed_roots() {
        let c = make_field_ctx(37).unwrap();
        let zeta = c.root_of_unity(9).unwrap();
        for w in [0u64, 1, 0x155, 0x1ff, 0x0a3] {
            let e = SignVector::from_word(9, w);
            let f = subgroup_coeffs(&c, 9, &e).unwrap();
            for n in 0..9 {
                let a = c.pow(zeta, n as u64);
                let root = c.pow(a, 5);
                let expected = if e.is_minus(n) { c.neg(root) } else { root };
                assert_eq!(f.eval(a), expected);
            }
        }
    }

    #[test]
    fn periodic_patterns() {
        let c = make_field_ctx(37).unwrap();
        let f = periodic_pattern_poly(&c, &SignVector::parse("(+,-,-)", None).unwrap()).unwrap();
        // (x^5 / 3)(2x^3 - 1 + 2x^(-3)) mod x^9 - 1
        let third = c.inv(3);
        let two_thirds = c.mul(2, third);
        let mut coeffs = vec![0u32; 9];
        coeffs[8] = two_thirds;
        coeffs[5] = c.neg(third);
        coeffs[2] = two_thirds;
        let expected = Poly::new(37, coeffs);
        assert_eq!(f, expected);
        assert!(f.nonzero_terms().all(|(k, _)| k % 3 == 5 % 3));
        assert!(f.degree() <= Degree::Finite(9 - (3 - 1) / 2));

        let single = periodic_pattern_poly(&c, &SignVector::plus(1)).unwrap();
        assert_eq!(single, Poly::monomial(37, 9, 5, 1));
        assert!(matches!(
            periodic_pattern_poly(&c, &SignVector::plus(2)),
            Err(Error::PeriodDoesNotDivide { .. })
        ));
    }

    #[test]
    fn vanishing_counts() {
        let c13 = make_field_ctx(13).unwrap();
        assert_eq!(
            count_vanishing_formula(&c13, 1).unwrap(),
            BigUint::from(4u32)
        );
        let seq = Parallelism::Sequential;
        assert_eq!(
            count_vanishing_bruteforce(&c13, 6, 1, None, seq).unwrap(),
            BigUint::from(4u32)
        );
        assert_eq!(
            count_vanishing_bruteforce(&c13, 6, -1, None, seq).unwrap(),
            BigUint::from(4u32)
        );
        // gcd(3, 12) = 3: only the enumeration applies.
        assert!(matches!(
            count_vanishing_formula(&c13, 3),
            Err(Error::NotCoprime { gcd: 3, .. })
        ));
        assert_eq!(
            count_vanishing_bruteforce(&c13, 6, 3, None, seq).unwrap(),
            BigUint::from(0u32)
        );
        assert_eq!(
            count_vanishing_bruteforce(&c13, 1, 1, None, seq).unwrap(),
            BigUint::from(0u32)
        );

        let c29 = make_field_ctx(29).unwrap();
        let v = count_vanishing_formula(&c29, 4 - 29).unwrap();
        assert_eq!(v, BigUint::from(564u32));
        assert_eq!((BigUint::one() << 14u32) - v, BigUint::from(15820u32));

        let c17 = make_field_ctx(17).unwrap();
        assert_eq!(
            count_vanishing_formula(&c17, 1).unwrap(),
            BigUint::from(16u32)
        );
        assert_eq!(
            count_vanishing_bruteforce(&c17, 8, 1, None, seq).unwrap(),
            BigUint::from(16u32)
        );
        assert!(matches!(
            count_vanishing_bruteforce(&c17, 31, 1, None, seq),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn bruteforce_shards_sum_to_total() {
        let c = make_field_ctx(29).unwrap();
        let total = count_vanishing_bruteforce(&c, 14, 1, None, Parallelism::Sequential).unwrap();
        let parts: BigUint = crate::exec::split_range(0, 1 << 14, 5)
            .into_iter()
            .map(|r| {
                count_vanishing_bruteforce(&c, 14, 1, Some(r), Parallelism::Sequential).unwrap()
            })
            .sum();
        assert_eq!(total, parts);
        let threaded =
            count_vanishing_bruteforce(&c, 14, 1, None, Parallelism::Threads(4)).unwrap();
        assert_eq!(total, threaded);
    }

    #[test]
    fn root_choice_independence() {
        let c = make_field_ctx(29).unwrap();
        for d in [1usize, 2, 7, 14] {
            let roots: Vec<u32> = (1..29u32).filter(|&z| c.order(z) == 2 * d as u64).collect();
            let counts: HashSet<usize> = roots
                .iter()
                .map(|&z| {
                    let spec = HalfSumSpec::with_zeta(&c, d, 1, z).unwrap();
                    enumerate_sign_vectors(d, 0, 1 << d, EnumOrder::Lexicographic)
                        .unwrap()
                        .filter(|e| half_sum(&c, &spec, e).unwrap() == 0)
                        .count()
                })
                .collect();
            assert_eq!(counts.len(), 1, "d = {d}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_random_p113(w in any::<u64>()) {
            let c = make_field_ctx(113).unwrap();
            let mut e = SignVector::plus(56);
            for i in 0..56 {
                if (w >> i) & 1 == 1 { e.set(i, -1); }
            }
            let f = coeffs_from_signs(&c, &e).unwrap();
            prop_assert!(is_sqrt_poly(&c, &f));
            prop_assert_eq!(signs_from_poly(&c, &f).unwrap(), e);
        }

        #[test]
        fn vanishing_is_flip_shift_invariant(w in 0u64..1 << 14, k in 0i64..14) {
            let c = make_field_ctx(29).unwrap();
            let spec = HalfSumSpec::new(&c, 14, 2 * k + 1).unwrap();
            let e = SignVector::from_word(14, w);
            let a = half_sum(&c, &spec, &e).unwrap() == 0;
            let b = half_sum(&c, &spec, &e.flip_shift(1)).unwrap() == 0;
            prop_assert_eq!(a, b);
        }
    }
}
