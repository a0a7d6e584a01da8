//! Expected degree counts under the independence heuristic, in exact rational arithmetic.
//!
//! The naive model treats the coefficients of a random square-root polynomial as
//! independent and uniform, so `P(deg = m) = (1 - 1/p) p^-(r-1-m)`. Family models count
//! alternating-periodic classes, whose degrees are confined to `r - (D-1)/2 - nD`.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::census::DegreeHistogram;
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::signs::{family_orbit_count, ts_family_size};

fn ser_display<T: std::fmt::Display, S: Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn ser_opt_display<T: std::fmt::Display, S: Serializer>(
    v: &Option<T>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

/// Round half up: `floor(x + 1/2)` for `x >= 0`.
pub fn round_half_up(x: &BigRational) -> BigUint {
    let shifted = x + BigRational::new(BigInt::one(), BigInt::from(2));
    let (q, _) = shifted.numer().div_mod_floor(shifted.denom());
    q.to_biguint().unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HeuristicModel {
    #[serde(rename = "naive")]
    Naive,
    #[serde(rename = "family-lambda")]
    Family,
    #[serde(rename = "ts-lambda")]
    Ts,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeuristicRow {
    pub degree: usize,
    #[serde(serialize_with = "ser_display")]
    pub predicted: BigRational,
    #[serde(serialize_with = "ser_display")]
    pub rounded: BigUint,
    /// `2^d / (2d p^n)`, the approximate form of the family count.
    #[serde(
        serialize_with = "ser_opt_display",
        skip_serializing_if = "Option::is_none"
    )]
    pub approx: Option<BigRational>,
    pub below_threshold: bool,
    #[serde(serialize_with = "ser_opt_display")]
    pub actual: Option<u128>,
}

impl HeuristicRow {
    fn new(degree: usize, predicted: BigRational, approx: Option<BigRational>) -> HeuristicRow {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        HeuristicRow {
            degree,
            rounded: round_half_up(&predicted),
            below_threshold: predicted < half,
            predicted,
            approx,
            actual: None,
        }
    }

    pub fn predicted_f64(&self) -> f64 {
        self.predicted.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeuristicReport {
    pub model: HeuristicModel,
    pub p: u32,
    pub d: Option<usize>,
    #[serde(rename = "D")]
    pub big_d: Option<usize>,
    /// Descending by degree.
    pub rows: Vec<HeuristicRow>,
}

impl HeuristicReport {
    /// Fills `actual` from a histogram (degrees absent from it get zero).
    pub fn with_actuals(mut self, hist: &DegreeHistogram) -> HeuristicReport {
        for row in &mut self.rows {
            row.actual = Some(hist.count(row.degree));
        }
        self
    }

    pub fn row(&self, degree: usize) -> Option<&HeuristicRow> {
        self.rows.iter().find(|r| r.degree == degree)
    }

    /// `degree -> rounded` for rows that round to a positive count, ascending.
    pub fn rounded_nonzero(&self) -> BTreeMap<usize, BigUint> {
        self.rows
            .iter()
            .filter(|r| !r.rounded.is_zero())
            .map(|r| (r.degree, r.rounded.clone()))
            .collect()
    }
}

fn ratio(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn pow_big(p: u32, e: usize) -> BigUint {
    num_traits::pow(BigUint::from(p), e)
}

/// Naive-model expectation of `#{eps : deg f_eps = m}` for each `m` in `degrees`.
///
/// For `1 <= m <= r-1` this is `2^r (1 - 1/p) p^-(r-1-m)`; the `m = 0` row takes the
/// remaining mass `2^r p^-(r-1)` (all higher coefficients zero), so the rows for
/// `0..=r-1` sum to exactly `2^r`. Degrees `>= r` get zero.
pub fn naive_expected_counts(ctx: &FieldCtx, degrees: RangeInclusive<usize>) -> HeuristicReport {
    let r = ctx.r_usize();
    let p = ctx.p();
    let two_r = BigUint::one() << r;
    let mut rows: Vec<HeuristicRow> = degrees
        .map(|m| {
            let predicted = if m >= r {
                BigRational::zero()
            } else if m == 0 {
                ratio(two_r.clone(), pow_big(p, r - 1))
            } else {
                ratio(&two_r * (p - 1), pow_big(p, r - m))
            };
            HeuristicRow::new(m, predicted, None)
        })
        .collect();
    rows.reverse();
    HeuristicReport {
        model: HeuristicModel::Naive,
        p,
        d: None,
        big_d: None,
        rows,
    }
}

fn check_family(ctx: &FieldCtx, d: usize) -> Result<usize> {
    let r = ctx.r_usize();
    if d == 0 || r % d != 0 || (r / d) % 2 == 0 {
        return Err(Error::InvalidDivisor { d, r });
    }
    Ok(r / d)
}

fn family_degrees(r: usize, big_d: usize) -> impl Iterator<Item = (usize, usize)> {
    let top = r - (big_d - 1) / 2;
    (0..=top / big_d).map(move |n| (n, top - n * big_d))
}

/// `lambda_n = N'(d) / p^n` at degrees `r - (D-1)/2 - nD`, for the family of period `d`.
pub fn family_expected_counts(ctx: &FieldCtx, d: usize) -> Result<HeuristicReport> {
    let big_d = check_family(ctx, d)?;
    let p = ctx.p();
    let orbits = family_orbit_count(d as u64);
    let approx_num = ts_family_size(d as u64);
    let rows = family_degrees(ctx.r_usize(), big_d)
        .map(|(n, degree)| {
            let pn = BigRational::from_integer(pow_big(p, n).into());
            let predicted = &orbits / &pn;
            let approx = ratio(approx_num.clone(), BigUint::from(2 * d) * pow_big(p, n));
            HeuristicRow::new(degree, predicted, Some(approx))
        })
        .collect();
    Ok(HeuristicReport {
        model: HeuristicModel::Family,
        p,
        d: Some(d),
        big_d: Some(big_d),
        rows,
    })
}

/// `(1 - 1/p) 2^d / p^n` with `d = 2^(s-1)`, at the degrees `r - (q-1)/2 - nq`.
pub fn ts_expected_counts(ctx: &FieldCtx) -> HeuristicReport {
    let d = ctx.block_count();
    let q = ctx.q_usize();
    let p = ctx.p();
    let size = ts_family_size(d as u64);
    let rows = family_degrees(ctx.r_usize(), q)
        .map(|(n, degree)| {
            let predicted = ratio(&size * (p - 1), pow_big(p, n + 1));
            HeuristicRow::new(degree, predicted, None)
        })
        .collect();
    HeuristicReport {
        model: HeuristicModel::Ts,
        p,
        d: Some(d),
        big_d: Some(q),
        rows,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinDegreePrediction {
    /// Closed form `r - (q-1)/2 - q floor((2^(s-1) - s + 1) / log2 p)`.
    pub ts_model_a: usize,
    /// Lowest TS degree whose expected count `(1 - 1/p) 2^d / p^n` is at least 1/2.
    pub ts_model_b: usize,
    /// `d -> r - (D-1)/2 - D floor((d - log2 d) / log2 p)` over periods with `r/d` odd.
    pub per_family: BTreeMap<usize, usize>,
    /// Minimum of `per_family`.
    pub global: usize,
}

/// Largest `n <= max_n` with `d p^n <= 2^d`, i.e. `n <= (d - log2 d) / log2 p`.
fn log_floor(p: u32, d: usize, max_n: usize) -> usize {
    let two_d = BigUint::one() << d;
    let mut n = 0;
    while n < max_n && BigUint::from(d) * pow_big(p, n + 1) <= two_d {
        n += 1;
    }
    n
}

pub fn predicted_min_degree(ctx: &FieldCtx) -> MinDegreePrediction {
    let r = ctx.r_usize();
    let p = ctx.p();
    let q = ctx.q_usize();

    let mut per_family = BTreeMap::new();
    for d in (1..=r).filter(|d| r % d == 0 && (r / d) % 2 == 1) {
        let big_d = r / d;
        let top = r - (big_d - 1) / 2;
        let n = log_floor(p, d, (top / big_d).min(d - 1));
        per_family.insert(d, top - n * big_d);
    }
    let global = *per_family.values().min().expect("d = r always qualifies");

    let d_ts = ctx.block_count();
    let top = r - (q - 1) / 2;
    let ts_model_a = top - q * log_floor(p, d_ts, top / q);

    let budget = BigUint::from(2 * (p - 1)) << d_ts;
    let mut n = 0;
    while n < top / q && pow_big(p, n + 2) <= budget {
        n += 1;
    }
    let ts_model_b = top - q * n;

    MinDegreePrediction {
        ts_model_a,
        ts_model_b,
        per_family,
        global,
    }
}

/// Rational as a float, for display only.
pub fn approx_f64(x: &BigRational) -> f64 {
    if x.is_negative() {
        return -approx_f64(&-x);
    }
    x.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field_ctx;

    fn rounded(rep: &HeuristicReport) -> Vec<(usize, u64)> {
        rep.rounded_nonzero()
            .into_iter()
            .map(|(d, c)| (d, c.to_u64().unwrap()))
            .collect()
    }

    #[test]
    fn rounding() {
        let r = |n: i64, d: i64| round_half_up(&BigRational::new(n.into(), d.into()));
        assert_eq!(r(1, 2), BigUint::from(1u32));
        assert_eq!(r(5, 2), BigUint::from(3u32));
        assert_eq!(r(49, 100), BigUint::from(0u32));
        assert_eq!(r(0, 1), BigUint::from(0u32));
    }

    #[test]
    fn naive_rows() {
        let c = make_field_ctx(29).unwrap();
        let rep = naive_expected_counts(&c, 10..=14);
        assert_eq!(rep.rows[0].degree, 14);
        assert!(rep.rows[0].predicted.is_zero());
        assert_eq!(rounded(&rep), [(10, 1), (11, 19), (12, 545), (13, 15819)]);
        let full = naive_expected_counts(&c, 0..=13);
        let sum: BigRational = full.rows.iter().map(|r| r.predicted.clone()).sum();
        assert_eq!(sum, BigRational::from_integer(16384.into()));
    }

    #[test]
    fn ts_rows() {
        let t = |p| rounded(&ts_expected_counts(&make_field_ctx(p).unwrap()));
        assert_eq!(t(17), [(6, 1), (7, 14), (8, 241)]);
        assert_eq!(t(97), [(41, 7), (44, 669), (47, 64860)]);
        assert_eq!(t(113), [(46, 2), (53, 254)]);
        assert_eq!(t(13), [(5, 4)]);
        assert_eq!(t(7), [(2, 2)]);
        assert_eq!(t(41), [(18, 16)]);
    }

    #[test]
    fn family_rows() {
        let c = make_field_ctx(97).unwrap();
        let rep = family_expected_counts(&c, 16).unwrap();
        assert_eq!(rep.rows[0].degree, 47);
        assert_eq!(
            rep.rows[0].approx,
            Some(BigRational::from_integer(2048.into()))
        );
        assert_eq!(
            rep.rows[0].predicted,
            BigRational::new(65280.into(), 32.into())
        );
        assert!(rep.rows.iter().any(|r| r.below_threshold));
        let c23 = make_field_ctx(23).unwrap();
        let one = family_expected_counts(&c23, 1).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert_eq!(one.rows[0].degree, 11 - 10 / 2);
        assert_eq!(one.rows[0].predicted, BigRational::one());
        let c29 = make_field_ctx(29).unwrap();
        assert!(matches!(
            family_expected_counts(&c29, 7),
            Err(Error::InvalidDivisor { .. })
        ));
    }

    #[test]
    fn min_degree_predictions() {
        let pr = |p| predicted_min_degree(&make_field_ctx(p).unwrap());
        let p41 = pr(41);
        assert_eq!(p41.ts_model_a, 18);
        let p29 = pr(29);
        assert_eq!((p29.ts_model_a, p29.global), (11, 11));
        let p97 = pr(97);
        assert_eq!((p97.ts_model_a, p97.ts_model_b), (44, 41));
        assert_eq!(pr(17).ts_model_a, 7);
        assert_eq!(pr(7).ts_model_a, 2);
    }
}
