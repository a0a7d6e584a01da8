//! Dense polynomials over `F_p` modulo `x^n - 1`, plus the two gluing constructions.
//!
//! A [`Poly`] carries its modulus `p` and its ring length `n`; arithmetic between polynomials
//! of different `p` or `n` is rejected. Square-root polynomials on all residues live in the
//! length-`r` ring; the search works in the shorter rings of length `M_k = 2^k q`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::FieldCtx;

/// Polynomial degree with a separate value for the zero polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    NegInfinity,
    Finite(usize),
}

impl Degree {
    pub fn finite(self) -> Option<usize> {
        match self {
            Degree::NegInfinity => None,
            Degree::Finite(d) => Some(d),
        }
    }

    pub fn parse(s: &str) -> Result<Degree> {
        match s.trim() {
            "-inf" | "-infinity" => Ok(Degree::NegInfinity),
            t => t
                .parse()
                .map(Degree::Finite)
                .map_err(|_| Error::Parse(format!("bad degree '{t}'"))),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => f.write_str("-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

impl Serialize for Degree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Degree of a raw coefficient slice.
#[inline]
pub fn slice_degree(coeffs: &[u32]) -> Degree {
    match coeffs.iter().rposition(|&c| c != 0) {
        Some(d) => Degree::Finite(d),
        None => Degree::NegInfinity,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    p: u32,
    coeffs: Vec<u32>,
}

impl Poly {
    /// Takes ownership of `coeffs`, reducing every entry mod `p`.
    pub fn new(p: u32, mut coeffs: Vec<u32>) -> Poly {
        for c in coeffs.iter_mut() {
            *c %= p;
        }
        Poly { p, coeffs }
    }

    pub fn from_i64(p: u32, coeffs: &[i64]) -> Poly {
        Poly {
            p,
            coeffs: coeffs
                .iter()
                .map(|&c| c.rem_euclid(p as i64) as u32)
                .collect(),
        }
    }

    pub fn zero(p: u32, len: usize) -> Poly {
        Poly {
            p,
            coeffs: vec![0; len],
        }
    }

    /// `c * x^k` in the ring of length `len`; `k` wraps around.
    pub fn monomial(p: u32, len: usize, k: usize, c: u32) -> Poly {
        let mut f = Poly::zero(p, len);
        f.coeffs[k % len] = c % p;
        f
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<u32> {
        self.coeffs
    }
    pub fn coeff(&self, k: usize) -> u32 {
        self.coeffs.get(k).copied().unwrap_or(0)
    }
    pub fn degree(&self) -> Degree {
        slice_degree(&self.coeffs)
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
    pub fn nonzero_terms(&self) -> impl DoubleEndedIterator<Item = (usize, u32)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| (k, c))
    }

    fn check_same(&self, other: &Poly) -> Result<()> {
        if self.p != other.p || self.len() != other.len() {
            return Err(Error::ContextMismatch {
                left_p: self.p,
                left_len: self.len(),
                right_p: other.p,
                right_len: other.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        self.check_same(other)?;
        let p = self.p as u64;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| ((a as u64 + b as u64) % p) as u32)
            .collect();
        Ok(Poly { p: self.p, coeffs })
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.check_same(other)?;
        let p = self.p as u64;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| ((a as u64 + p - b as u64) % p) as u32)
            .collect();
        Ok(Poly { p: self.p, coeffs })
    }

    pub fn neg(&self) -> Poly {
        self.scalar_mul(self.p - 1)
    }

    pub fn scalar_mul(&self, c: u32) -> Poly {
        let p = self.p as u64;
        let c = c as u64 % p;
        Poly {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .map(|&a| (a as u64 * c % p) as u32)
                .collect(),
        }
    }

    /// Product in `F_p[x]/(x^n - 1)`: exponents add modulo the ring length.
    pub fn mul_cyclic(&self, other: &Poly) -> Result<Poly> {
        self.check_same(other)?;
        let n = self.len();
        let p = self.p as u64;
        let mut acc = vec![0u64; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let k = if i + j >= n { i + j - n } else { i + j };
                acc[k] = (acc[k] + a as u64 * b as u64) % p;
            }
        }
        Ok(Poly {
            p: self.p,
            coeffs: acc.into_iter().map(|c| c as u32).collect(),
        })
    }

    /// Horner evaluation at `a`.
    pub fn eval(&self, a: u32) -> u32 {
        let p = self.p as u64;
        let a = a as u64 % p;
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| (acc * a + c as u64) % p) as u32
    }

    /// Remainder modulo `x^m - alpha`, as a polynomial of length `m`.
    pub fn reduce_modulo(&self, m: usize, alpha: u32) -> Poly {
        let p = self.p as u64;
        let mut out = vec![0u64; m];
        let mut factor = 1u64;
        for chunk in self.coeffs.chunks(m) {
            for (o, &c) in out.iter_mut().zip(chunk) {
                *o = (*o + c as u64 * factor) % p;
            }
            factor = factor * alpha as u64 % p;
        }
        Poly {
            p: self.p,
            coeffs: out.into_iter().map(|c| c as u32).collect(),
        }
    }

    /// The same polynomial in the ring of length `len` (folding `x^len = 1`).
    pub fn into_ring(self, len: usize) -> Poly {
        if self.len() == len {
            return self;
        }
        self.reduce_modulo(len, 1)
    }

    /// Parses `"15x^18 + 31x^13 - x + 2"` (also `*`, `·`, `x^{18}`) or a JSON coefficient
    /// array `[c_0, c_1, ...]` into the ring of length `len`.
    pub fn parse(p: u32, len: usize, text: &str) -> Result<Poly> {
        let t = text.trim();
        if len == 0 {
            return Err(Error::Parse("ring length must be positive".into()));
        }
        if t.starts_with('[') {
            let raw: Vec<i64> = serde_json::from_str(t).map_err(|e| Error::Parse(e.to_string()))?;
            let mut f = Poly::zero(p, len);
            for (k, c) in raw.into_iter().enumerate() {
                let idx = k % len;
                f.coeffs[idx] = (f.coeffs[idx] + c.rem_euclid(p as i64) as u32) % p;
            }
            return Ok(f);
        }
        let mut f = Poly::zero(p, len);
        for (sign, term) in split_terms(t)? {
            let (c, e) = parse_term(term)?;
            let c = (sign * c).rem_euclid(p as i64) as u32;
            let idx = (e % len as u64) as usize;
            f.coeffs[idx] = (f.coeffs[idx] + c) % p;
        }
        Ok(f)
    }
}

fn split_terms(t: &str) -> Result<Vec<(i64, &str)>> {
    let mut out = Vec::new();
    let mut sign = 1i64;
    let mut start = None;
    let mut depth = 0usize;
    let mut expect_term = true;
    let mut signed = false;
    for (i, ch) in t.char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            '+' | '-' | '\u{2212}' if depth == 0 => {
                if let Some(s) = start.take() {
                    out.push((sign, t[s..i].trim()));
                    sign = 1;
                } else if !expect_term || signed {
                    return Err(Error::Parse(format!("unexpected '{ch}' in '{t}'")));
                }
                signed = true;
                if ch != '+' {
                    sign = -sign;
                }
                expect_term = true;
                continue;
            }
            _ => {}
        }
        if start.is_none() && !ch.is_whitespace() {
            start = Some(i);
            expect_term = false;
            signed = false;
        }
    }
    match start {
        Some(s) => out.push((sign, t[s..].trim())),
        None if out.is_empty() => return Err(Error::Parse("empty polynomial".into())),
        None => return Err(Error::Parse(format!("dangling sign in '{t}'"))),
    }
    Ok(out)
}

fn parse_term(term: &str) -> Result<(i64, u64)> {
    let bad = || Error::Parse(format!("bad term '{term}'"));
    let compact: String = term.chars().filter(|c| !c.is_whitespace()).collect();
    let (coef_part, x_part) = match compact.find(['x', 'X']) {
        Some(i) => (&compact[..i], Some(&compact[i + 1..])),
        None => (compact.as_str(), None),
    };
    let coef_part = coef_part.trim_end_matches(['*', '\u{b7}', '\u{22c5}']);
    let c = if coef_part.is_empty() {
        if x_part.is_none() {
            return Err(bad());
        }
        1
    } else {
        coef_part.parse::<i64>().map_err(|_| bad())?
    };
    let e = match x_part {
        None => 0,
        Some("") => 1,
        Some(rest) => {
            let rest = rest.strip_prefix('^').ok_or_else(bad)?;
            let rest = rest
                .strip_prefix('{')
                .and_then(|r| r.strip_suffix('}'))
                .unwrap_or(rest);
            rest.parse::<u64>().map_err(|_| bad())?
        }
    };
    Ok((c, e))
}

impl fmt::Display for Poly {
    /// Descending nonzero terms, e.g. `15x^18 + 31x^13 + 30x^8 + 5x^3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.nonzero_terms().rev() {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match (c, k) {
                (c, 0) => write!(f, "{c}")?,
                (1, 1) => f.write_str("x")?,
                (1, k) => write!(f, "x^{k}")?,
                (c, 1) => write!(f, "{c}x")?,
                (c, k) => write!(f, "{c}x^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl Serialize for Poly {
    /// JSON array form `[c_0, ..., c_{n-1}]`.
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

/// `sum_k coeffs[k] * gamma^(e0 + k*step)` with exponents taken mod `p - 1`.
#[inline]
pub(crate) fn table_dot(pw: &[u32], p: u32, coeffs: &[u32], step: usize) -> u32 {
    let n = pw.len();
    let mut idx = 0usize;
    if p < (1 << 21) {
        let mut acc = 0u64;
        for &c in coeffs {
            acc += c as u64 * pw[idx] as u64;
            idx += step;
            if idx >= n {
                idx -= n;
            }
        }
        (acc % p as u64) as u32
    } else {
        let mut acc = 0u64;
        for &c in coeffs {
            acc = (acc + c as u64 * pw[idx] as u64) % p as u64;
            idx += step;
            if idx >= n {
                idx -= n;
            }
        }
        acc as u32
    }
}

/// Values of `f` at the residues `gamma^(2n)`, `n = 0..r`.
pub fn evaluate_on_residues(ctx: &FieldCtx, f: &Poly) -> Vec<u32> {
    let pw = ctx.gamma_powers();
    let pm1 = ctx.p() as usize - 1;
    (0..ctx.r_usize())
        .map(|n| table_dot(&pw, ctx.p(), f.coeffs(), (2 * n) % pm1))
        .collect()
}

/// True iff `f(a)^2 = a` for every quadratic residue `a`.
pub fn is_sqrt_poly(ctx: &FieldCtx, f: &Poly) -> bool {
    if f.p() != ctx.p() {
        return false;
    }
    ctx.residues()
        .zip(evaluate_on_residues(ctx, f))
        .all(|(a, v)| ctx.mul(v, v) == a)
}

/// Lagrange basis on the `B = 2^(s-1)` roots of `y^B - 1`: `L_k(y) = (1/B) sum_j zeta^(-kj) y^j`.
fn crt_basis(ctx: &FieldCtx) -> &Vec<Vec<u32>> {
    ctx.crt_basis.get_or_init(|| {
        let b = ctx.block_count();
        let Some(zeta) = ctx.zeta_ts() else {
            return vec![vec![1]];
        };
        let inv_b = ctx.inv(b as u32 % ctx.p());
        let zeta_inv = ctx.inv(zeta);
        (0..b)
            .map(|k| {
                let step = ctx.pow(zeta_inv, k as u64);
                let mut w = inv_b;
                (0..b)
                    .map(|_| {
                        let out = w;
                        w = ctx.mul(w, step);
                        out
                    })
                    .collect()
            })
            .collect()
    })
}

/// Glues one polynomial per block `S_k` into `f = sum_k f_k L_k(x^q)`.
///
/// The parts are not checked for membership in their block families. Parts may have degree
/// up to `q`; the result has length `r`, or `r + 1` when its coefficient at `x^r` is nonzero
/// (only possible when `q = 1`).
pub fn glue_crt(ctx: &FieldCtx, parts: &[Poly]) -> Result<Poly> {
    let b = ctx.block_count();
    if parts.len() != b {
        return Err(Error::WrongPartCount {
            expected: b,
            got: parts.len(),
        });
    }
    let q = ctx.q_usize();
    let r = ctx.r_usize();
    for (index, f) in parts.iter().enumerate() {
        if f.p() != ctx.p() {
            return Err(Error::ContextMismatch {
                left_p: ctx.p(),
                left_len: q,
                right_p: f.p(),
                right_len: f.len(),
            });
        }
        if let Degree::Finite(degree) = f.degree() {
            if degree > q {
                return Err(Error::DegreeTooLarge {
                    index,
                    degree,
                    max: q,
                });
            }
        }
    }
    let basis = crt_basis(ctx);
    let p = ctx.p() as u64;
    let mut out = vec![0u64; r + 1];
    for (f, row) in parts.iter().zip(basis) {
        for (j, &w) in row.iter().enumerate() {
            for (e, c) in f.nonzero_terms() {
                let slot = &mut out[e + j * q];
                *slot = (*slot + c as u64 * w as u64) % p;
            }
        }
    }
    if out[r] == 0 {
        out.pop();
    }
    Ok(Poly {
        p: ctx.p(),
        coeffs: out.into_iter().map(|c| c as u32).collect(),
    })
}

/// Ring length `M_k = 2^k q` at level `k`.
pub fn level_modulus(ctx: &FieldCtx, k: usize) -> usize {
    ctx.q_usize() << k
}

/// `alpha = zeta^(2^k i)`, the value of `x^(M_k)` on `S_i^k`.
pub fn level_alpha(ctx: &FieldCtx, k: usize, i: usize) -> u32 {
    match ctx.zeta_ts() {
        Some(z) => ctx.pow(z, ((i as u64) << k) % ctx.block_count() as u64),
        None => 1,
    }
}

pub(crate) fn check_level(ctx: &FieldCtx, k: usize, i: usize) -> Result<()> {
    if ctx.s() < 2 {
        return Err(Error::WrongResidue {
            p: ctx.p(),
            residue: ctx.p() % 4,
        });
    }
    let max = ctx.s() as usize - 2;
    if k > max {
        return Err(Error::LevelOutOfRange { level: k, max });
    }
    let count = 1usize << (max - k);
    if i >= count {
        return Err(Error::BlockOutOfRange { block: i, count });
    }
    Ok(())
}

/// Writes `((fi + fj) / 2, (fi - fj) / (2 alpha))` as the low and high halves of `out`.
#[inline]
pub(crate) fn glue_pair_slices(
    p: u32,
    fi: &[u32],
    fj: &[u32],
    half: u32,
    half_over_alpha: u32,
    out: &mut [u32],
) {
    let m = fi.len();
    let pp = p as u64;
    let (lo, hi) = out.split_at_mut(m);
    for t in 0..m {
        let a = fi[t] as u64;
        let b = fj[t] as u64;
        lo[t] = ((a + b) * half as u64 % pp) as u32;
        hi[t] = ((a + pp - b) * half_over_alpha as u64 % pp) as u32;
    }
}

/// Joins `f_i` on `S_i^k` and `f_j` on `S_{i + 2^(s-2-k)}^k` into one polynomial on
/// `S_i^(k+1)`, of degree `M_k + deg(f_i - f_j)`.
pub fn glue_pair(ctx: &FieldCtx, fi: &Poly, fj: &Poly, k: usize, i: usize) -> Result<Poly> {
    check_level(ctx, k, i)?;
    let m = level_modulus(ctx, k);
    for f in [fi, fj] {
        if f.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                got: f.len(),
            });
        }
    }
    fi.check_same(fj)?;
    if fi == fj {
        return Err(Error::EqualInputsCancellation);
    }
    let half = ctx.inv(2);
    let alpha = level_alpha(ctx, k, i);
    let mut out = vec![0u32; 2 * m];
    glue_pair_slices(
        ctx.p(),
        fi.coeffs(),
        fj.coeffs(),
        half,
        ctx.div(half, alpha),
        &mut out,
    );
    Ok(Poly {
        p: ctx.p(),
        coeffs: out,
    })
}
