//! The Tonelli-Shanks family: one minimal monomial per block `S_k = {a : a^q = zeta^k}`,
//! glued over all `2^(s-1)` blocks with an independent sign per block.

use crate::census::{DegreeHistogram, Family};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::field::FieldCtx;
use crate::fourier::signs_from_poly;
use crate::gray::GrayRows;
use crate::poly::{glue_crt, slice_degree, Poly};
use crate::signs::{alternating_order_structural, SignVector};

/// Largest block count `2^(s-1)` accepted by [`enumerate_ts`].
pub const MAX_TS_BLOCKS: usize = 24;

/// `zeta^(-k/2) x^((q+1)/2)` on block `S_k`, with the branch `zeta^(1/2) = gamma^q`.
///
/// The result lives in the block ring of length `q` (length 2 when `q = 1`, where the
/// monomial is `x` itself).
pub fn block_minimal_poly(ctx: &FieldCtx, k: usize) -> Result<Poly> {
    let count = ctx.block_count();
    if k >= count {
        return Err(Error::BlockOutOfRange { block: k, count });
    }
    let q = ctx.q_usize();
    let e = q.div_ceil(2);
    let len = q.max(e + 1);
    let coef = ctx.gamma_pow(-(q as i64) * k as i64);
    Ok(Poly::monomial(ctx.p(), len, e, coef))
}

/// `gamma^i f(gamma^(-2i) x)`: carries a square-root polynomial on `S_j^k` to `S_(j+i)^k`.
pub fn shift_family(ctx: &FieldCtx, f: &Poly, i: i64) -> Poly {
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            if c == 0 {
                0
            } else {
                ctx.mul(c, ctx.gamma_pow(i - 2 * i * k as i64))
            }
        })
        .collect();
    Poly::new(ctx.p(), coeffs)
}

fn check_choice(ctx: &FieldCtx, h: &SignVector) -> Result<()> {
    if h.len() != ctx.block_count() {
        return Err(Error::LengthMismatch {
            expected: ctx.block_count(),
            got: h.len(),
        });
    }
    Ok(())
}

/// Glues `h(k) * block_minimal_poly(k)` over all blocks.
///
/// The result is not folded mod `x^r - 1`: for `q = 1` it has length `r + 1` and may have
/// degree `r`.
pub fn ts_polynomial(ctx: &FieldCtx, h: &SignVector) -> Result<Poly> {
    check_choice(ctx, h)?;
    let parts = (0..ctx.block_count())
        .map(|k| {
            let f = block_minimal_poly(ctx, k)?;
            Ok(if h.is_minus(k) { f.neg() } else { f })
        })
        .collect::<Result<Vec<_>>>()?;
    glue_crt(ctx, &parts)
}

/// The length-`r` sign vector `eps_(d x + y) = (-1)^x h(y)` with `d = 2^(s-1)`.
pub fn ts_sign_vector(ctx: &FieldCtx, h: &SignVector) -> Result<SignVector> {
    check_choice(ctx, h)?;
    let d = h.len();
    let mut eps = SignVector::plus(ctx.r_usize());
    for n in 0..ctx.r_usize() {
        if h.is_minus(n % d) != ((n / d) % 2 == 1) {
            eps.set(n, -1);
        }
    }
    Ok(eps)
}

/// True iff `f` (taken mod `x^r - 1`) is a square-root polynomial with alternating order
/// `2^(s-1)`, i.e. a Tonelli-Shanks polynomial.
pub fn is_ts_polynomial(ctx: &FieldCtx, f: &Poly) -> bool {
    let reduced = f.clone().into_ring(ctx.r_usize());
    match signs_from_poly(ctx, &reduced) {
        Ok(eps) => alternating_order_structural(&eps) == ctx.block_count(),
        Err(_) => false,
    }
}

/// Degrees `r - (q-1)/2 - n q` allowed for the family, down to the bound `3 deg >= p - 1`.
pub fn ts_admissible_degrees(ctx: &FieldCtx) -> Vec<usize> {
    let q = ctx.q_usize();
    let top = ctx.r_usize() - (q - 1) / 2;
    let p1 = ctx.p() as usize - 1;
    let mut out = Vec::new();
    let mut deg = top as i64;
    while deg >= 0 && 3 * deg as usize >= p1 {
        out.push(deg as usize);
        deg -= q as i64;
    }
    out
}

pub struct TsEnumeration {
    pub histogram: DegreeHistogram,
    /// `(h, f)` in lexicographic order of `h`, when requested.
    pub members: Option<Vec<(SignVector, Poly)>>,
}

/// Degree histogram of all `2^(2^(s-1))` Tonelli-Shanks polynomials.
pub fn enumerate_ts(ctx: &FieldCtx, par: Parallelism, dump: bool) -> Result<TsEnumeration> {
    let d = ctx.block_count();
    if d > MAX_TS_BLOCKS {
        return Err(Error::TooLarge {
            what: "2^(s-1)",
            value: d as u64,
            cap: MAX_TS_BLOCKS as u64,
        });
    }
    let r = ctx.r_usize();
    let m = if ctx.q() == 1 { r + 1 } else { r };
    let mut rows = Vec::with_capacity(d * m);
    for k in 0..d {
        let mut parts = vec![Poly::zero(ctx.p(), ctx.q_usize()); d];
        parts[k] = block_minimal_poly(ctx, k)?;
        let mut g = glue_crt(ctx, &parts)?.into_coeffs();
        g.resize(m, 0);
        rows.extend_from_slice(&g);
    }
    let gray = GrayRows::new(ctx.p(), d, m, rows);
    let space = 1u64 << d;
    let parts = gray.scan_chunks(
        0,
        space,
        par,
        || vec![0u128; m + 1],
        |acc, _, v| {
            let slot = slice_degree(v).finite().map_or(0, |x| x + 1);
            acc[slot] += 1;
        },
    );
    let mut histogram = DegreeHistogram::new(ctx, Family::Ts, d, (0, space));
    for acc in parts {
        histogram.add_slots(&acc);
    }
    let members = if dump {
        Some(
            (0..space)
                .map(|i| {
                    let h = SignVector::from_lex_index(d, i);
                    let f = ts_polynomial(ctx, &h)?;
                    Ok((h, f))
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(TsEnumeration { histogram, members })
}
