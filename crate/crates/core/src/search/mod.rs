//! Meet-in-the-middle search for all minimal-degree square-root polynomials.
//!
//! A square-root polynomial on `S` is the gluing of its restrictions `f_0` to `S_0^(s-2)`
//! and `f_1` to `S_1^(s-2)`, and `deg f = M + deg(f_0 - f_1)` with `M = (p - 1) / 4`. So the
//! minimal degree comes from the pair with the longest common run of top coefficients.
//! Both halves are built as full families, sorted by reversed coefficient vector, and
//! matched by scanning adjacent entries of the merged order.

mod radix;
mod tree;

use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::census::{full_census, CensusOptions};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::field::FieldCtx;
use crate::gray::GrayRows;
use crate::poly::{level_alpha, level_modulus, Poly};

use radix::{adjacent_lcp, sort_indices, Keys, TAG};
pub use tree::{decompose_tree, reduce_tree, SqrtTree};

/// Largest level-zero block size `q` accepted by [`build_level_zero`].
pub const MAX_LEVEL_ZERO_Q: usize = 30;
/// Largest family modulus `M_k` (so at most `2^26` members) built by default.
pub const DEFAULT_MAX_MODULUS: usize = 26;
/// Above this many minimal pairs the search only counts them.
pub const DEFAULT_PAIR_CAP: u64 = 1_000_000;
pub const DEFAULT_KEEP: usize = 256;

/// Coefficient storage width for one arena.
pub(crate) trait Digit: Copy + Ord + Send + Sync + 'static {
    fn from_u32(v: u32) -> Self;
    fn get(self) -> u32;
    fn wrap(v: Vec<Self>) -> Arena;
    fn view(a: &Arena) -> &[Self];
}

macro_rules! digit {
    ($t:ty, $variant:ident) => {
        impl Digit for $t {
            #[inline(always)]
            fn from_u32(v: u32) -> Self {
                v as $t
            }
            #[inline(always)]
            fn get(self) -> u32 {
                self as u32
            }
            fn wrap(v: Vec<Self>) -> Arena {
                Arena::$variant(v)
            }
            fn view(a: &Arena) -> &[Self] {
                match a {
                    Arena::$variant(v) => v,
                    _ => unreachable!("arena width is fixed by p"),
                }
            }
        }
    };
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Arena {
    U8(Vec<u8>),
    U16(Vec<u16>),
    U32(Vec<u32>),
}

digit!(u8, U8);
digit!(u16, U16);
digit!(u32, U32);

impl Arena {
    fn len(&self) -> usize {
        match self {
            Arena::U8(v) => v.len(),
            Arena::U16(v) => v.len(),
            Arena::U32(v) => v.len(),
        }
    }

    fn at(&self, j: usize) -> u32 {
        match self {
            Arena::U8(v) => v[j] as u32,
            Arena::U16(v) => v[j] as u32,
            Arena::U32(v) => v[j],
        }
    }
}

/// Runs a generic body with the digit type chosen by `p`.
macro_rules! by_width {
    ($p:expr, $d:ident => $body:expr) => {
        if $p < 256 {
            type $d = u8;
            $body
        } else if $p < 65536 {
            type $d = u16;
            $body
        } else {
            type $d = u32;
            $body
        }
    };
}

/// All square-root polynomials on one block `S_i^k`, stored as one contiguous arena of
/// `len * M_k` coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelFamily {
    p: u32,
    level: usize,
    block: usize,
    modulus: usize,
    arena: Arena,
}

impl LevelFamily {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.arena.len() / self.modulus
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn member(&self, j: usize) -> Poly {
        let m = self.modulus;
        Poly::new(
            self.p,
            (j * m..(j + 1) * m).map(|t| self.arena.at(t)).collect(),
        )
    }

    pub fn members(&self) -> impl Iterator<Item = Poly> + '_ {
        (0..self.len()).map(|j| self.member(j))
    }

    pub fn contains(&self, f: &Poly) -> bool {
        f.p() == self.p && f.len() == self.modulus && self.members().any(|g| &g == f)
    }

    /// True iff every member squares to `a` at every point `a` of its block.
    pub fn verify(&self, ctx: &FieldCtx) -> bool {
        let stride = ctx.block_count() >> self.level;
        let points: Vec<u32> = (self.block..ctx.r_usize())
            .step_by(stride)
            .map(|n| ctx.gamma_pow(2 * n as i64))
            .collect();
        points.len() == self.modulus
            && self.members().all(|f| {
                points.iter().all(|&a| {
                    let v = f.eval(a);
                    ctx.mul(v, v) == a
                })
            })
    }
}

fn check_block(ctx: &FieldCtx, k: usize, i: usize) -> Result<()> {
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
    let count = ctx.block_count() >> k;
    if i >= count {
        return Err(Error::BlockOutOfRange { block: i, count });
    }
    Ok(())
}

/// `gamma^(i - 2ik)`: the factor that [`crate::ts::shift_family`] applies to coefficient `k`.
fn shift_factors(ctx: &FieldCtx, m: usize, i: i64) -> Vec<u32> {
    (0..m)
        .map(|k| ctx.gamma_pow(i - 2 * i * k as i64))
        .collect()
}

fn shift_arena<D: Digit>(ctx: &FieldCtx, src: &[D], m: usize, i: i64, par: Parallelism) -> Vec<D> {
    let factors = shift_factors(ctx, m, i);
    let p = ctx.p() as u64;
    let mut out = src.to_vec();
    let chunk = m * (1 << 12);
    par.for_each_chunk_mut(&mut out, chunk, |_, piece| {
        for row in piece.chunks_mut(m) {
            for (c, &f) in row.iter_mut().zip(&factors) {
                *c = D::from_u32((c.get() as u64 * f as u64 % p) as u32);
            }
        }
    });
    out
}

fn level_zero_arena<D: Digit>(ctx: &FieldCtx, par: Parallelism) -> Vec<D> {
    let q = ctx.q_usize();
    let p = ctx.p();
    let pm1 = p as usize - 1;
    let unit = pm1 / q;
    let m = q.div_ceil(2);
    let inv_q = ctx.inv(q as u32 % p);
    // row n: contribution of the sign at point zeta_q^n to each coefficient k
    let rows: Vec<u32> = (0..q)
        .flat_map(|n| {
            (0..q).map(move |k| {
                let e = ((m + q - k) % q) * unit;
                (e * n % pm1) as i64
            })
        })
        .map(|e| ctx.mul(inv_q, ctx.gamma_pow(e)))
        .collect();
    let gray = GrayRows::new(p, q, q, rows);
    let total = 1usize << q;
    let mut out = vec![D::from_u32(0); total * q];
    let per_chunk = (total / (par.workers() * 8).max(1)).max(1 << 12).min(total);
    par.for_each_chunk_mut(&mut out, per_chunk * q, |c, piece| {
        let start = (c * per_chunk) as u64;
        let end = start + (piece.len() / q) as u64;
        gray.scan(start, end, |g, v| {
            let at = (g - start) as usize * q;
            for (dst, &x) in piece[at..at + q].iter_mut().zip(v) {
                *dst = D::from_u32(x);
            }
        });
    });
    out
}

/// `F_0^k` as a bare arena, built bottom-up.
fn level_arena<D: Digit>(ctx: &FieldCtx, k: usize, par: Parallelism) -> Vec<D> {
    let mut cur = level_zero_arena::<D>(ctx, par);
    let p = ctx.p() as u64;
    let half = ctx.inv(2) as u64;
    for level in 1..=k {
        let m = level_modulus(ctx, level - 1);
        let partner = (ctx.block_count() >> level) as i64;
        let other = shift_arena(ctx, &cur, m, partner, par);
        debug_assert_eq!(level_alpha(ctx, level - 1, 0), 1);
        let n = cur.len() / m;
        let mut out = vec![D::from_u32(0); n * n * 2 * m];
        par.for_each_chunk_mut(&mut out, n * 2 * m, |a, block| {
            let fa = &cur[a * m..(a + 1) * m];
            for (b, dst) in block.chunks_mut(2 * m).enumerate() {
                let fb = &other[b * m..(b + 1) * m];
                let (lo, hi) = dst.split_at_mut(m);
                for t in 0..m {
                    let x = fa[t].get() as u64;
                    let y = fb[t].get() as u64;
                    lo[t] = D::from_u32(((x + y) * half % p) as u32);
                    hi[t] = D::from_u32(((x + p - y) * half % p) as u32);
                }
            }
        });
        cur = out;
    }
    cur
}

/// All `2^q` square-root polynomials on block `S_i`, in Gray order of their sign vectors.
pub fn build_level_zero(ctx: &FieldCtx, i: usize, par: Parallelism) -> Result<LevelFamily> {
    build_level(ctx, 0, i, par)
}

/// All `2^(M_k)` square-root polynomials on `S_i^k`; member `a * |B| + b` glues member `a`
/// of `F_0^(k-1)` with member `b` of its partner block, then everything is shifted to block `i`.
pub fn build_level(ctx: &FieldCtx, k: usize, i: usize, par: Parallelism) -> Result<LevelFamily> {
    check_block(ctx, k, i)?;
    let q = ctx.q_usize();
    if q > MAX_LEVEL_ZERO_Q {
        return Err(Error::TooLarge {
            what: "block size q",
            value: q as u64,
            cap: MAX_LEVEL_ZERO_Q as u64,
        });
    }
    let modulus = level_modulus(ctx, k);
    if modulus > DEFAULT_MAX_MODULUS.max(q) {
        return Err(Error::TooLarge {
            what: "family modulus",
            value: modulus as u64,
            cap: DEFAULT_MAX_MODULUS as u64,
        });
    }
    let arena = by_width!(ctx.p(), D => {
        let mut v = level_arena::<D>(ctx, k, par);
        if i != 0 {
            v = shift_arena(ctx, &v, modulus, i as i64, par);
        }
        D::wrap(v)
    });
    Ok(LevelFamily {
        p: ctx.p(),
        level: k,
        block: i,
        modulus,
        arena,
    })
}

fn ser_big<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    MeetInTheMiddle,
    Census,
    Closed,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub comparisons: u64,
    pub memory_bytes: u64,
    pub threads: usize,
    #[serde(skip)]
    pub wall_time_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchReport {
    pub p: u32,
    pub method: SearchMethod,
    pub min_degree: usize,
    #[serde(serialize_with = "ser_big")]
    pub minimizer_count: BigUint,
    /// Best common-prefix length `L`; `min_degree = M + (M - 1 - L)`.
    pub prefix_length: Option<usize>,
    /// Modulus `M` of the two half families.
    pub modulus: Option<usize>,
    /// Smallest representatives by coefficient order, or the first ones found when the
    /// pairs were only counted.
    pub representatives: Vec<Poly>,
    /// False when the number of minimal pairs exceeded the cap and they were only counted.
    pub pairs_enumerated: bool,
    /// `ceil((p - 1) / 3)`, reported without being enforced (it fails for `p = 5`).
    pub lower_bound: usize,
    /// `r - (q - 1) / 2`, the top degree of the Tonelli-Shanks family.
    pub upper_bound: usize,
    /// Gluing level -> number of representatives whose tree cancels degree there.
    pub cancellation_levels: BTreeMap<usize, usize>,
    pub stats: SearchStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub par: Parallelism,
    pub keep: usize,
    pub pair_cap: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            par: Parallelism::Sequential,
            keep: DEFAULT_KEEP,
            pair_cap: DEFAULT_PAIR_CAP,
        }
    }
}

impl SearchOptions {
    pub fn with_par(par: Parallelism) -> Self {
        SearchOptions {
            par,
            ..Default::default()
        }
    }
}

fn bounds(ctx: &FieldCtx) -> (usize, usize) {
    let p = ctx.p() as usize;
    let q = ctx.q_usize();
    ((p - 1).div_ceil(3), ctx.r_usize() - (q - 1) / 2)
}

fn cancellation_profile(ctx: &FieldCtx, reps: &[Poly]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    if ctx.s() < 2 {
        return out;
    }
    for f in reps {
        if let Ok(t) = reduce_tree(ctx, f) {
            for k in t.cancellation_levels() {
                *out.entry(k).or_insert(0) += 1;
            }
        }
    }
    out
}

struct Matched {
    prefix: usize,
    count: BigUint,
    reps: Vec<Poly>,
    enumerated: bool,
    comparisons: u64,
    memory: u64,
}

fn match_halves<D: Digit>(
    ctx: &FieldCtx,
    a: &[D],
    b: &[D],
    m: usize,
    opts: &SearchOptions,
) -> Result<Matched> {
    let n = a.len() / m;
    let keys = Keys { a, b, m };
    let mut idx: Vec<u32> = (0..n as u32)
        .chain((0..n as u32).map(|j| j | TAG))
        .collect();
    let mut comparisons = sort_indices(&keys, &mut idx, ctx.p() as usize, opts.par);
    let lcp = adjacent_lcp(&keys, &idx, opts.par);
    comparisons += lcp.len() as u64;
    let memory =
        (std::mem::size_of_val(a) + std::mem::size_of_val(b) + 8 * idx.len() + lcp.len()) as u64;

    let best = (0..lcp.len())
        .filter(|&j| (idx[j] ^ idx[j + 1]) & TAG != 0)
        .map(|j| lcp[j] as usize)
        .max()
        .expect("both halves are non-empty");
    if best == m {
        return Err(Error::CancellationImpossible);
    }

    // maximal runs whose neighbours share at least `best` top coefficients
    let mut groups = Vec::new();
    let mut start = 0;
    for j in 0..=lcp.len() {
        if j == lcp.len() || (lcp[j] as usize) < best {
            let run = &idx[start..=j];
            let nb = run.iter().filter(|&&x| x & TAG != 0).count();
            if nb > 0 && nb < run.len() {
                groups.push(run);
            }
            start = j + 1;
        }
    }
    let count: u128 = groups
        .iter()
        .map(|g| {
            let nb = g.iter().filter(|&&x| x & TAG != 0).count() as u128;
            (g.len() as u128 - nb) * nb
        })
        .sum();
    let enumerated = count <= opts.pair_cap as u128;

    let p = ctx.p();
    let half = ctx.inv(2) as u64;
    let pp = p as u64;
    let glue = |x: u32, y: u32| -> Poly {
        let fa = &a[x as usize * m..(x as usize + 1) * m];
        let fb = &b[(y & !TAG) as usize * m..((y & !TAG) as usize + 1) * m];
        let mut coeffs = vec![0u32; 2 * m];
        for t in 0..m {
            let (u, v) = (fa[t].get() as u64, fb[t].get() as u64);
            coeffs[t] = ((u + v) * half % pp) as u32;
            coeffs[t + m] = ((u + pp - v) * half % pp) as u32;
        }
        Poly::new(p, coeffs)
    };
    let mut heap: BinaryHeap<Poly> = BinaryHeap::new();
    'outer: for g in &groups {
        for &x in g.iter().filter(|&&x| x & TAG == 0) {
            for &y in g.iter().filter(|&&y| y & TAG != 0) {
                if !enumerated && heap.len() >= opts.keep {
                    break 'outer;
                }
                heap.push(glue(x, y));
                if heap.len() > opts.keep {
                    heap.pop();
                }
            }
        }
    }
    Ok(Matched {
        prefix: best,
        count: BigUint::from(count),
        reps: heap.into_sorted_vec(),
        enumerated,
        comparisons,
        memory,
    })
}

/// All minimal-degree square-root polynomials for `p = 1 mod 4`.
pub fn minimal_search(ctx: &FieldCtx, opts: &SearchOptions) -> Result<SearchReport> {
    let started = Instant::now();
    let top = match ctx.s() {
        0 | 1 => {
            return Err(Error::WrongResidue {
                p: ctx.p(),
                residue: ctx.p() % 4,
            })
        }
        s => s as usize - 2,
    };
    let m = level_modulus(ctx, top);
    if m > DEFAULT_MAX_MODULUS {
        return Err(Error::TooLarge {
            what: "(p - 1) / 4",
            value: m as u64,
            cap: DEFAULT_MAX_MODULUS as u64,
        });
    }
    let family = build_level(ctx, top, 0, opts.par)?;
    let matched = by_width!(ctx.p(), D => {
        let a = D::view(&family.arena);
        let b = shift_arena(ctx, a, m, 1, opts.par);
        match_halves::<D>(ctx, a, &b, m, opts)?
    });
    let (lower_bound, upper_bound) = bounds(ctx);
    Ok(SearchReport {
        p: ctx.p(),
        method: SearchMethod::MeetInTheMiddle,
        min_degree: m + (m - 1 - matched.prefix),
        minimizer_count: matched.count,
        prefix_length: Some(matched.prefix),
        modulus: Some(m),
        cancellation_levels: cancellation_profile(ctx, &matched.reps),
        representatives: matched.reps,
        pairs_enumerated: matched.enumerated,
        lower_bound,
        upper_bound,
        stats: SearchStats {
            comparisons: matched.comparisons,
            memory_bytes: matched.memory,
            threads: opts.par.workers(),
            wall_time_ms: started.elapsed().as_millis(),
        },
    })
}

/// Minimal degree for `p = 3 mod 4`: `x^((p+1)/4)` and its negative, unique for `p >= 11`.
///
/// Smaller primes are settled by exhaustive census, where more polynomials tie.
pub fn min_degree_direct(ctx: &FieldCtx) -> Result<SearchReport> {
    let started = Instant::now();
    if ctx.s() != 1 {
        return Err(Error::WrongResidue {
            p: ctx.p(),
            residue: ctx.p() % 4,
        });
    }
    let p = ctx.p();
    let r = ctx.r_usize();
    let (lower_bound, upper_bound) = bounds(ctx);
    let (method, min_degree, count, representatives) = if p < 11 {
        let hist = full_census(ctx, &CensusOptions::default())?;
        let (deg, count) = hist.to_pairs()[0];
        let reps = crate::signs::enumerate_sign_vectors(
            r,
            0,
            1 << r,
            crate::signs::EnumOrder::Lexicographic,
        )?
        .map(|e| crate::fourier::coeffs_from_signs(ctx, &e))
        .collect::<Result<Vec<_>>>()?;
        let mut reps: Vec<Poly> = reps
            .into_iter()
            .filter(|f| f.degree().finite() == Some(deg))
            .collect();
        reps.sort();
        (SearchMethod::Census, deg, BigUint::from(count), reps)
    } else {
        let e = (p as usize + 1) / 4;
        let f = Poly::monomial(p, r, e, 1);
        let mut reps = vec![f.neg(), f];
        reps.sort();
        (SearchMethod::Closed, e, BigUint::from(2u32), reps)
    };
    debug_assert!(!count.is_zero());
    Ok(SearchReport {
        p,
        method,
        min_degree,
        minimizer_count: count,
        prefix_length: None,
        modulus: None,
        representatives,
        pairs_enumerated: true,
        lower_bound,
        upper_bound,
        cancellation_levels: BTreeMap::new(),
        stats: SearchStats {
            threads: 1,
            wall_time_ms: started.elapsed().as_millis(),
            ..Default::default()
        },
    })
}

/// [`min_degree_direct`] for `p = 3 mod 4`, otherwise [`minimal_search`].
pub fn find_minimal(ctx: &FieldCtx, opts: &SearchOptions) -> Result<SearchReport> {
    if ctx.s() == 1 {
        let mut rep = min_degree_direct(ctx)?;
        rep.representatives.truncate(opts.keep);
        Ok(rep)
    } else {
        minimal_search(ctx, opts)
    }
}
