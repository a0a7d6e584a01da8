//! Exact degree histograms over sign-vector families, by Gray-code enumeration.
//!
//! Every coefficient is linear in the signs, so each Gray step updates all coefficients
//! with one row addition and the degree is read by scanning down from the top. Work is split
//! into contiguous Gray-index ranges that are seeded independently; their histograms add.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::field::FieldCtx;
use crate::fourier::coeffs_from_signs;
use crate::gray::GrayRows;
use crate::poly::{slice_degree, Degree};
use crate::signs::{orbit_stats, SignVector};

/// Default cap on the sign-vector length for exhaustive enumeration.
pub const DEFAULT_MAX_R: usize = 30;

/// Environment variable that overrides [`DEFAULT_MAX_R`].
pub const CAP_ENV: &str = "SQRTPOLY_CAP_R";

/// The cap in effect: `SQRTPOLY_CAP_R` when set to an integer, else [`DEFAULT_MAX_R`].
pub fn default_max_r() -> usize {
    std::env::var(CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_R)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// All `2^r` sign vectors.
    Full,
    /// Alternating-periodic vectors `eps_(dx+y) = (-1)^x h(y)` for `h` in `E_d`.
    Alternating(usize),
    /// Tonelli-Shanks polynomials, with degrees of the unfolded glued polynomial.
    Ts,
}

impl Family {
    fn tag(&self) -> (u8, u32) {
        match self {
            Family::Full => (0, 0),
            Family::Alternating(d) => (1, *d as u32),
            Family::Ts => (2, 0),
        }
    }

    fn from_tag(tag: u8, d: u32) -> Result<Family> {
        match tag {
            0 => Ok(Family::Full),
            1 => Ok(Family::Alternating(d as usize)),
            2 => Ok(Family::Ts),
            t => Err(Error::Checkpoint(format!("unknown family tag {t}"))),
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        match s {
            "full" => Ok(Family::Full),
            "ts" => Ok(Family::Ts),
            other => other
                .strip_prefix("alternating:")
                .and_then(|d| d.parse().ok())
                .map(Family::Alternating)
                .ok_or_else(|| Error::Parse(format!("unknown family '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Full => f.write_str("full"),
            Family::Alternating(d) => write!(f, "alternating:{d}"),
            Family::Ts => f.write_str("ts"),
        }
    }
}

/// Degree -> exact count, with the index ranges of the enumeration it covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub p: u32,
    pub s: u32,
    pub q: u32,
    pub family: Family,
    /// Length of the enumerated sign vectors; the index space is `0..2^d`.
    pub d: usize,
    coverage: Vec<(u64, u64)>,
    counts: BTreeMap<Degree, u128>,
}

impl DegreeHistogram {
    pub fn new(ctx: &FieldCtx, family: Family, d: usize, range: (u64, u64)) -> DegreeHistogram {
        DegreeHistogram {
            p: ctx.p(),
            s: ctx.s(),
            q: ctx.q(),
            family,
            d,
            coverage: if range.0 < range.1 {
                vec![range]
            } else {
                vec![]
            },
            counts: BTreeMap::new(),
        }
    }

    /// Adds counts from a slot array where slot 0 is the zero polynomial and slot `k + 1`
    /// is degree `k`.
    pub(crate) fn add_slots(&mut self, slots: &[u128]) {
        for (i, &c) in slots.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let deg = if i == 0 {
                Degree::NegInfinity
            } else {
                Degree::Finite(i - 1)
            };
            *self.counts.entry(deg).or_insert(0) += c;
        }
    }

    pub fn add(&mut self, degree: Degree, count: u128) {
        if count > 0 {
            *self.counts.entry(degree).or_insert(0) += count;
        }
    }

    pub fn counts(&self) -> &BTreeMap<Degree, u128> {
        &self.counts
    }

    pub fn count(&self, degree: usize) -> u128 {
        self.counts
            .get(&Degree::Finite(degree))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u128 {
        self.counts.values().sum()
    }

    pub fn space(&self) -> u64 {
        1u64 << self.d
    }

    pub fn coverage(&self) -> &[(u64, u64)] {
        &self.coverage
    }

    /// True when the coverage is the whole index space.
    pub fn is_complete(&self) -> bool {
        self.coverage == [(0, self.space())]
    }

    /// Nonzero buckets as `(degree, count)`, ascending; the zero polynomial is skipped.
    pub fn to_pairs(&self) -> Vec<(usize, u128)> {
        self.counts
            .iter()
            .filter_map(|(d, &c)| d.finite().map(|d| (d, c)))
            .collect()
    }

    pub fn min_degree(&self) -> Option<Degree> {
        self.counts.keys().next().copied()
    }

    /// Adds `other` into `self`; the two must describe the same family and disjoint ranges.
    pub fn merge(&mut self, other: &DegreeHistogram) -> Result<()> {
        if (self.p, self.family, self.d) != (other.p, other.family, other.d) {
            return Err(Error::MergeConflict(format!(
                "p={} {} d={} vs p={} {} d={}",
                self.p, self.family, self.d, other.p, other.family, other.d
            )));
        }
        let mut cov: Vec<(u64, u64)> = self
            .coverage
            .iter()
            .chain(&other.coverage)
            .copied()
            .collect();
        cov.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::new();
        for (a, b) in cov {
            match merged.last_mut() {
                Some(last) if a < last.1 => {
                    return Err(Error::MergeConflict(format!("ranges overlap at index {a}")))
                }
                Some(last) if a == last.1 => last.1 = b,
                _ => merged.push((a, b)),
            }
        }
        self.coverage = merged;
        for (&d, &c) in &other.counts {
            self.add(d, c);
        }
        Ok(())
    }

    pub fn to_file(&self) -> HistogramFile {
        HistogramFile {
            p: self.p,
            s: self.s,
            q: self.q,
            family: self.family.to_string(),
            d: self.d,
            coverage: self
                .coverage
                .iter()
                .map(|(a, b)| [a.to_string(), b.to_string()])
                .collect(),
            complete: self.is_complete(),
            total: self.total().to_string(),
            counts: self
                .counts
                .iter()
                .map(|(d, c)| (d.to_string(), c.to_string()))
                .collect(),
        }
    }

    pub fn from_file(file: &HistogramFile) -> Result<DegreeHistogram> {
        let parse_u = |s: &str| -> Result<u128> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad count '{s}'")))
        };
        let mut coverage = Vec::new();
        for [a, b] in &file.coverage {
            coverage.push((parse_u(a)? as u64, parse_u(b)? as u64));
        }
        let mut counts = BTreeMap::new();
        for (d, c) in &file.counts {
            counts.insert(Degree::parse(d)?, parse_u(c)?);
        }
        Ok(DegreeHistogram {
            p: file.p,
            s: file.s,
            q: file.q,
            family: Family::parse(&file.family)?,
            d: file.d,
            coverage,
            counts,
        })
    }

    /// JSON object with counts as decimal strings.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("histogram serializes")
    }

    pub fn from_json(text: &str) -> Result<DegreeHistogram> {
        let file: HistogramFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(&file)
    }

    /// CSV with columns `p,s,q,degree,count,family,shard_count`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["p", "s", "q", "degree", "count", "family", "shard_count"])
            .map_err(io)?;
        for (d, c) in &self.counts {
            w.write_record([
                self.p.to_string(),
                self.s.to_string(),
                self.q.to_string(),
                d.to_string(),
                c.to_string(),
                self.family.to_string(),
                self.coverage.len().to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Serialized form of a [`DegreeHistogram`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct HistogramFile {
    pub p: u32,
    pub s: u32,
    pub q: u32,
    pub family: String,
    pub d: usize,
    pub coverage: Vec<[String; 2]>,
    pub complete: bool,
    pub total: String,
    #[serde(serialize_with = "ser_counts_by_degree")]
    pub counts: BTreeMap<String, String>,
}

/// Writes the count map in degree order rather than string order.
fn ser_counts_by_degree<S: serde::Serializer>(
    counts: &BTreeMap<String, String>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut entries: Vec<(&String, &String)> = counts.iter().collect();
    entries.sort_by_key(|(d, _)| Degree::parse(d).ok());
    let mut map = s.serialize_map(Some(entries.len()))?;
    for (d, c) in entries {
        map.serialize_entry(d, c)?;
    }
    map.end()
}

#[derive(Clone, Copy, Debug)]
pub struct CensusOptions {
    pub max_r: usize,
    pub par: Parallelism,
    /// Gray-index range to enumerate; `None` is the whole space.
    pub range: Option<(u64, u64)>,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            max_r: default_max_r(),
            par: Parallelism::Sequential,
            range: None,
        }
    }
}

impl CensusOptions {
    pub fn with_par(par: Parallelism) -> Self {
        CensusOptions {
            par,
            ..Default::default()
        }
    }
}

/// Range of shard `index` when `0..len` is cut into `total` near-equal pieces.
pub fn shard_range(len: u64, index: u64, total: u64) -> Result<(u64, u64)> {
    if total == 0 || index >= total {
        return Err(Error::InvalidShard { index, total });
    }
    let a = (len as u128 * index as u128 / total as u128) as u64;
    let b = (len as u128 * (index + 1) as u128 / total as u128) as u64;
    Ok((a, b))
}

/// Row `n` is the coefficient vector contributed by position `n`: `(1/r) gamma^(n(1-2k))`.
fn full_rows(ctx: &FieldCtx) -> Vec<u32> {
    let r = ctx.r_usize();
    let inv_r = ctx.inv(r as u32);
    let mut rows = Vec::with_capacity(r * r);
    for n in 0..r as i64 {
        for k in 0..r as i64 {
            rows.push(ctx.mul(inv_r, ctx.gamma_pow(n * (1 - 2 * k))));
        }
    }
    rows
}

/// Row `y` is `sum_x (-1)^x (1/r) gamma^((dx+y)(1-2k))` for the alternating family of period `d`.
fn alternating_rows(ctx: &FieldCtx, d: usize) -> Vec<u32> {
    let r = ctx.r_usize();
    let inv_r = ctx.inv(r as u32);
    let mut rows = vec![0u32; d * r];
    for y in 0..d {
        for x in 0..r / d {
            let n = (d * x + y) as i64;
            for k in 0..r {
                let t = ctx.mul(inv_r, ctx.gamma_pow(n * (1 - 2 * k as i64)));
                let slot = &mut rows[y * r + k];
                *slot = if x % 2 == 1 {
                    ctx.sub(*slot, t)
                } else {
                    ctx.add(*slot, t)
                };
            }
        }
    }
    rows
}

fn check_alternating(ctx: &FieldCtx, d: usize) -> Result<()> {
    let r = ctx.r_usize();
    if d == 0 || r % d != 0 || (r / d) % 2 == 0 {
        return Err(Error::InvalidDivisor { d, r });
    }
    Ok(())
}

fn check_cap(what: &'static str, value: usize, cap: usize) -> Result<()> {
    let cap = cap.min(63);
    if value > cap {
        return Err(Error::TooLarge {
            what,
            value: value as u64,
            cap: cap as u64,
        });
    }
    Ok(())
}

pub(crate) fn family_rows(ctx: &FieldCtx, family: Family) -> Result<(usize, GrayRows)> {
    let r = ctx.r_usize();
    match family {
        Family::Full => Ok((r, GrayRows::new(ctx.p(), r, r, full_rows(ctx)))),
        Family::Alternating(d) => {
            check_alternating(ctx, d)?;
            Ok((d, GrayRows::new(ctx.p(), d, r, alternating_rows(ctx, d))))
        }
        Family::Ts => Err(Error::Parse(
            "the Tonelli-Shanks family is enumerated by ts::enumerate_ts".into(),
        )),
    }
}

fn resolve_range(d: usize, range: Option<(u64, u64)>) -> Result<(u64, u64)> {
    let len = 1u64 << d;
    let (start, end) = range.unwrap_or((0, len));
    if start > end || end > len {
        return Err(Error::RangeOutOfBounds { start, end, len });
    }
    Ok((start, end))
}

fn scan_into(
    hist: &mut DegreeHistogram,
    rows: &GrayRows,
    m: usize,
    range: (u64, u64),
    par: Parallelism,
) {
    let parts = rows.scan_chunks(
        range.0,
        range.1,
        par,
        || vec![0u128; m + 1],
        |acc, _, v| {
            let slot = slice_degree(v).finite().map_or(0, |x| x + 1);
            acc[slot] += 1;
        },
    );
    for acc in parts {
        hist.add_slots(&acc);
    }
}

fn run_family_census(
    ctx: &FieldCtx,
    family: Family,
    opts: &CensusOptions,
) -> Result<DegreeHistogram> {
    let d = match family {
        Family::Full => ctx.r_usize(),
        Family::Alternating(d) => {
            check_alternating(ctx, d)?;
            d
        }
        Family::Ts => 0,
    };
    check_cap("sign vector length", d, opts.max_r)?;
    let (d, rows) = family_rows(ctx, family)?;
    let range = resolve_range(d, opts.range)?;
    let mut hist = DegreeHistogram::new(ctx, family, d, range);
    scan_into(&mut hist, &rows, ctx.r_usize(), range, opts.par);
    Ok(hist)
}

/// Degree histogram of `f_eps` over all `eps` in `E_r` (or the requested index range).
pub fn full_census(ctx: &FieldCtx, opts: &CensusOptions) -> Result<DegreeHistogram> {
    run_family_census(ctx, Family::Full, opts)
}

/// Degree histogram over the `2^d` alternating-periodic vectors of period `d`.
pub fn family_census(ctx: &FieldCtx, d: usize, opts: &CensusOptions) -> Result<DegreeHistogram> {
    run_family_census(ctx, Family::Alternating(d), opts)
}

/// Number of `eps` in `E_r` with `c_k(f_eps) = 0`, tracking that single coefficient only.
pub fn coefficient_vanish_census(
    ctx: &FieldCtx,
    k: usize,
    opts: &CensusOptions,
) -> Result<BigUint> {
    let r = ctx.r_usize();
    check_cap("r", r, opts.max_r)?;
    if k >= r {
        return Err(Error::RangeOutOfBounds {
            start: k as u64,
            end: k as u64 + 1,
            len: r as u64,
        });
    }
    let inv_r = ctx.inv(r as u32);
    let rows = (0..r as i64)
        .map(|n| ctx.mul(inv_r, ctx.gamma_pow(n * (1 - 2 * k as i64))))
        .collect();
    let g = GrayRows::new(ctx.p(), r, 1, rows);
    let range = resolve_range(r, opts.range)?;
    let total: u128 = g
        .scan_chunks(
            range.0,
            range.1,
            opts.par,
            || 0u128,
            |a, _, v| *a += (v[0] == 0) as u128,
        )
        .into_iter()
        .sum();
    Ok(BigUint::from(total))
}

/// Solutions of `H_{r,l}(eps) = 0` for all `l` in a set, grouped by flip-shift order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitDivisibilityReport {
    pub ells: Vec<i64>,
    pub solutions: u64,
    /// order -> number of solutions with that order
    pub by_order: BTreeMap<usize, u64>,
    pub all_divisible: bool,
}

/// Largest `r` accepted by [`orbit_divisibility_check`].
pub const MAX_ORBIT_R: usize = 24;

/// Checks that each order class of the common vanishing set of `H_{r,l}`, `l` in `ells`,
/// has a size divisible by its order.
pub fn orbit_divisibility_check(
    ctx: &FieldCtx,
    ells: &[i64],
    par: Parallelism,
) -> Result<OrbitDivisibilityReport> {
    let r = ctx.r_usize();
    check_cap("r", r, MAX_ORBIT_R)?;
    for &l in ells {
        if l % 2 == 0 {
            return Err(Error::EvenExponent(l));
        }
    }
    let m = ells.len().max(1);
    let mut rows = vec![0u32; r * m];
    for n in 0..r {
        for (j, &l) in ells.iter().enumerate() {
            rows[n * m + j] = ctx.gamma_pow(n as i64 * l);
        }
    }
    let g = GrayRows::new(ctx.p(), r, m, rows);
    let hits: Vec<u64> = g
        .scan_chunks(0, 1 << r, par, Vec::new, |acc: &mut Vec<u64>, i, v| {
            if !ells.is_empty() && v.iter().all(|&x| x == 0) {
                acc.push(i);
            }
        })
        .into_iter()
        .flatten()
        .collect();
    let mut by_order = BTreeMap::new();
    for &i in &hits {
        let st = orbit_stats(&SignVector::from_gray_index(r, i));
        *by_order.entry(st.order).or_insert(0u64) += 1;
    }
    let all_divisible = by_order.iter().all(|(&o, &c)| c % o as u64 == 0);
    Ok(OrbitDivisibilityReport {
        ells: ells.to_vec(),
        solutions: hits.len() as u64,
        by_order,
        all_divisible,
    })
}

/// Compares the Gray-code coefficients with a fresh inversion every `every` steps and at
/// the last index of `range`; returns the number of comparisons made.
pub fn spot_check_incremental(ctx: &FieldCtx, range: (u64, u64), every: u64) -> Result<u64> {
    let r = ctx.r_usize();
    let (_, rows) = family_rows(ctx, Family::Full)?;
    let range = resolve_range(r, Some(range))?;
    let mut checked = 0u64;
    let mut mismatch = None;
    rows.scan(range.0, range.1, |i, v| {
        if mismatch.is_none() && ((i - range.0) % every == 0 || i + 1 == range.1) {
            let eps = SignVector::from_gray_index(r, i);
            let fresh = coeffs_from_signs(ctx, &eps).expect("length r");
            if fresh.coeffs() != v {
                mismatch = Some(i);
            }
            checked += 1;
        }
    });
    match mismatch {
        Some(i) => Err(Error::Checkpoint(format!(
            "incremental coefficients diverge at index {i}"
        ))),
        None => Ok(checked),
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"SQPCENS\0";
const CHECKPOINT_VERSION: u32 = 1;

/// Resumable census state: a fixed binary header followed by `degree count` text lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub p: u32,
    pub family: Family,
    pub shard_index: u64,
    pub shard_total: u64,
    pub start: u64,
    pub next_index: u64,
    pub end: u64,
    pub counts: BTreeMap<Degree, u128>,
}

impl Checkpoint {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.p.to_le_bytes());
        let (tag, d) = self.family.tag();
        buf.push(tag);
        buf.extend_from_slice(&d.to_le_bytes());
        for v in [
            self.shard_index,
            self.shard_total,
            self.start,
            self.next_index,
            self.end,
        ] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for (deg, c) in &self.counts {
            writeln!(buf, "{deg} {c}")?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, &buf)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        let mut file = BufReader::new(fs::File::open(path)?);
        let mut header = [0u8; 8 + 4 + 4 + 1 + 4 + 5 * 8];
        file.read_exact(&mut header)
            .map_err(|_| Error::Checkpoint("truncated header".into()))?;
        if &header[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a census checkpoint".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let p = u32_at(12);
        let family = Family::from_tag(header[16], u32_at(17))?;
        let mut counts = BTreeMap::new();
        for line in file.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (d, c) = line
                .split_once(' ')
                .ok_or_else(|| Error::Checkpoint(format!("bad payload line '{line}'")))?;
            let c: u128 = c
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad count '{c}'")))?;
            counts.insert(Degree::parse(d)?, c);
        }
        Ok(Checkpoint {
            p,
            family,
            shard_index: u64_at(21),
            shard_total: u64_at(29),
            start: u64_at(37),
            next_index: u64_at(45),
            end: u64_at(53),
            counts,
        })
    }
}

/// Census of one shard that saves progress to `checkpoint` after every `chunk` indices and
/// resumes from it when the file already exists.
pub fn resumable_census(
    ctx: &FieldCtx,
    family: Family,
    shard: (u64, u64),
    checkpoint: &Path,
    chunk: u64,
    opts: &CensusOptions,
) -> Result<DegreeHistogram> {
    let d = match family {
        Family::Full => ctx.r_usize(),
        Family::Alternating(d) => {
            check_alternating(ctx, d)?;
            d
        }
        Family::Ts => {
            return Err(Error::Parse(
                "checkpointing applies to full and alternating families".into(),
            ))
        }
    };
    check_cap("sign vector length", d, opts.max_r)?;
    let (start, end) = shard_range(1u64 << d, shard.0, shard.1)?;
    let mut state = if checkpoint.exists() {
        let cp = Checkpoint::read(checkpoint)?;
        let expected = (ctx.p(), family, shard.0, shard.1, start, end);
        let found = (
            cp.p,
            cp.family,
            cp.shard_index,
            cp.shard_total,
            cp.start,
            cp.end,
        );
        if expected != found || cp.next_index < start || cp.next_index > end {
            return Err(Error::Checkpoint(format!(
                "checkpoint describes p={} {} shard {}/{} range {}..{}, not this run",
                cp.p, cp.family, cp.shard_index, cp.shard_total, cp.start, cp.end
            )));
        }
        cp
    } else {
        Checkpoint {
            p: ctx.p(),
            family,
            shard_index: shard.0,
            shard_total: shard.1,
            start,
            next_index: start,
            end,
            counts: BTreeMap::new(),
        }
    };
    let (_, rows) = family_rows(ctx, family)?;
    let chunk = chunk.max(1);
    while state.next_index < end {
        let stop = (state.next_index + chunk).min(end);
        let mut part = DegreeHistogram::new(ctx, family, d, (state.next_index, stop));
        scan_into(
            &mut part,
            &rows,
            ctx.r_usize(),
            (state.next_index, stop),
            opts.par,
        );
        for (&deg, &c) in part.counts() {
            *state.counts.entry(deg).or_insert(0) += c;
        }
        state.next_index = stop;
        state.write(checkpoint)?;
    }
    let mut hist = DegreeHistogram::new(ctx, family, d, (start, end));
    for (&deg, &c) in &state.counts {
        hist.add(deg, c);
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field_ctx;
    use crate::fourier::count_vanishing_formula;
    use crate::ts::enumerate_ts;

    fn seq() -> CensusOptions {
        CensusOptions {
            max_r: DEFAULT_MAX_R,
            par: Parallelism::Sequential,
            range: None,
        }
    }

    #[test]
    fn small_prime_histograms() {
        let expect: &[(u64, &[(usize, u128)])] = &[
            (3, &[(0, 2)]),
            (5, &[(1, 4)]),
            (7, &[(2, 8)]),
            (11, &[(3, 2), (4, 30)]),
            (13, &[(5, 64)]),
            (17, &[(6, 16), (7, 240)]),
        ];
        for &(p, pairs) in expect {
            let c = make_field_ctx(p).unwrap();
            let h = full_census(&c, &seq()).unwrap();
            assert_eq!(h.to_pairs(), pairs, "p = {p}");
            assert_eq!(h.total(), 1u128 << c.r());
            assert!(h.is_complete());
        }
    }

    #[test]
    fn p29_census() {
        let c = make_field_ctx(29).unwrap();
        let h = full_census(&c, &seq()).unwrap();
        assert_eq!(h.to_pairs(), [(11, 4), (12, 560), (13, 15820)]);
        let top = (1u128 << 14) - 564;
        assert_eq!(h.count(13), top);
    }

    #[test]
    fn shard_independence() {
        let c = make_field_ctx(29).unwrap();
        let whole = full_census(&c, &seq()).unwrap();
        let threaded = full_census(&c, &CensusOptions::with_par(Parallelism::Threads(3))).unwrap();
        assert_eq!(whole, threaded);
        let mut merged: Option<DegreeHistogram> = None;
        for i in [2u64, 0, 1] {
            let opts = CensusOptions {
                range: Some(shard_range(1 << 14, i, 3).unwrap()),
                ..seq()
            };
            let part = full_census(&c, &opts).unwrap();
            assert!(!part.is_complete());
            match merged.as_mut() {
                None => merged = Some(part),
                Some(m) => m.merge(&part).unwrap(),
            }
        }
        assert_eq!(merged.unwrap(), whole);
    }

    #[test]
    fn merge_rejects_overlap_and_mismatch() {
        let c = make_field_ctx(13).unwrap();
        let opts = CensusOptions {
            range: Some((0, 40)),
            ..seq()
        };
        let a = full_census(&c, &opts).unwrap();
        let mut b = a.clone();
        assert!(matches!(b.merge(&a), Err(Error::MergeConflict(_))));
        let c17 = make_field_ctx(17).unwrap();
        let mut other = full_census(&c17, &seq()).unwrap();
        assert!(matches!(other.merge(&a), Err(Error::MergeConflict(_))));
    }

    #[test]
    fn family_census_examples() {
        let c41 = make_field_ctx(41).unwrap();
        let fam = family_census(&c41, 4, &seq()).unwrap();
        let ts = enumerate_ts(&c41, Parallelism::Sequential, false)
            .unwrap()
            .histogram;
        assert_eq!(fam.to_pairs(), ts.to_pairs());
        assert_eq!(fam.to_pairs(), [(18, 16)]);

        let c29 = make_field_ctx(29).unwrap();
        let fam = family_census(&c29, 2, &seq()).unwrap();
        assert_eq!(fam.to_pairs(), [(11, 4)]);
        let whole = family_census(&c29, 14, &seq()).unwrap();
        assert_eq!(whole.total(), 1 << 14);
        assert_eq!(
            whole.to_pairs(),
            full_census(&c29, &seq()).unwrap().to_pairs()
        );

        assert!(matches!(
            family_census(&c29, 7, &seq()),
            Err(Error::InvalidDivisor { .. })
        ));
        assert!(matches!(
            family_census(&c29, 3, &seq()),
            Err(Error::InvalidDivisor { .. })
        ));
    }

    #[test]
    fn family_degrees_are_admissible() {
        for (p, d) in [(41u64, 4usize), (37, 2), (73, 4), (61, 2), (61, 6), (53, 2)] {
            let c = make_field_ctx(p).unwrap();
            let r = c.r_usize();
            let big_d = r / d;
            let h = family_census(&c, d, &seq()).unwrap();
            for (deg, _) in h.to_pairs() {
                let top = r - (big_d - 1) / 2;
                assert!(
                    deg <= top && (top - deg) % big_d == 0,
                    "p = {p}, d = {d}, deg = {deg}"
                );
            }
        }
    }

    #[test]
    fn cap_refusal() {
        let c = make_field_ctx(61).unwrap();
        let opts = CensusOptions { max_r: 20, ..seq() };
        let err = full_census(&c, &opts).unwrap_err();
        assert!(err.is_cap_refusal());
        let c73 = make_field_ctx(73).unwrap();
        assert!(full_census(&c73, &seq()).unwrap_err().is_cap_refusal());
    }

    #[test]
    fn single_coefficient_census() {
        let c29 = make_field_ctx(29).unwrap();
        assert_eq!(
            coefficient_vanish_census(&c29, 13, &seq()).unwrap(),
            BigUint::from(564u32)
        );
        let c13 = make_field_ctx(13).unwrap();
        assert_eq!(
            coefficient_vanish_census(&c13, 0, &seq()).unwrap(),
            BigUint::from(4u32)
        );
        for p in [13u64, 17, 29] {
            let c = make_field_ctx(p).unwrap();
            let r = c.r_usize();
            for k in 0..r {
                let ell = 1 - 2 * k as i64;
                if let Ok(formula) = count_vanishing_formula(&c, ell) {
                    assert_eq!(coefficient_vanish_census(&c, k, &seq()).unwrap(), formula);
                }
            }
        }
    }

    #[test]
    fn orbit_divisibility() {
        let c13 = make_field_ctx(13).unwrap();
        let rep = orbit_divisibility_check(&c13, &[1], Parallelism::Sequential).unwrap();
        assert_eq!(rep.solutions, 4);
        assert!(rep.all_divisible);
        let c17 = make_field_ctx(17).unwrap();
        let rep = orbit_divisibility_check(&c17, &[1 - 2 * 7], Parallelism::Sequential).unwrap();
        assert!(rep.all_divisible);
        let empty = orbit_divisibility_check(&c13, &[1, 3, 5], Parallelism::Sequential).unwrap();
        assert!(empty.all_divisible);
    }

    #[test]
    fn incremental_matches_fresh_inversion() {
        let c = make_field_ctx(41).unwrap();
        assert!(spot_check_incremental(&c, (0, 1 << 18), 1 << 12).unwrap() >= 64);
    }

    #[test]
    fn json_and_csv() {
        let c = make_field_ctx(29).unwrap();
        let h = full_census(&c, &seq()).unwrap();
        let json = h.to_json();
        assert!(json.contains("\"13\": \"15820\""));
        assert_eq!(DegreeHistogram::from_json(&json).unwrap(), h);
        let csv = h.to_csv().unwrap();
        assert_eq!(
            csv,
            "p,s,q,degree,count,family,shard_count\n29,2,7,11,4,full,1\n29,2,7,12,560,full,1\n29,2,7,13,15820,full,1\n"
        );
    }

    #[test]
    fn checkpoint_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p29.ckpt");
        let c = make_field_ctx(29).unwrap();
        let first = resumable_census(&c, Family::Full, (1, 2), &path, 1000, &seq()).unwrap();
        let cp = Checkpoint::read(&path).unwrap();
        assert_eq!(cp.next_index, cp.end);
        // A finished checkpoint resumes to the same answer without rescanning.
        let again = resumable_census(&c, Family::Full, (1, 2), &path, 1000, &seq()).unwrap();
        assert_eq!(first, again);

        // Interrupted state: rewind the checkpoint and resume.
        let half = Checkpoint {
            next_index: cp.start,
            counts: BTreeMap::new(),
            ..cp.clone()
        };
        half.write(&path).unwrap();
        let resumed = resumable_census(&c, Family::Full, (1, 2), &path, 3000, &seq()).unwrap();
        assert_eq!(resumed, first);

        let other = resumable_census(&c, Family::Full, (0, 2), &path, 1000, &seq());
        assert!(matches!(other, Err(Error::Checkpoint(_))));

        let mut whole = resumable_census(
            &c,
            Family::Full,
            (0, 2),
            &dir.path().join("a"),
            5000,
            &seq(),
        )
        .unwrap();
        whole.merge(&first).unwrap();
        assert_eq!(whole, full_census(&c, &seq()).unwrap());

        fs::write(&path, b"garbage").unwrap();
        assert!(matches!(Checkpoint::read(&path), Err(Error::Checkpoint(_))));
    }
}
