//! The two summary tables: per-degree exact counts next to the heuristic expectation for
//! the whole family and for the Tonelli-Shanks family, and one line per prime with the
//! Tonelli-Shanks degree distribution.
//!
//! Cells that would need an enumeration above the configured caps hold `skipped:cap`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

use crate::census::{default_max_r, full_census, CensusOptions, DegreeHistogram};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::field::make_field_ctx;
use crate::heuristic::{naive_expected_counts, ts_expected_counts};
use crate::ts::{enumerate_ts, MAX_TS_BLOCKS};

pub const SKIPPED: &str = "skipped:cap";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cell {
    Count(u128),
    Skipped,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Count(c) => write!(f, "{c}"),
            Cell::Skipped => f.write_str(SKIPPED),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn ser_display<T: fmt::Display, S: Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Copy, Debug)]
pub struct TableOptions {
    /// Largest `r` for which the whole family is enumerated.
    pub max_r: usize,
    /// Largest block count `2^(s-1)` for which the Tonelli-Shanks family is enumerated.
    pub max_ts_blocks: usize,
    pub par: Parallelism,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            max_r: default_max_r(),
            max_ts_blocks: MAX_TS_BLOCKS,
            par: Parallelism::Sequential,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LongRow {
    pub p: u32,
    pub s: u32,
    pub q: u32,
    pub degree: usize,
    #[serde(rename = "ALL_Counts")]
    pub all_counts: Cell,
    #[serde(rename = "ALL_expected", serialize_with = "ser_display")]
    pub all_expected: BigUint,
    #[serde(rename = "TS_counts")]
    pub ts_counts: Cell,
    #[serde(rename = "TS_expected", serialize_with = "ser_display")]
    pub ts_expected: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TsRow {
    pub p: u32,
    pub s: u32,
    pub q: u32,
    /// `None` when the family is above the block cap.
    pub degree_counts: Option<BTreeMap<usize, u128>>,
    pub expected_counts_rounded: BTreeMap<usize, String>,
}

fn ts_histogram(p: u64, opts: &TableOptions) -> Result<Option<DegreeHistogram>> {
    let ctx = make_field_ctx(p)?;
    if ctx.block_count() > opts.max_ts_blocks.min(MAX_TS_BLOCKS) {
        return Ok(None);
    }
    Ok(Some(enumerate_ts(&ctx, opts.par, false)?.histogram))
}

/// Rows `p, s, q, degree, ALL_Counts, ALL_expected, TS_counts, TS_expected` for one prime
/// `p = 1 mod 4`, ascending in degree, with explicit zeros.
///
/// Degrees run from the lowest degree that is observed or expected (rounded) to be
/// non-empty up to `r - 1`, or to the top Tonelli-Shanks degree when that is larger.
pub fn long_table_rows(p: u64, opts: &TableOptions) -> Result<Vec<LongRow>> {
    let ctx = make_field_ctx(p)?;
    if ctx.s() < 2 {
        return Err(Error::WrongResidue {
            p: ctx.p(),
            residue: ctx.p() % 4,
        });
    }
    let r = ctx.r_usize();
    let census = if r <= opts.max_r {
        let copts = CensusOptions {
            max_r: opts.max_r,
            par: opts.par,
            range: None,
        };
        Some(full_census(&ctx, &copts)?)
    } else {
        None
    };
    let ts = ts_histogram(p, opts)?;
    let ts_model = ts_expected_counts(&ctx);
    let ts_top = ts_model.rows.first().map_or(0, |row| row.degree);

    let naive = naive_expected_counts(&ctx, 0..=r - 1);
    let mut low = r - 1;
    let mut consider = |d: Option<usize>| {
        if let Some(d) = d {
            low = low.min(d);
        }
    };
    consider(
        census
            .as_ref()
            .and_then(|h| h.to_pairs().first().map(|x| x.0)),
    );
    consider(ts.as_ref().and_then(|h| h.to_pairs().first().map(|x| x.0)));
    consider(naive.rounded_nonzero().keys().next().copied());
    consider(ts_model.rounded_nonzero().keys().next().copied());
    let high = (r - 1).max(ts_top);

    let naive = naive_expected_counts(&ctx, low..=high);
    let rows = (low..=high)
        .map(|degree| LongRow {
            p: ctx.p(),
            s: ctx.s(),
            q: ctx.q(),
            degree,
            all_counts: census
                .as_ref()
                .map_or(Cell::Skipped, |h| Cell::Count(h.count(degree))),
            all_expected: naive
                .row(degree)
                .map(|x| x.rounded.clone())
                .unwrap_or_default(),
            ts_counts: ts
                .as_ref()
                .map_or(Cell::Skipped, |h| Cell::Count(h.count(degree))),
            ts_expected: ts_model
                .row(degree)
                .map(|x| x.rounded.clone())
                .unwrap_or_default(),
        })
        .collect();
    Ok(rows)
}

/// The Tonelli-Shanks line for any odd prime; for `p = 3 mod 4` the family is `+-x^((p+1)/4)`.
pub fn ts_table_row(p: u64, opts: &TableOptions) -> Result<TsRow> {
    let ctx = make_field_ctx(p)?;
    let degree_counts = ts_histogram(p, opts)?.map(|h| h.to_pairs().into_iter().collect());
    let expected_counts_rounded = ts_expected_counts(&ctx)
        .rounded_nonzero()
        .into_iter()
        .map(|(d, c)| (d, c.to_string()))
        .collect();
    Ok(TsRow {
        p: ctx.p(),
        s: ctx.s(),
        q: ctx.q(),
        degree_counts,
        expected_counts_rounded,
    })
}

/// `{ deg 7: 16, deg 8: 240 }`.
pub fn format_degree_map<V: fmt::Display>(map: &BTreeMap<usize, V>) -> String {
    let body: Vec<String> = map.iter().map(|(d, c)| format!("deg {d}: {c}")).collect();
    format!("{{ {} }}", body.join(", "))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn long_table_csv(rows: &[LongRow]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record([
        "p",
        "s",
        "q",
        "degree",
        "ALL_Counts",
        "ALL_expected",
        "TS_counts",
        "TS_expected",
    ])
    .map_err(io)?;
    for row in rows {
        w.write_record([
            row.p.to_string(),
            row.s.to_string(),
            row.q.to_string(),
            row.degree.to_string(),
            row.all_counts.to_string(),
            row.all_expected.to_string(),
            row.ts_counts.to_string(),
            row.ts_expected.to_string(),
        ])
        .map_err(io)?;
    }
    finish(w)
}

pub fn ts_table_csv(rows: &[TsRow]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["p", "s", "q", "degree_counts", "expected_counts_rounded"])
        .map_err(io)?;
    for row in rows {
        let counts = row
            .degree_counts
            .as_ref()
            .map_or_else(|| SKIPPED.to_string(), format_degree_map);
        w.write_record([
            row.p.to_string(),
            row.s.to_string(),
            row.q.to_string(),
            counts,
            format_degree_map(&row.expected_counts_rounded),
        ])
        .map_err(io)?;
    }
    finish(w)
}

/// Both tables for a list of primes; the long table takes only the primes `= 1 mod 4`.
pub fn reproduce_tables(primes: &[u64], opts: &TableOptions) -> Result<(Vec<LongRow>, Vec<TsRow>)> {
    let mut long = Vec::new();
    let mut ts = Vec::new();
    for &p in primes {
        if p % 4 == 1 {
            long.extend(long_table_rows(p, opts)?);
        }
        ts.push(ts_table_row(p, opts)?);
    }
    Ok((long, ts))
}
