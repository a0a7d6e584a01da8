//! Command-line front end. [`run`] parses arguments, executes one subcommand and returns
//! the process exit code: 0 on success, 2 for invalid input, 3 when a resource cap refuses
//! the work. Reports go to standard output (or `--out`); failures print one line on
//! standard error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::census::{
    default_max_r, family_census, full_census, resumable_census, shard_range, CensusOptions,
    DegreeHistogram, Family,
};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::field::{make_field_ctx, FieldCtx};
use crate::fourier::{count_vanishing_bruteforce, count_vanishing_formula, signs_from_poly};
use crate::heuristic::{
    approx_f64, family_expected_counts, naive_expected_counts, predicted_min_degree,
    ts_expected_counts, HeuristicReport,
};
use crate::poly::{is_sqrt_poly, Poly};
use crate::search::{
    decompose_tree, find_minimal, reduce_tree, SearchOptions, SqrtTree, DEFAULT_KEEP,
    DEFAULT_PAIR_CAP,
};
use crate::signs::alternating_order_structural;
use crate::tables::{long_table_csv, reproduce_tables, ts_table_csv, TableOptions};
use crate::ts::{enumerate_ts, is_ts_polynomial};

/// Checkpoint granularity for resumable censuses, in sign vectors.
const CHECKPOINT_CHUNK: u64 = 1 << 24;

#[derive(Parser, Debug)]
#[command(
    name = "sqrtpoly",
    version,
    about = "Square-root polynomials over prime fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Worker threads (default: all available cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn par(&self) -> Result<Parallelism> {
        match self.threads {
            Some(0) => Err(Error::Parse("--threads must be at least 1".into())),
            Some(n) => Ok(Parallelism::with_threads(n)),
            None => Ok(Parallelism::available()),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Model {
    Naive,
    Family,
    Ts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Field context: 2-adic decomposition, primitive root, roots of unity.
    Ctx {
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Degree histogram of the Tonelli-Shanks family, listing members when few enough.
    TsFamily {
        #[arg(long)]
        p: u64,
        /// List the members when there are at most this many.
        #[arg(long, default_value_t = DEFAULT_KEEP)]
        keep: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Exact degree histogram over all 2^r sign vectors (or one family).
    Census {
        #[arg(long)]
        p: u64,
        /// full, ts, or alternating:<d>.
        #[arg(long, default_value = "full")]
        family: String,
        /// Shard `i/N` of the index space.
        #[arg(long)]
        shard: Option<String>,
        /// Resume from and save progress to this file.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Refuse censuses with r above this (default: $SQRTPOLY_CAP_R or 30).
        #[arg(long)]
        max_r: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact histogram of the alternating-periodic family of period d.
    FamilyCensus {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        shard: Option<String>,
        #[arg(long)]
        max_r: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Number of sign vectors whose signed half sum of exponent ell vanishes.
    CountVanishing {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        ell: i64,
        /// Also count by enumeration over length-d vectors (default d = r).
        #[arg(long)]
        brute: bool,
        #[arg(long)]
        d: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Expected degree counts under the heuristic model, optionally next to exact counts.
    Heuristic {
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum, default_value = "ts")]
        model: Model,
        /// Period for the family model.
        #[arg(long)]
        d: Option<usize>,
        /// Attach exact counts (enumeration subject to the caps).
        #[arg(long)]
        actual: bool,
        #[arg(long)]
        max_r: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// All minimal-degree square-root polynomials.
    Minimal {
        #[arg(long)]
        p: u64,
        /// Number of representatives to report.
        #[arg(long, default_value_t = DEFAULT_KEEP)]
        keep: usize,
        /// Above this many minimal pairs, only count them.
        #[arg(long, default_value_t = DEFAULT_PAIR_CAP)]
        max_pairs: u64,
        /// Print the reduction tree of every representative.
        #[arg(long)]
        dump_tree: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check whether a polynomial computes square roots on the quadratic residues.
    Verify {
        #[arg(long)]
        p: u64,
        /// Polynomial text such as "15x^18 + 31x^13 + 38x + 28" or a JSON coefficient array.
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[command(flatten)]
        common: Common,
    },
    /// Reduction tree of a square-root polynomial over the block hierarchy.
    Decompose {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        /// Skip the square-root check and reduce the polynomial as given.
        #[arg(long)]
        unchecked: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Merge histogram JSON files from disjoint shards.
    Merge {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// The long table and the Tonelli-Shanks table for a list of primes.
    Tables {
        /// Comma-separated odd primes.
        #[arg(long, value_delimiter = ',', required = true)]
        primes: Vec<u64>,
        #[arg(long)]
        max_r: Option<usize>,
        /// With --out DIR, writes long_table and ts_table files there.
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("{}", line.trim());
            return 2;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_cap_refusal() {
                3
            } else {
                2
            }
        }
    }
}

fn emit(common: &Common, text: String) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Renders a flat JSON object as aligned `key value` lines or a one-row CSV.
fn render_object(v: &Value, format: Format) -> Result<String> {
    let obj = v.as_object().expect("object report");
    match format {
        Format::Json => Ok(to_json(v)),
        Format::Table => {
            let width = obj.keys().map(|k| k.len()).max().unwrap_or(0);
            let mut out = String::new();
            for (k, v) in obj {
                let _ = writeln!(out, "{k:width$}  {}", cell(v));
            }
            Ok(out)
        }
        Format::Csv => {
            let header: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
            let row: Vec<String> = obj.values().map(cell).collect();
            csv_lines(&[header.iter().map(|s| s.to_string()).collect(), row])
        }
    }
}

fn csv_lines(records: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in records {
        w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn histogram_table(h: &DegreeHistogram) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "p = {}, family = {}, vectors = {}",
        h.p,
        h.family,
        h.total()
    );
    for (d, c) in h.counts() {
        let _ = writeln!(out, "deg {d}: {c}");
    }
    if !h.is_complete() {
        let cov: Vec<String> = h
            .coverage()
            .iter()
            .map(|(a, b)| format!("{a}..{b}"))
            .collect();
        let _ = writeln!(out, "partial coverage: {}", cov.join(", "));
    }
    out
}

fn render_histogram(h: &DegreeHistogram, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = h.to_json();
            s.push('\n');
            s
        }
        Format::Csv => h.to_csv()?,
        Format::Table => histogram_table(h),
    })
}

fn parse_shard(text: &str) -> Result<(u64, u64)> {
    let bad = || Error::Parse(format!("shard '{text}' is not of the form i/N"));
    let (i, n) = text.split_once('/').ok_or_else(bad)?;
    let i: u64 = i.trim().parse().map_err(|_| bad())?;
    let n: u64 = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || i >= n {
        return Err(Error::InvalidShard { index: i, total: n });
    }
    Ok((i, n))
}

fn census_opts(
    ctx: &FieldCtx,
    family: Family,
    shard: Option<(u64, u64)>,
    max_r: Option<usize>,
    par: Parallelism,
) -> Result<CensusOptions> {
    let max_r = max_r.unwrap_or_else(default_max_r);
    if max_r == 0 {
        return Err(Error::Parse("--max-r must be positive".into()));
    }
    let d = match family {
        Family::Alternating(d) => d,
        _ => ctx.r_usize(),
    };
    let range = match shard {
        Some((i, n)) if d <= 63 => Some(shard_range(1u64 << d, i, n)?),
        _ => None,
    };
    Ok(CensusOptions { max_r, par, range })
}

fn run_census(
    ctx: &FieldCtx,
    family: Family,
    shard: Option<(u64, u64)>,
    checkpoint: Option<&Path>,
    max_r: Option<usize>,
    par: Parallelism,
) -> Result<DegreeHistogram> {
    if family == Family::Ts {
        if shard.is_some() || checkpoint.is_some() {
            return Err(Error::Parse(
                "--shard and --checkpoint apply to full and alternating families".into(),
            ));
        }
        return Ok(enumerate_ts(ctx, par, false)?.histogram);
    }
    let opts = census_opts(ctx, family, shard, max_r, par)?;
    if let Some(path) = checkpoint {
        return resumable_census(
            ctx,
            family,
            shard.unwrap_or((0, 1)),
            path,
            CHECKPOINT_CHUNK,
            &opts,
        );
    }
    match family {
        Family::Alternating(d) => family_census(ctx, d, &opts),
        _ => full_census(ctx, &opts),
    }
}

fn heuristic_table(rep: &HeuristicReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6}  {:>16}  {:>12}  {:>12}",
        "degree", "predicted", "rounded", "actual"
    );
    for row in &rep.rows {
        let actual = row
            .actual
            .map(|a| a.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:>6}  {:>16.4}  {:>12}  {:>12}{}",
            row.degree,
            approx_f64(&row.predicted),
            row.rounded,
            actual,
            if row.below_threshold {
                "  below 1/2"
            } else {
                ""
            }
        );
    }
    out
}

fn tree_json(t: &SqrtTree) -> Value {
    let levels: Vec<Vec<String>> = t
        .levels
        .iter()
        .map(|l| l.iter().map(|f| f.to_string()).collect())
        .collect();
    json!({ "p": t.p, "levels": levels })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ctx { p, common } => {
            let ctx = make_field_ctx(p)?;
            let v = serde_json::to_value(ctx.summary()).expect("summary serializes");
            emit(&common, render_object(&v, common.format)?)
        }
        Command::TsFamily { p, keep, common } => {
            let ctx = make_field_ctx(p)?;
            let par = common.par()?;
            let space = 1u128 << ctx.block_count().min(127);
            let list = space <= keep as u128;
            let e = enumerate_ts(&ctx, par, list)?;
            let members = e.members.unwrap_or_default();
            let text = match common.format {
                Format::Json => {
                    let file =
                        serde_json::to_value(e.histogram.to_file()).expect("histogram serializes");
                    let listed: Vec<Value> = members
                        .iter()
                        .map(|(h, f)| json!({ "h": h.to_string(), "degree": f.degree(), "f": f.to_string() }))
                        .collect();
                    to_json(&json!({
                        "p": ctx.p(),
                        "s": ctx.s(),
                        "q": ctx.q(),
                        "histogram": file["counts"],
                        "total": file["total"],
                        "members": if list { Value::from(listed) } else { Value::Null },
                    }))
                }
                Format::Csv if list => {
                    let mut recs = vec![vec!["h".into(), "degree".into(), "f".into()]];
                    for (h, f) in &members {
                        recs.push(vec![h.to_string(), f.degree().to_string(), f.to_string()]);
                    }
                    csv_lines(&recs)?
                }
                Format::Csv => e.histogram.to_csv()?,
                Format::Table => {
                    let mut out = histogram_table(&e.histogram);
                    for (h, f) in &members {
                        let _ = writeln!(out, "{h}  {f}");
                    }
                    out
                }
            };
            emit(&common, text)
        }
        Command::Census {
            p,
            family,
            shard,
            checkpoint,
            max_r,
            common,
        } => {
            let ctx = make_field_ctx(p)?;
            let family = Family::parse(&family)?;
            let shard = shard.as_deref().map(parse_shard).transpose()?;
            let h = run_census(
                &ctx,
                family,
                shard,
                checkpoint.as_deref(),
                max_r,
                common.par()?,
            )?;
            emit(&common, render_histogram(&h, common.format)?)
        }
        Command::FamilyCensus {
            p,
            d,
            shard,
            max_r,
            common,
        } => {
            let ctx = make_field_ctx(p)?;
            let shard = shard.as_deref().map(parse_shard).transpose()?;
            let h = run_census(
                &ctx,
                Family::Alternating(d),
                shard,
                None,
                max_r,
                common.par()?,
            )?;
            emit(&common, render_histogram(&h, common.format)?)
        }
        Command::CountVanishing {
            p,
            ell,
            brute,
            d,
            common,
        } => {
            let ctx = make_field_ctx(p)?;
            let d = d.unwrap_or(ctx.r_usize());
            let formula = if d == ctx.r_usize() {
                match count_vanishing_formula(&ctx, ell) {
                    Ok(v) => Some(v),
                    Err(Error::NotCoprime { .. } | Error::EvenExponent(_)) if brute => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            let bruteforce = if brute {
                Some(count_vanishing_bruteforce(
                    &ctx,
                    d,
                    ell,
                    None,
                    common.par()?,
                )?)
            } else {
                None
            };
            let v = json!({
                "p": ctx.p(),
                "d": d,
                "ell": ell,
                "formula": formula.map(|x| x.to_string()),
                "bruteforce": bruteforce.map(|x| x.to_string()),
            });
            emit(&common, render_object(&v, common.format)?)
        }
        Command::Heuristic {
            p,
            model,
            d,
            actual,
            max_r,
            common,
        } => {
            let ctx = make_field_ctx(p)?;
            let par = common.par()?;
            let mut rep = match model {
                Model::Naive => naive_expected_counts(&ctx, 0..=ctx.r_usize() - 1),
                Model::Ts => ts_expected_counts(&ctx),
                Model::Family => {
                    let d = d.ok_or_else(|| {
                        Error::Parse("--d is required for the family model".into())
                    })?;
                    family_expected_counts(&ctx, d)?
                }
            };
            if actual {
                let family = match model {
                    Model::Naive => Family::Full,
                    Model::Ts => Family::Ts,
                    Model::Family => Family::Alternating(rep.d.expect("family report has d")),
                };
                let h = run_census(&ctx, family, None, None, max_r, par)?;
                rep = rep.with_actuals(&h);
            }
            let prediction = predicted_min_degree(&ctx);
            let text = match common.format {
                Format::Json => to_json(&json!({ "report": rep, "prediction": prediction })),
                Format::Csv => {
                    let mut recs = vec![[
                        "degree",
                        "predicted",
                        "rounded",
                        "below_threshold",
                        "actual",
                    ]
                    .map(String::from)
                    .to_vec()];
                    for row in &rep.rows {
                        recs.push(vec![
                            row.degree.to_string(),
                            row.predicted.to_string(),
                            row.rounded.to_string(),
                            row.below_threshold.to_string(),
                            row.actual.map(|a| a.to_string()).unwrap_or_default(),
                        ]);
                    }
                    csv_lines(&recs)?
                }
                Format::Table => {
                    let mut out = heuristic_table(&rep);
                    let _ = writeln!(
                        out,
                        "predicted minimal degree: global {}, TS model-A {}, TS model-B {}",
                        prediction.global, prediction.ts_model_a, prediction.ts_model_b
                    );
                    out
                }
            };
            emit(&common, text)
        }
        Command::Minimal {
            p,
            keep,
            max_pairs,
            dump_tree,
            common,
        } => {
            let ctx = make_field_ctx(p)?;
            let opts = SearchOptions {
                par: common.par()?,
                keep,
                pair_cap: max_pairs,
            };
            let rep = find_minimal(&ctx, &opts)?;
            let trees: Vec<SqrtTree> = if dump_tree && ctx.s() >= 2 {
                rep.representatives
                    .iter()
                    .map(|f| reduce_tree(&ctx, f))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            let text = match common.format {
                Format::Json => {
                    let mut v = serde_json::to_value(&rep).expect("report serializes");
                    if dump_tree {
                        v["trees"] =
                            Value::from(trees.iter().map(|t| t.render()).collect::<Vec<_>>());
                    }
                    to_json(&v)
                }
                Format::Csv => {
                    let mut recs = vec![["p", "min_degree", "minimizer_count", "representative"]
                        .map(String::from)
                        .to_vec()];
                    for f in &rep.representatives {
                        recs.push(vec![
                            rep.p.to_string(),
                            rep.min_degree.to_string(),
                            rep.minimizer_count.to_string(),
                            f.to_string(),
                        ]);
                    }
                    csv_lines(&recs)?
                }
                Format::Table => {
                    let mut out = String::new();
                    let _ = writeln!(out, "p = {}", rep.p);
                    let _ = writeln!(out, "minimal degree = {}", rep.min_degree);
                    let _ = writeln!(out, "minimizers = {}", rep.minimizer_count);
                    if let Some(l) = rep.prefix_length {
                        let _ = writeln!(out, "common prefix = {l}");
                    }
                    let _ = writeln!(out, "lower bound ceil((p-1)/3) = {}", rep.lower_bound);
                    for (i, f) in rep.representatives.iter().enumerate() {
                        let _ = writeln!(out, "{f}");
                        if let Some(t) = trees.get(i) {
                            out.push_str(&t.render());
                        }
                    }
                    out
                }
            };
            emit(&common, text)
        }
        Command::Verify { p, poly, common } => {
            let ctx = make_field_ctx(p)?;
            let f = Poly::parse(ctx.p(), ctx.r_usize(), &poly)?;
            let ok = is_sqrt_poly(&ctx, &f);
            let eps = if ok {
                Some(signs_from_poly(&ctx, &f)?)
            } else {
                None
            };
            let v = json!({
                "p": ctx.p(),
                "poly": f.to_string(),
                "degree": f.degree(),
                "is_sqrt_poly": ok,
                "is_ts": ok && is_ts_polynomial(&ctx, &f),
                "alternating_order": eps.as_ref().map(alternating_order_structural),
                "signs": eps.map(|e| e.to_string()),
            });
            emit(&common, render_object(&v, common.format)?)
        }
        Command::Decompose {
            p,
            poly,
            unchecked,
            common,
        } => {
            let ctx = make_field_ctx(p)?;
            let f = Poly::parse(ctx.p(), ctx.r_usize(), &poly)?;
            let t = if unchecked {
                reduce_tree(&ctx, &f)?
            } else {
                decompose_tree(&ctx, &f)?
            };
            let text = match common.format {
                Format::Json => to_json(&tree_json(&t)),
                Format::Csv => {
                    let mut recs = vec![["level", "block", "degree", "poly"]
                        .map(String::from)
                        .to_vec()];
                    for (k, level) in t.levels.iter().enumerate() {
                        for (i, g) in level.iter().enumerate() {
                            recs.push(vec![
                                k.to_string(),
                                i.to_string(),
                                g.degree().to_string(),
                                g.to_string(),
                            ]);
                        }
                    }
                    csv_lines(&recs)?
                }
                Format::Table => t.render(),
            };
            emit(&common, text)
        }
        Command::Merge { files, common } => {
            let mut merged: Option<DegreeHistogram> = None;
            for path in &files {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                let h = DegreeHistogram::from_json(&text)?;
                match &mut merged {
                    Some(m) => m.merge(&h)?,
                    None => merged = Some(h),
                }
            }
            let h = merged.expect("at least one file");
            emit(&common, render_histogram(&h, common.format)?)
        }
        Command::Tables {
            primes,
            max_r,
            common,
        } => {
            let opts = TableOptions {
                max_r: max_r.unwrap_or_else(default_max_r),
                par: common.par()?,
                ..Default::default()
            };
            let (long, ts) = reproduce_tables(&primes, &opts)?;
            let (long_text, ts_text, ext) = match common.format {
                Format::Json => (to_json(&long), to_json(&ts), "json"),
                _ => (long_table_csv(&long)?, ts_table_csv(&ts)?, "csv"),
            };
            match &common.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    fs::write(dir.join(format!("long_table.{ext}")), long_text)?;
                    fs::write(dir.join(format!("ts_table.{ext}")), ts_text)?;
                }
                None => print!("{long_text}\n{ts_text}"),
            }
            Ok(())
        }
    }
}
