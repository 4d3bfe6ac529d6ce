//! The `fibsq` command line: counts, tables, oracle sweeps, tree dumps and
//! timings.
//!
//! Exit codes: 0 success, 1 verification divergence, 2 usage, 3 capacity.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::cubes;
use crate::error::Error;
use crate::fibword::{self, fib};
use crate::oracle;
use crate::squares::{self, SquareCase};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIVERGENCE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

/// Largest prefix the brute-force path is run on by `bench`.
pub const NAIVE_BENCH_LIMIT: usize = 10_000;

/// Largest tree order accepted by `tree`.
pub const MAX_TREE_ORDER: i64 = 24;

#[derive(Debug, Parser)]
#[command(
    name = "fibsq",
    about = "Squares and cubes in prefixes of the Fibonacci word"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print A(n), B(n), C(n), D(n) computed by the fast paths.
    Count {
        #[arg(long, value_parser = parse_position)]
        n: BigInt,
        #[arg(long, default_value = "A,B,C,D", value_parser = parse_which)]
        which: Which,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Per-position and cumulative counts for a range of prefix lengths.
    Table {
        #[arg(long, value_parser = parse_position)]
        from: BigInt,
        #[arg(long, value_parser = parse_position)]
        to: BigInt,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare every fast path with brute force for all n up to max-n.
    Verify {
        #[arg(long = "max-n")]
        max_n: usize,
    },
    /// Dump the recursive tree of square or cube runs.
    Tree {
        #[arg(value_enum)]
        kind: TreeKind,
        #[arg(long = "case")]
        case_id: Option<u8>,
        #[arg(long)]
        m: i64,
    },
    /// Time the closed-form, block-sum and brute-force paths.
    Bench {
        #[arg(long, value_parser = parse_position, value_delimiter = ',', num_args = 1.., required = true)]
        n: Vec<BigInt>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeKind {
    Squares,
    Cubes,
}

/// Accepts a decimal integer or `f<m>` optionally followed by `+k` / `-k`,
/// e.g. `f80-3`.
pub fn parse_position(s: &str) -> Result<BigInt, String> {
    let s = s.trim();
    let value = if let Some(rest) = s.strip_prefix('f') {
        let split = rest.find(['+', '-']).unwrap_or(rest.len());
        let (idx, offset) = rest.split_at(split);
        let m: i64 = idx
            .parse()
            .map_err(|_| format!("bad Fibonacci index in {s:?}"))?;
        let base = fib(m).map_err(|e| e.to_string())?;
        let offset = match offset {
            "" => BigInt::from(0),
            o => BigInt::from_str(o.trim_start_matches('+'))
                .map_err(|_| format!("bad offset in {s:?}"))?,
        };
        base + offset
    } else {
        BigInt::from_str(s).map_err(|_| format!("{s:?} is not an integer"))?
    };
    if value < BigInt::one() {
        return Err(format!("positions start at 1, got {value}"));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Func {
    A,
    B,
    C,
    D,
}

impl Func {
    pub const ALL: [Func; 4] = [Func::A, Func::B, Func::C, Func::D];
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Func {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "A" => Ok(Func::A),
            "B" => Ok(Func::B),
            "C" => Ok(Func::C),
            "D" => Ok(Func::D),
            other => Err(format!("unknown function {other:?}; expected A, B, C or D")),
        }
    }
}

/// A non-empty, ordered subset of `{A, B, C, D}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Which(pub Vec<Func>);

pub fn parse_which(s: &str) -> Result<Which, String> {
    let mut funcs: Vec<Func> = s.split(',').map(Func::from_str).collect::<Result<_, _>>()?;
    funcs.sort();
    funcs.dedup();
    Ok(Which(funcs))
}

/// Which computation produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathTag {
    ClosedForm,
    BlockSum,
    Oracle,
}

impl PathTag {
    pub const ALL: [PathTag; 3] = [PathTag::ClosedForm, PathTag::BlockSum, PathTag::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            PathTag::ClosedForm => "closed-form",
            PathTag::BlockSum => "block-sum",
            PathTag::Oracle => "oracle",
        }
    }
}

impl FromStr for PathTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PathTag::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown path tag {s:?}"))
    }
}

/// Evaluates one counting function along one computation path.
pub fn evaluate(func: Func, path: PathTag, n: &BigInt) -> crate::Result<BigInt> {
    match path {
        PathTag::ClosedForm => match func {
            Func::A => Ok(squares::count_distinct_squares(n)),
            Func::B => squares::count_square_occurrences(n),
            Func::C => Ok(cubes::count_distinct_cubes(n)),
            Func::D => cubes::count_cube_occurrences(n),
        },
        PathTag::BlockSum => match func {
            Func::A => Ok(squares::count_distinct_squares_by_windows(n)),
            Func::B => squares::count_square_occurrences_by_blocks(n),
            Func::C => Ok(cubes::count_distinct_cubes_by_windows(n)),
            Func::D => cubes::count_cube_occurrences_by_blocks(n),
        },
        PathTag::Oracle => {
            let len = fibword_len(n)?;
            let count = match func {
                Func::A => oracle::distinct_powers(len, 2)?.len(),
                Func::B => oracle::enumerate_powers(len, 2)?.len(),
                Func::C => oracle::distinct_powers(len, 3)?.len(),
                Func::D => oracle::enumerate_powers(len, 3)?.len(),
            };
            Ok(BigInt::from(count))
        }
    }
}

fn fibword_len(n: &BigInt) -> crate::Result<usize> {
    let limit = fibword::materialize_limit();
    n.to_usize().filter(|&v| v <= limit).ok_or(Error::Capacity {
        requested: n.to_string(),
        limit,
    })
}

mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        BigInt::from_str(&s).map_err(serde::de::Error::custom)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_str(&v.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| BigInt::from_str(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

/// Counts for one prefix length, with the path that produced each value.
/// Numbers serialize as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReport {
    #[serde(with = "decimal")]
    pub n: BigInt,
    #[serde(
        rename = "A",
        with = "decimal::opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub distinct_squares: Option<BigInt>,
    #[serde(
        rename = "B",
        with = "decimal::opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub square_occurrences: Option<BigInt>,
    #[serde(
        rename = "C",
        with = "decimal::opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub distinct_cubes: Option<BigInt>,
    #[serde(
        rename = "D",
        with = "decimal::opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub cube_occurrences: Option<BigInt>,
    pub path: BTreeMap<Func, PathTag>,
}

impl CountReport {
    pub fn compute(n: &BigInt, which: &Which, path: PathTag) -> crate::Result<Self> {
        let mut report = CountReport {
            n: n.clone(),
            distinct_squares: None,
            square_occurrences: None,
            distinct_cubes: None,
            cube_occurrences: None,
            path: BTreeMap::new(),
        };
        for &func in &which.0 {
            *report.slot(func) = Some(evaluate(func, path, n)?);
            report.path.insert(func, path);
        }
        Ok(report)
    }

    fn slot(&mut self, func: Func) -> &mut Option<BigInt> {
        match func {
            Func::A => &mut self.distinct_squares,
            Func::B => &mut self.square_occurrences,
            Func::C => &mut self.distinct_cubes,
            Func::D => &mut self.cube_occurrences,
        }
    }

    pub fn get(&self, func: Func) -> Option<&BigInt> {
        match func {
            Func::A => self.distinct_squares.as_ref(),
            Func::B => self.square_occurrences.as_ref(),
            Func::C => self.distinct_cubes.as_ref(),
            Func::D => self.cube_occurrences.as_ref(),
        }
    }

    fn present(&self) -> Vec<Func> {
        Func::ALL
            .into_iter()
            .filter(|&f| self.get(f).is_some())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for func in self.present() {
            out.push_str(&format!("{func}={}\n", self.get(func).expect("present")));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, String> {
        serde_json::from_str(s).map_err(|e| e.to_string())
    }

    /// Header `n,<funcs...>,path`; the path column reads like
    /// `A=closed-form;B=closed-form`.
    pub fn to_csv(&self) -> String {
        let funcs = self.present();
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["n".to_string()];
        header.extend(funcs.iter().map(|f| f.to_string()));
        header.push("path".into());
        wtr.write_record(&header).expect("in-memory csv");
        let mut row = vec![self.n.to_string()];
        row.extend(
            funcs
                .iter()
                .map(|&f| self.get(f).expect("present").to_string()),
        );
        let path: Vec<String> = self
            .path
            .iter()
            .map(|(f, p)| format!("{f}={}", p.as_str()))
            .collect();
        row.push(path.join(";"));
        wtr.write_record(&row).expect("in-memory csv");
        String::from_utf8(wtr.into_inner().expect("in-memory csv")).expect("ascii csv")
    }

    pub fn from_csv(s: &str) -> Result<Self, String> {
        let mut rdr = csv::Reader::from_reader(s.as_bytes());
        let header = rdr.headers().map_err(|e| e.to_string())?.clone();
        let record = rdr
            .records()
            .next()
            .ok_or("missing data row")?
            .map_err(|e| e.to_string())?;
        let mut report = CountReport {
            n: BigInt::one(),
            distinct_squares: None,
            square_occurrences: None,
            distinct_cubes: None,
            cube_occurrences: None,
            path: BTreeMap::new(),
        };
        for (name, value) in header.iter().zip(record.iter()) {
            match name {
                "n" => report.n = BigInt::from_str(value).map_err(|e| e.to_string())?,
                "path" => {
                    for entry in value.split(';').filter(|e| !e.is_empty()) {
                        let (f, p) = entry.split_once('=').ok_or("bad path entry")?;
                        report.path.insert(f.parse()?, p.parse()?);
                    }
                }
                func => {
                    let func: Func = func.parse()?;
                    *report.slot(func) = Some(BigInt::from_str(value).map_err(|e| e.to_string())?);
                }
            }
        }
        Ok(report)
    }
}

/// One line of `table`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub n: BigInt,
    pub a: u8,
    pub b: u32,
    pub c: u8,
    pub d: u32,
    pub counts: [BigInt; 4],
}

pub const TABLE_CSV_HEADER: &str = "n,a,b,c,d,A,B,C,D";

pub fn table_row(n: &BigInt) -> crate::Result<TableRow> {
    Ok(TableRow {
        n: n.clone(),
        a: squares::a_indicator(n),
        b: squares::b_at(n)?,
        c: cubes::c_indicator(n),
        d: cubes::d_at(n)?,
        counts: [
            evaluate(Func::A, PathTag::ClosedForm, n)?,
            evaluate(Func::B, PathTag::ClosedForm, n)?,
            evaluate(Func::C, PathTag::ClosedForm, n)?,
            evaluate(Func::D, PathTag::ClosedForm, n)?,
        ],
    })
}

impl TableRow {
    fn fields(&self) -> [String; 9] {
        [
            self.n.to_string(),
            self.a.to_string(),
            self.b.to_string(),
            self.c.to_string(),
            self.d.to_string(),
            self.counts[0].to_string(),
            self.counts[1].to_string(),
            self.counts[2].to_string(),
            self.counts[3].to_string(),
        ]
    }
}

pub fn render_table(rows: &[TableRow], format: Format) -> String {
    let names: Vec<&str> = TABLE_CSV_HEADER.split(',').collect();
    match format {
        Format::Csv => {
            let mut out = format!("{TABLE_CSV_HEADER}\n");
            for r in rows {
                out.push_str(&r.fields().join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| {
                    names
                        .iter()
                        .zip(r.fields())
                        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
                        .collect()
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&objs).expect("table serializes");
            s.push('\n');
            s
        }
        Format::Text => {
            let cells: Vec<[String; 9]> = rows.iter().map(TableRow::fields).collect();
            let widths: Vec<usize> = (0..9)
                .map(|i| {
                    cells
                        .iter()
                        .map(|c| c[i].len())
                        .chain([names[i].len()])
                        .max()
                        .unwrap_or(1)
                })
                .collect();
            let line = |vals: &[&str]| -> String {
                let parts: Vec<String> = vals
                    .iter()
                    .zip(&widths)
                    .map(|(v, w)| format!("{v:>w$}"))
                    .collect();
                parts.join("  ").trim_end().to_string() + "\n"
            };
            let mut out = line(&names);
            for c in &cells {
                let refs: Vec<&str> = c.iter().map(String::as_str).collect();
                out.push_str(&line(&refs));
            }
            out
        }
    }
}

/// The fast paths checked by `verify`; swappable so the harness itself can
/// be tested against a deliberately broken formula.
#[derive(Clone, Copy)]
pub struct FastPaths {
    pub distinct_squares: fn(&BigInt) -> crate::Result<BigInt>,
    pub square_occurrences: fn(&BigInt) -> crate::Result<BigInt>,
    pub distinct_cubes: fn(&BigInt) -> crate::Result<BigInt>,
    pub cube_occurrences: fn(&BigInt) -> crate::Result<BigInt>,
}

impl Default for FastPaths {
    fn default() -> Self {
        FastPaths {
            distinct_squares: |n| Ok(squares::count_distinct_squares(n)),
            square_occurrences: squares::count_square_occurrences,
            distinct_cubes: |n| Ok(cubes::count_distinct_cubes(n)),
            cube_occurrences: cubes::count_cube_occurrences,
        }
    }
}

/// First place where a fast path disagrees with brute force.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub n: usize,
    pub what: String,
    pub fast: String,
    pub oracle: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "divergence at n={}: {} fast={} oracle={}",
            self.n, self.what, self.fast, self.oracle
        )
    }
}

/// Sweeps `1..=max_n`, comparing per-position values, both fast paths and
/// the tree and range identities against brute force.
pub fn verify_with(max_n: usize, fast: &FastPaths) -> crate::Result<Option<Divergence>> {
    fibword::check_capacity(max_n)?;
    let rows = oracle::sweep(max_n)?;
    for row in &rows {
        let n = BigInt::from(row.n);
        let diverge = |what: &str, fast: String, oracle: u64| {
            (fast != oracle.to_string()).then(|| Divergence {
                n: row.n,
                what: what.to_string(),
                fast,
                oracle: oracle.to_string(),
            })
        };
        let checks = [
            diverge("a", squares::a_indicator(&n).to_string(), row.a),
            diverge("b", squares::b_at(&n)?.to_string(), row.b),
            diverge("c", cubes::c_indicator(&n).to_string(), row.c),
            diverge("d", cubes::d_at(&n)?.to_string(), row.d),
            diverge(
                "A",
                (fast.distinct_squares)(&n)?.to_string(),
                row.distinct_squares,
            ),
            diverge(
                "B",
                (fast.square_occurrences)(&n)?.to_string(),
                row.square_occurrences,
            ),
            diverge(
                "C",
                (fast.distinct_cubes)(&n)?.to_string(),
                row.distinct_cubes,
            ),
            diverge(
                "D",
                (fast.cube_occurrences)(&n)?.to_string(),
                row.cube_occurrences,
            ),
            diverge(
                "B (blocks)",
                squares::count_square_occurrences_by_blocks(&n)?.to_string(),
                row.square_occurrences,
            ),
            diverge(
                "D (blocks)",
                cubes::count_cube_occurrences_by_blocks(&n)?.to_string(),
                row.cube_occurrences,
            ),
        ];
        if let Some(d) = checks.into_iter().flatten().next() {
            return Ok(Some(d));
        }
    }
    Ok(structure_divergence(max_n))
}

/// Γ recursion, cube adjacency and tree confinement for every tree whose
/// positions fall inside the sweep.
fn structure_divergence(max_n: usize) -> Option<Divergence> {
    let bound = BigInt::from(max_n);
    let fail = |what: String| Divergence {
        n: max_n,
        what,
        fast: "identity fails".into(),
        oracle: "identity holds".into(),
    };
    let mut m = 3;
    while fibword::f(m + 3) - 2 <= bound {
        let tree = cubes::cube_tree(m).expect("m >= 3");
        let gamma = cubes::cube_gamma(m);
        for node in tree.nodes() {
            let r = &node.family.range;
            if !(gamma.contains(&r.lo) && gamma.contains(&r.hi)) {
                return Some(fail(format!("cube tree K_{m} escapes its block at {r}")));
            }
        }
        for case in [SquareCase::One, SquareCase::Two] {
            let min_m = if case == SquareCase::One { 2 } else { 3 };
            if m < min_m {
                continue;
            }
            let tree = squares::square_tree(case, m).expect("m >= 1");
            for node in tree.nodes().into_iter().filter(|t| !t.children.is_empty()) {
                let fam = &node.family;
                let parent = squares::gamma_block(fam.case, fam.m, &fam.p).expect("valid node");
                let (c2, c1) = (&node.children[0].family, &node.children[1].family);
                let g2 = squares::gamma_block(c2.case, c2.m, &c2.p).expect("valid node");
                let g1 = squares::gamma_block(c1.case, c1.m, &c1.p).expect("valid node");
                if g2.range.concat(&g1.range).as_ref() != Some(&parent.range) {
                    return Some(fail(format!("Γ recursion fails under {fam}")));
                }
            }
        }
        m += 1;
    }
    None
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::Domain(_) => EXIT_USAGE,
        Error::Invariant(_) => EXIT_DIVERGENCE,
    }
}

fn cmd_count(n: &BigInt, which: &Which, format: Format, out: &mut dyn Write) -> crate::Result<i32> {
    let report = CountReport::compute(n, which, PathTag::ClosedForm)?;
    let rendered = match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
    };
    let _ = out.write_all(rendered.as_bytes());
    Ok(EXIT_OK)
}

fn cmd_table(
    from: &BigInt,
    to: &BigInt,
    format: Format,
    out: &mut dyn Write,
) -> crate::Result<i32> {
    if from > to {
        return Err(Error::Domain(format!("--from {from} exceeds --to {to}")));
    }
    fibword::materializable(to)?;
    let mut rows = Vec::new();
    let mut n = from.clone();
    while &n <= to {
        rows.push(table_row(&n)?);
        n += 1;
    }
    let _ = out.write_all(render_table(&rows, format).as_bytes());
    Ok(EXIT_OK)
}

fn cmd_verify(max_n: usize, out: &mut dyn Write) -> crate::Result<i32> {
    if max_n == 0 {
        return Err(Error::Domain("--max-n must be at least 1".into()));
    }
    let start = Instant::now();
    match verify_with(max_n, &FastPaths::default())? {
        Some(d) => {
            let _ = writeln!(out, "{d}");
            Ok(EXIT_DIVERGENCE)
        }
        None => {
            let _ = writeln!(
                out,
                "ok: a, b, c, d, A, B, C, D agree with brute force for 1 <= n <= {max_n} ({:.2?})",
                start.elapsed()
            );
            Ok(EXIT_OK)
        }
    }
}

fn cmd_tree(
    kind: TreeKind,
    case_id: Option<u8>,
    m: i64,
    out: &mut dyn Write,
) -> crate::Result<i32> {
    if m > MAX_TREE_ORDER {
        return Err(Error::Domain(format!(
            "--m {m} exceeds the tree bound {MAX_TREE_ORDER}"
        )));
    }
    let dump = match kind {
        TreeKind::Squares => {
            let id =
                case_id.ok_or_else(|| Error::Domain("square trees need --case 1 or 2".into()))?;
            squares::square_tree(SquareCase::try_from(id)?, m)?.render()
        }
        TreeKind::Cubes => {
            if case_id.is_some() {
                return Err(Error::Domain("cube trees take no --case".into()));
            }
            cubes::cube_tree(m)?.render()
        }
    };
    let _ = out.write_all(dump.as_bytes());
    Ok(EXIT_OK)
}

/// Outcome of one timed evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BenchResult {
    Done { value: BigInt, micros: u128 },
    Skipped,
}

fn bench_one(func: Func, path: PathTag, n: &BigInt) -> crate::Result<BenchResult> {
    let runnable = match path {
        PathTag::ClosedForm => true,
        PathTag::BlockSum => {
            matches!(func, Func::A | Func::C)
                || n.to_usize()
                    .is_some_and(|v| v <= fibword::materialize_limit())
        }
        PathTag::Oracle => n.to_usize().is_some_and(|v| v <= NAIVE_BENCH_LIMIT),
    };
    if !runnable {
        return Ok(BenchResult::Skipped);
    }
    let start = Instant::now();
    let value = evaluate(func, path, n)?;
    Ok(BenchResult::Done {
        value,
        micros: start.elapsed().as_micros(),
    })
}

fn cmd_bench(ns: &[BigInt], out: &mut dyn Write) -> crate::Result<i32> {
    let mut code = EXIT_OK;
    let _ = writeln!(
        out,
        "{:<4} {:<12} {:>24} {:>24} {:>12}",
        "fn", "path", "n", "value", "micros"
    );
    for n in ns {
        for func in Func::ALL {
            let mut reference: Option<BigInt> = None;
            for path in PathTag::ALL {
                let (value, time) = match bench_one(func, path, n)? {
                    BenchResult::Skipped => ("skipped".to_string(), "-".to_string()),
                    BenchResult::Done { value, micros } => {
                        match &reference {
                            None => reference = Some(value.clone()),
                            Some(r) if *r != value => {
                                code = EXIT_DIVERGENCE;
                                let _ = writeln!(
                                    out,
                                    "mismatch: {func}({n}) {} gives {value}, closed-form gives {r}",
                                    path.as_str()
                                );
                            }
                            Some(_) => {}
                        }
                        (value.to_string(), micros.to_string())
                    }
                };
                let _ = writeln!(
                    out,
                    "{:<4} {:<12} {:>24} {:>24} {:>12}",
                    func.to_string(),
                    path.as_str(),
                    n.to_string(),
                    value,
                    time
                );
            }
        }
    }
    Ok(code)
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match &cli.command {
        Command::Count { n, which, format } => cmd_count(n, which, *format, out),
        Command::Table { from, to, format } => cmd_table(from, to, *format, out),
        Command::Verify { max_n } => cmd_verify(*max_n, out),
        Command::Tree { kind, case_id, m } => cmd_tree(*kind, *case_id, *m, out),
        Command::Bench { n } => cmd_bench(n, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "fibsq: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv: Vec<&str> = std::iter::once("fibsq")
            .chain(args.iter().copied())
            .collect();
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn positions_parse() {
        assert_eq!(parse_position("23").unwrap(), BigInt::from(23));
        assert_eq!(parse_position("f7").unwrap(), BigInt::from(34));
        assert_eq!(parse_position("f7-2").unwrap(), BigInt::from(32));
        assert_eq!(parse_position("f7+1").unwrap(), BigInt::from(35));
        assert!(parse_position("0").is_err());
        assert!(parse_position("x").is_err());
        assert!(parse_position("f-9").is_err());
    }

    #[test]
    fn which_parse() {
        assert_eq!(parse_which("D,A").unwrap(), Which(vec![Func::A, Func::D]));
        assert!(parse_which("A,E").is_err());
    }

    #[test]
    fn count_examples() {
        let (code, out, _) = run_str(&["count", "--n", "23", "--which", "B"]);
        assert_eq!(code, 0);
        assert!(out.contains("B=29"));
        let (_, out, _) = run_str(&["count", "--n", "48", "--which", "D"]);
        assert!(out.contains("D=12"));
        let (_, out, _) = run_str(&["count", "--n", "1", "--which", "A,B,C,D"]);
        assert_eq!(out, "n=1\nA=0\nB=0\nC=0\nD=0\n");
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_str(&["count", "--n", "abc"]).0, EXIT_USAGE);
        assert_eq!(
            run_str(&["count", "--n", "5", "--which", "Q"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_str(&["tree", "leaves", "--m", "3"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["tree", "squares", "--m", "3"]).0, EXIT_USAGE);
        assert_eq!(
            run_str(&["tree", "squares", "--case", "3", "--m", "3"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            run_str(&["table", "--from", "9", "--to", "3"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_str(&["nonsense"]).0, EXIT_USAGE);
    }

    #[test]
    fn json_and_csv_round_trip() {
        let which = parse_which("A,B,C,D").unwrap();
        let report = CountReport::compute(&BigInt::from(100), &which, PathTag::ClosedForm).unwrap();
        assert_eq!(CountReport::from_json(&report.to_json()).unwrap(), report);
        assert_eq!(CountReport::from_csv(&report.to_csv()).unwrap(), report);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["n"], "100");
        assert_eq!(json["path"]["B"], "closed-form");
    }

    #[test]
    fn table_rows() {
        let (code, out, _) = run_str(&["table", "--from", "4", "--to", "6", "--format", "csv"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], TABLE_CSV_HEADER);
        assert_eq!(lines[1], "4,1,1,0,0,1,1,0,0");
        let b: Vec<&str> = lines[1..]
            .iter()
            .map(|l| l.split(',').nth(2).unwrap())
            .collect();
        assert_eq!(b, ["1", "0", "1"]);
    }

    #[test]
    fn tree_dumps() {
        let (code, out, _) = run_str(&["tree", "cubes", "--m", "6"]);
        assert_eq!(code, 0);
        assert!(out.contains("<K_5,2> [71,74]"));
        assert!(out.contains("<K_4,3> [57,58]"));
        let (_, out, _) = run_str(&["tree", "squares", "--case", "1", "--m", "5"]);
        assert!(out.contains("<2,K_1,12> [51,51]"));
        let (_, out, _) = run_str(&["tree", "squares", "--case", "1", "--m", "1"]);
        assert_eq!(out.lines().count(), 1);
    }

    #[test]
    fn verify_small() {
        let (code, out, _) = run_str(&["verify", "--max-n", "300"]);
        assert_eq!(code, 0, "{out}");
    }

    #[test]
    fn verify_catches_injected_fault() {
        let broken = FastPaths {
            distinct_squares: |n| {
                let v = squares::count_distinct_squares(n);
                Ok(if *n == BigInt::from(100) { v + 1 } else { v })
            },
            ..FastPaths::default()
        };
        let d = verify_with(200, &broken).unwrap().expect("divergence");
        assert_eq!(d.n, 100);
        assert_eq!(d.what, "A");
    }
}
