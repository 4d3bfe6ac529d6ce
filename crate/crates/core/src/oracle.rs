//! Brute-force ground truth on materialized prefixes.
//!
//! Nothing here uses the position formulas: powers are found by comparing
//! letters, kernels by substring search, return words by scanning for
//! occurrences. Costs are quadratic and meant for prefixes of a few
//! thousand letters.

use std::collections::{BTreeSet, HashSet};

use crate::error::{domain, Error, Result};
use crate::fibword::{
    self, contains_slice, singular_word, with_prefix, Letter, SingularWord, Word,
};

/// One occurrence of `ω^power` ending at `end` with `|ω| = root_length`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccurrenceRecord {
    pub end: usize,
    pub root_length: usize,
    pub power: u32,
}

fn is_power_ending_at(w: &[Letter], end: usize, root: usize, power: usize) -> bool {
    let start = end - root * power;
    (root..root * power).all(|i| w[start + i] == w[start + i - root])
}

fn powers_in(w: &[Letter], power: u32) -> Vec<OccurrenceRecord> {
    let k = power as usize;
    let mut out = Vec::new();
    for end in 1..=w.len() {
        for root in 1..=end / k {
            if is_power_ending_at(w, end, root, k) {
                out.push(OccurrenceRecord {
                    end,
                    root_length: root,
                    power,
                });
            }
        }
    }
    out
}

/// Every occurrence of a `power`-th power ending at or before `n`, ordered
/// by end position and then root length.
pub fn enumerate_powers(n: usize, power: u32) -> Result<Vec<OccurrenceRecord>> {
    if power < 2 {
        return domain(format!("power must be >= 2, got {power}"));
    }
    with_prefix(n, |w| powers_in(w, power))
}

/// Distinct roots `ω` with `ω^power` a factor of `𝔽[1,n]`.
pub fn distinct_powers(n: usize, power: u32) -> Result<BTreeSet<Word>> {
    if power < 2 {
        return domain(format!("power must be >= 2, got {power}"));
    }
    with_prefix(n, |w| {
        powers_in(w, power)
            .into_iter()
            .map(|r| Word::from(&w[r.end - r.root_length..r.end]))
            .collect()
    })
}

/// Length of the prefix searched when testing factor membership.
pub fn factor_window(len: usize) -> usize {
    4 * len + 64
}

/// Whether `w` is a factor of the Fibonacci word.
pub fn is_factor(w: &Word) -> Result<bool> {
    with_prefix(factor_window(w.len()), |p| contains_slice(p, w.letters()))
}

fn count_occurrences(hay: &[Letter], needle: &[Letter]) -> usize {
    if needle.len() > hay.len() {
        return 0;
    }
    hay.windows(needle.len()).filter(|s| *s == needle).count()
}

/// The largest singular word occurring in the factor `w`.
pub fn kernel(w: &Word) -> Result<SingularWord> {
    if w.is_empty() {
        return domain("the empty word has no kernel");
    }
    if !is_factor(w)? {
        return domain(format!("{w} is not a factor of the Fibonacci word"));
    }
    let mut m = -1;
    while fibword::f(m + 1) <= num_bigint::BigInt::from(w.len()) {
        m += 1;
    }
    while m >= -1 {
        let k = singular_word(m)?;
        match count_occurrences(w.letters(), k.content.letters()) {
            0 => m -= 1,
            1 => return Ok(k),
            c => {
                return Err(Error::Invariant(format!(
                    "kernel K_{m} occurs {c} times in {w}"
                )))
            }
        }
    }
    Err(Error::Invariant(format!("no singular word inside {w}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnWordDecomposition {
    pub factor: Word,
    /// `r_1, r_2, ...`
    pub returns: Vec<Word>,
    /// 1-based starting positions of the first `returns.len() + 1`
    /// occurrences of `factor`.
    pub occurrence_starts: Vec<usize>,
}

/// 1-based starting positions of the first `count` occurrences of `w`.
pub fn occurrence_starts(w: &Word, count: usize) -> Result<Vec<usize>> {
    if w.is_empty() {
        return domain("occurrences of the empty word are not defined");
    }
    let limit = fibword::materialize_limit();
    let mut window = factor_window(w.len()).max(64);
    loop {
        let window_now = window.min(limit);
        let starts: Vec<usize> = with_prefix(window_now, |p| {
            p.windows(w.len())
                .enumerate()
                .filter(|(_, s)| *s == w.letters())
                .map(|(i, _)| i + 1)
                .take(count)
                .collect()
        })?;
        if starts.len() == count {
            return Ok(starts);
        }
        if starts.is_empty() && window_now >= factor_window(w.len()) {
            return domain(format!("{w} is not a factor of the Fibonacci word"));
        }
        if window_now == limit {
            return Err(Error::Capacity {
                requested: format!("more than {limit}"),
                limit,
            });
        }
        window *= 2;
    }
}

/// The first `count` return words of the factor `w`.
pub fn return_words(w: &Word, count: usize) -> Result<ReturnWordDecomposition> {
    if count == 0 {
        return domain("count must be positive");
    }
    let starts = occurrence_starts(w, count + 1)?;
    let last = *starts.last().expect("count + 1 starts");
    let returns = with_prefix(last, |p| {
        starts
            .windows(2)
            .map(|pair| Word::from(&p[pair[0] - 1..pair[1] - 1]))
            .collect()
    })?;
    Ok(ReturnWordDecomposition {
        factor: w.clone(),
        returns,
        occurrence_starts: starts,
    })
}

/// Whether the return-word sequence of `w`, coded `a` for the first return
/// word seen and `b` for the second, spells the Fibonacci word.
pub fn verify_return_structure(w: &Word, count: usize) -> Result<bool> {
    let decomposition = return_words(w, count)?;
    let first = &decomposition.returns[0];
    let mut second: Option<&Word> = None;
    let mut coded = Vec::with_capacity(count);
    for r in &decomposition.returns {
        if r == first {
            coded.push(Letter::A);
        } else if second.is_none() || second == Some(r) {
            second = Some(r);
            coded.push(Letter::B);
        } else {
            return Ok(false);
        }
    }
    Ok(Word::new(coded) == fibword::prefix(count)?)
}

/// Per-position and cumulative counts at one prefix length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleRow {
    pub n: usize,
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
    pub distinct_squares: u64,
    pub square_occurrences: u64,
    pub distinct_cubes: u64,
    pub cube_occurrences: u64,
}

/// Brute-force counts for every prefix length `1..=max_n`.
pub fn sweep(max_n: usize) -> Result<Vec<OracleRow>> {
    let squares = enumerate_powers(max_n, 2)?;
    let cubes = enumerate_powers(max_n, 3)?;
    with_prefix(max_n, |w| {
        let mut rows = Vec::with_capacity(max_n);
        let mut seen_sq: HashSet<&[Letter]> = HashSet::new();
        let mut seen_cu: HashSet<&[Letter]> = HashSet::new();
        let (mut si, mut ci) = (0, 0);
        let mut acc = OracleRow::default();
        for n in 1..=max_n {
            let mut row = OracleRow { n, ..acc };
            row.a = 0;
            row.b = 0;
            row.c = 0;
            row.d = 0;
            while si < squares.len() && squares[si].end == n {
                let r = squares[si];
                row.b += 1;
                if seen_sq.insert(&w[n - r.root_length..n]) {
                    row.a += 1;
                }
                si += 1;
            }
            while ci < cubes.len() && cubes[ci].end == n {
                let r = cubes[ci];
                row.d += 1;
                if seen_cu.insert(&w[n - r.root_length..n]) {
                    row.c += 1;
                }
                ci += 1;
            }
            row.distinct_squares += row.a;
            row.square_occurrences += row.b;
            row.distinct_cubes += row.c;
            row.cube_occurrences += row.d;
            acc = row;
            rows.push(row);
        }
        rows
    })
}
