//! Arithmetic and word-generation kernel.
//!
//! Fibonacci numbers use the shifted indexing `f_{-2} = 0, f_{-1} = 1,
//! f_0 = 1, f_1 = 2, ...`, so that `f_m = |σ^m(a)|` for the morphism
//! `σ(a) = ab, σ(b) = a`. All positions are 1-based.
//!
//! Everything that feeds a closed form is exact big-integer arithmetic;
//! `⌊φp⌋` with `φ = (√5 − 1)/2` goes through an integer square root.

use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};

/// Default cap on the number of letters that may be materialized.
pub const DEFAULT_MATERIALIZE_LIMIT: usize = 10_000_000;

/// Environment variable overriding [`DEFAULT_MATERIALIZE_LIMIT`].
pub const MATERIALIZE_LIMIT_ENV: &str = "FIBSQ_MATERIALIZE_LIMIT";

/// Current word-materialization cap.
pub fn materialize_limit() -> usize {
    std::env::var(MATERIALIZE_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MATERIALIZE_LIMIT)
}

pub(crate) fn check_capacity(requested: usize) -> Result<()> {
    let limit = materialize_limit();
    if requested > limit {
        return Err(Error::Capacity {
            requested: requested.to_string(),
            limit,
        });
    }
    Ok(())
}

/// Converts a big position to `usize`, failing with a capacity error when
/// it would exceed the materialization cap.
pub(crate) fn materializable(n: &BigInt) -> Result<usize> {
    match n.to_usize() {
        Some(v) => check_capacity(v).map(|_| v),
        None if n.is_negative() => domain(format!("negative position {n}")),
        None => Err(Error::Capacity {
            requested: n.to_string(),
            limit: materialize_limit(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::B => 'b',
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl TryFrom<char> for Letter {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c {
            'a' => Ok(Letter::A),
            'b' => Ok(Letter::B),
            other => domain(format!("letter {other:?} is not in {{a, b}}")),
        }
    }
}

/// A finite word over `{a, b}`. Serializes as an ASCII string.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn concat(parts: &[&Word]) -> Word {
        Word(parts.iter().flat_map(|w| w.0.iter().copied()).collect())
    }

    pub fn is_palindrome(&self) -> bool {
        self.0.iter().eq(self.0.iter().rev())
    }

    /// Whether `needle` occurs as a factor of `self`.
    pub fn contains(&self, needle: &Word) -> bool {
        contains_slice(&self.0, &needle.0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(Letter::try_from)
            .collect::<Result<_>>()
            .map(Word)
    }
}

impl From<&[Letter]> for Word {
    fn from(s: &[Letter]) -> Self {
        Word(s.to_vec())
    }
}

pub(crate) fn contains_slice(hay: &[Letter], needle: &[Letter]) -> bool {
    needle.is_empty() || hay.windows(needle.len()).any(|w| w == needle)
}

/// Memo of Fibonacci numbers `f_{-2}, f_{-1}, f_0, ...`.
///
/// Readers never observe a partially extended table: growth happens under
/// the write lock and only appends values that any writer would compute
/// identically.
#[derive(Debug)]
pub struct FibTable {
    values: RwLock<Vec<BigInt>>,
}

impl Default for FibTable {
    fn default() -> Self {
        FibTable {
            values: RwLock::new(vec![BigInt::zero(), BigInt::one()]),
        }
    }
}

impl FibTable {
    pub fn global() -> &'static FibTable {
        static TABLE: OnceLock<FibTable> = OnceLock::new();
        TABLE.get_or_init(FibTable::default)
    }

    /// `f_m` for `m ≥ -2`.
    pub fn get(&self, m: i64) -> Result<BigInt> {
        if m < -2 {
            return domain(format!("fib index {m} < -2"));
        }
        let idx = (m + 2) as usize;
        {
            let values = self.values.read().expect("fib table poisoned");
            if let Some(v) = values.get(idx) {
                return Ok(v.clone());
            }
        }
        let mut values = self.values.write().expect("fib table poisoned");
        while values.len() <= idx {
            let k = values.len();
            let next = &values[k - 1] + &values[k - 2];
            values.push(next);
        }
        Ok(values[idx].clone())
    }

    /// Number of entries currently held (indices `-2 ..= len - 3`).
    pub fn len(&self) -> usize {
        self.values.read().expect("fib table poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `f_m`, the length of `σ^m(a)`.
pub fn fib(m: i64) -> Result<BigInt> {
    FibTable::global().get(m)
}

/// `f_m` for an index known to be `≥ -2`.
pub(crate) fn f(m: i64) -> BigInt {
    fib(m).unwrap_or_else(|_| panic!("fib index {m} out of range"))
}

/// Largest `m ≥ -1` with `f_m ≤ x`; requires `x ≥ 1`.
pub fn fib_floor_index(x: &BigInt) -> i64 {
    assert!(x >= &BigInt::one(), "fib_floor_index needs x >= 1");
    // f_{-1} = f_0 = 1; prefer the larger index.
    let mut m = 0;
    while &f(m + 1) <= x {
        m += 1;
    }
    m
}

/// `⌊√n⌋` by Newton iteration.
pub fn isqrt(n: &BigUint) -> BigUint {
    if n.is_zero() {
        return BigUint::zero();
    }
    // Start above the root: 2^ceil(bits/2) ≥ √n.
    let mut x = BigUint::one() << n.bits().div_ceil(2);
    loop {
        let y = (&x + n / &x) >> 1u32;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// `⌊φp⌋` for `φ = (√5 − 1)/2`, computed as `⌊(⌊√(5p²)⌋ − p)/2⌋`.
///
/// # Panics
/// If `p` is negative.
pub fn phi_floor(p: &BigInt) -> BigInt {
    assert!(!p.is_negative(), "phi_floor needs p >= 0");
    let p_u = p.magnitude();
    let root = isqrt(&(p_u * p_u * 5u32));
    BigInt::from_biguint(Sign::Plus, (root - p_u) >> 1u32)
}

/// Ending position of the `p`-th occurrence of letter `x`.
pub fn pos_letter(x: Letter, p: &BigInt) -> BigInt {
    let pf = phi_floor(p);
    match x {
        Letter::A => p + pf,
        Letter::B => p * 2 + pf,
    }
}

/// Ending position of the `p`-th occurrence of `K_m`:
/// `p·f_{m+1} + (⌊φp⌋ + 1)·f_m − 1`.
pub fn pos_kernel(m: i64, p: &BigInt) -> Result<BigInt> {
    if m < -1 {
        return domain(format!("singular word order {m} < -1"));
    }
    if p < &BigInt::one() {
        return domain(format!("occurrence index {p} < 1"));
    }
    Ok(p * f(m + 1) + (phi_floor(p) + 1) * f(m) - 1)
}

/// Exact division by 5 of a closed-form numerator. A nonzero remainder
/// means the formula was transcribed wrong, so it is reported rather than
/// rounded away.
pub(crate) fn div5(numerator: BigInt, what: &str) -> Result<BigInt> {
    let five = BigInt::from(5);
    if (&numerator % &five).is_zero() {
        Ok(numerator / five)
    } else {
        Err(Error::Invariant(format!(
            "{what}: numerator {numerator} is not divisible by 5"
        )))
    }
}

/// `f_m·f_k + f_{m−1}·f_{k−1} = f_{m+k+1}`.
pub fn fib_product_identity_check(m: i64, k: i64) -> Result<bool> {
    if m < -1 || k < -1 {
        return domain(format!("identity needs m, k >= -1 (got {m}, {k})"));
    }
    Ok(f(m) * f(k) + f(m - 1) * f(k - 1) == f(m + k + 1))
}

fn word_cache() -> &'static RwLock<Vec<Letter>> {
    static WORD: OnceLock<RwLock<Vec<Letter>>> = OnceLock::new();
    WORD.get_or_init(|| RwLock::new(vec![Letter::A]))
}

fn apply_morphism(w: &[Letter]) -> Vec<Letter> {
    let mut out = Vec::with_capacity(w.len() * 2);
    for &l in w {
        match l {
            Letter::A => out.extend_from_slice(&[Letter::A, Letter::B]),
            Letter::B => out.push(Letter::A),
        }
    }
    out
}

/// Runs `f` on a cached prefix of the Fibonacci word of length at least `n`.
pub(crate) fn with_prefix<R>(n: usize, f: impl FnOnce(&[Letter]) -> R) -> Result<R> {
    check_capacity(n)?;
    {
        let w = word_cache().read().expect("word cache poisoned");
        if w.len() >= n {
            return Ok(f(&w[..n]));
        }
    }
    let mut w = word_cache().write().expect("word cache poisoned");
    while w.len() < n {
        *w = apply_morphism(&w);
    }
    Ok(f(&w[..n]))
}

/// The first `n` letters of the Fibonacci word.
pub fn prefix(n: usize) -> Result<Word> {
    with_prefix(n, |s| Word(s.to_vec()))
}

/// `𝔽[n]` for a 1-based position `n`.
pub fn letter_at(n: usize) -> Result<Letter> {
    if n == 0 {
        return domain("positions are 1-based");
    }
    with_prefix(n, |s| s[n - 1])
}

/// `σ^m(a)` for `m ≥ 0`, `b` for `m = -1` and `ε` for `m = -2`.
pub fn fib_word(m: i64) -> Result<Word> {
    match m {
        -2 => Ok(Word::empty()),
        -1 => Ok(Word(vec![Letter::B])),
        m if m >= 0 => prefix(materializable(&f(m))?),
        m => domain(format!("fib word index {m} < -2")),
    }
}

/// Last letter of `F_m`: `a` exactly when `m` is even.
pub fn delta(m: i64) -> Letter {
    if m.rem_euclid(2) == 0 {
        Letter::A
    } else {
        Letter::B
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularWord {
    pub order: i64,
    pub content: Word,
    pub last_letter_delta: Letter,
}

/// `K_m = δ_{m+1} · F_m` with the last letter of `F_m` removed.
pub fn singular_word(m: i64) -> Result<SingularWord> {
    if m < -1 {
        return domain(format!("singular word order {m} < -1"));
    }
    let mut letters = vec![delta(m + 1)];
    let body = fib_word(m)?.into_letters();
    letters.extend_from_slice(&body[..body.len() - 1]);
    Ok(SingularWord {
        order: m,
        content: Word(letters),
        last_letter_delta: delta(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn fib_values() {
        assert_eq!(fib(-2).unwrap(), big(0));
        assert_eq!(fib(-1).unwrap(), big(1));
        assert_eq!(fib(0).unwrap(), big(1));
        assert_eq!(fib(7).unwrap(), big(34));
        assert!(matches!(fib(-3), Err(Error::Domain(_))));
        // no overflow far past u64
        assert_eq!(fib(200).unwrap(), fib(199).unwrap() + fib(198).unwrap());
        assert!(fib(200).unwrap().bits() > 128);
    }

    #[test]
    fn fib_matches_word_lengths() {
        for m in 0..20 {
            let mut w = vec![Letter::A];
            for _ in 0..m {
                w = apply_morphism(&w);
            }
            assert_eq!(big(w.len() as i64), fib(m).unwrap());
        }
    }

    #[test]
    fn prefixes() {
        assert_eq!(prefix(0).unwrap(), Word::empty());
        assert_eq!(prefix(5).unwrap().to_string(), "abaab");
        assert_eq!(prefix(13).unwrap().to_string(), "abaababaabaab");
        assert_eq!(letter_at(1).unwrap(), Letter::A);
        assert_eq!(letter_at(2).unwrap(), Letter::B);
        assert_eq!(letter_at(10).unwrap(), Letter::B);
        assert!(matches!(letter_at(0), Err(Error::Domain(_))));
    }

    #[test]
    fn prefix_over_limit_is_capacity_error() {
        let over = materialize_limit() + 1;
        assert!(matches!(prefix(over), Err(Error::Capacity { .. })));
    }

    #[test]
    fn isqrt_small_range() {
        for n in 0u64..5000 {
            let r = isqrt(&BigUint::from(n));
            let r = r.to_u64().unwrap();
            assert!(r * r <= n && (r + 1) * (r + 1) > n, "isqrt({n}) = {r}");
        }
    }

    #[test]
    fn isqrt_large_squares() {
        let r = BigUint::from(10u32).pow(40) + 12345u32;
        let sq = &r * &r;
        assert_eq!(isqrt(&sq), r);
        assert_eq!(isqrt(&(&sq - 1u32)), &r - 1u32);
        assert_eq!(isqrt(&(&sq + 1u32)), r);
    }

    #[test]
    fn phi_floor_values() {
        assert_eq!(phi_floor(&big(1)), big(0));
        assert_eq!(phi_floor(&big(2)), big(1));
        assert_eq!(phi_floor(&big(5)), big(3));
    }

    #[test]
    fn letter_positions() {
        assert_eq!(pos_letter(Letter::A, &big(2)), big(3));
        assert_eq!(pos_letter(Letter::B, &big(1)), big(2));
        assert_eq!(pos_letter(Letter::A, &big(5)), big(8));
    }

    #[test]
    fn singular_words() {
        assert_eq!(singular_word(-1).unwrap().content.to_string(), "a");
        assert_eq!(singular_word(0).unwrap().content.to_string(), "b");
        assert_eq!(singular_word(1).unwrap().content.to_string(), "aa");
        assert_eq!(singular_word(3).unwrap().content.to_string(), "aabaa");
        assert!(matches!(singular_word(-2), Err(Error::Domain(_))));
        for m in -1..=15 {
            let k = singular_word(m).unwrap();
            assert_eq!(big(k.content.len() as i64), fib(m).unwrap());
            assert!(k.content.is_palindrome(), "K_{m} not a palindrome");
            assert_eq!(k.last_letter_delta == Letter::A, m % 2 == 0);
        }
    }

    #[test]
    fn kernel_positions() {
        for p in 1..=100 {
            assert_eq!(
                pos_kernel(-1, &big(p)).unwrap(),
                pos_letter(Letter::A, &big(p))
            );
        }
        assert_eq!(pos_kernel(1, &big(1)).unwrap(), big(4));
        assert_eq!(pos_kernel(3, &big(1)).unwrap(), big(12));
        assert!(pos_kernel(-2, &big(1)).is_err());
        assert!(pos_kernel(1, &big(0)).is_err());
    }

    #[test]
    fn product_identity() {
        assert!(fib_product_identity_check(3, 4).unwrap());
        assert!(fib_product_identity_check(-1, -1).unwrap());
        assert!(fib_product_identity_check(10, 7).unwrap());
        assert!(fib_product_identity_check(-2, 0).is_err());
    }

    #[test]
    fn floor_index() {
        assert_eq!(fib_floor_index(&big(1)), 0);
        assert_eq!(fib_floor_index(&big(2)), 1);
        assert_eq!(fib_floor_index(&big(4)), 2);
        assert_eq!(fib_floor_index(&big(5)), 3);
        assert_eq!(fib_floor_index(&big(33)), 6);
        assert_eq!(fib_floor_index(&big(34)), 7);
    }

    #[test]
    fn word_parse_roundtrip() {
        let w: Word = "abaab".parse().unwrap();
        assert_eq!(w.to_string(), "abaab");
        assert!("abc".parse::<Word>().is_err());
    }
}
