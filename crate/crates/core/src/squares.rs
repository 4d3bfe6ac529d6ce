//! Squares in the Fibonacci word.
//!
//! A square `ωω` with kernel `K_m` comes in one of two shapes: root length
//! `f_{m+1}` ("case 1") or root length `f_{m-1}` ("case 2"). For each
//! occurrence index `p` of the kernel the ending positions of such squares
//! form a run of consecutive integers, `⟨1,K_m,p⟩` or `⟨2,K_m,p⟩`.
//! Widening those runs gives the Γ blocks, which nest recursively and drive
//! both the per-position counts `b(n)` and the fast prefix sums `B(n)`.

use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};
use crate::fibword::{div5, f, fib_floor_index, materializable, phi_floor, pos_letter, Letter};

/// Inclusive range `[lo, hi]` of 1-based positions; empty when `hi = lo - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PositionRange {
    pub lo: BigInt,
    pub hi: BigInt,
}

impl PositionRange {
    pub fn new(lo: BigInt, hi: BigInt) -> Result<Self> {
        if hi < &lo - 1 {
            return domain(format!("range [{lo},{hi}] has negative length"));
        }
        Ok(PositionRange { lo, hi })
    }

    pub(crate) fn span(lo: BigInt, hi: BigInt) -> Self {
        debug_assert!(hi >= &lo - 1);
        PositionRange { lo, hi }
    }

    pub fn len(&self) -> BigInt {
        &self.hi - &self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, n: &BigInt) -> bool {
        &self.lo <= n && n <= &self.hi
    }

    /// `self` followed immediately by `next`, if they are adjacent.
    pub fn concat(&self, next: &PositionRange) -> Option<PositionRange> {
        (&self.hi + 1 == next.lo).then(|| PositionRange::span(self.lo.clone(), next.hi.clone()))
    }

    /// Positions as machine integers; only sensible for small ranges.
    pub fn positions(&self) -> impl Iterator<Item = u64> {
        let lo = self.lo.to_u64().expect("range start fits u64");
        let hi = self.hi.to_u64().expect("range end fits u64");
        lo..=hi
    }
}

impl fmt::Display for PositionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SquareCase {
    /// Root length `f_{m+1}`.
    One,
    /// Root length `f_{m-1}`.
    Two,
}

impl SquareCase {
    pub fn id(self) -> u8 {
        match self {
            SquareCase::One => 1,
            SquareCase::Two => 2,
        }
    }
}

impl TryFrom<u8> for SquareCase {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        match id {
            1 => Ok(SquareCase::One),
            2 => Ok(SquareCase::Two),
            other => domain(format!("square case must be 1 or 2, got {other}")),
        }
    }
}

/// The run `⟨case, K_m, p⟩` of ending positions of squares whose kernel is
/// the `p`-th occurrence of `K_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareFamily {
    pub case: SquareCase,
    pub m: i64,
    pub p: BigInt,
    pub range: PositionRange,
    pub root_length: BigInt,
}

impl fmt::Display for SquareFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{},K_{},{}> {}",
            self.case.id(),
            self.m,
            self.p,
            self.range
        )
    }
}

fn check_mp(m: i64, min_m: i64, p: &BigInt) -> Result<()> {
    if m < min_m {
        return domain(format!("kernel order {m} < {min_m}"));
    }
    if p < &BigInt::one() {
        return domain(format!("occurrence index {p} < 1"));
    }
    Ok(())
}

/// `p·f_{m+1} + ⌊φp⌋·f_m`, the common offset of every position formula.
pub(crate) fn kernel_base(m: i64, p: &BigInt) -> BigInt {
    p * f(m + 1) + phi_floor(p) * f(m)
}

pub fn square_family(case: SquareCase, m: i64, p: &BigInt) -> Result<SquareFamily> {
    check_mp(m, 1, p)?;
    let base = kernel_base(m, p);
    let (range, root_length) = match case {
        SquareCase::One => (
            PositionRange::span(&base + f(m + 1), &base + f(m + 2) - 2),
            f(m + 1),
        ),
        SquareCase::Two => (
            PositionRange::span(&base + f(m) - 1, &base + f(m - 1) * 2 - 1),
            f(m - 1),
        ),
    };
    Ok(SquareFamily {
        case,
        m,
        p: p.clone(),
        range,
        root_length,
    })
}

/// `a(n)`: 1 when some distinct square first appears as a suffix of `𝔽[1,n]`.
pub fn a_indicator(n: &BigInt) -> u8 {
    if *n == BigInt::from(4) {
        return 1;
    }
    if *n < BigInt::from(5) {
        return 0;
    }
    // Windows {2f_{m+1}, ..., f_{m+2} + 2f_m - 1} are disjoint and increasing;
    // only the last one starting at or before n can contain it.
    let mut m = 1;
    while f(m + 2) * 2 <= *n {
        m += 1;
    }
    u8::from(f(m + 1) * 2 <= *n && *n < f(m + 2) + f(m) * 2)
}

/// `A(n)`, the number of distinct squares in `𝔽[1,n]`.
pub fn count_distinct_squares(n: &BigInt) -> BigInt {
    if *n < BigInt::from(4) {
        return BigInt::zero();
    }
    let mut m = 1;
    while f(m + 1) * 2 <= *n {
        m += 1;
    }
    if *n < f(m + 1) + f(m - 1) * 2 {
        n - f(m - 1) - 2
    } else {
        f(m + 1) + f(m - 1) - 3
    }
}

/// `A(n)` by adding up the runs where `a` is 1, clipped at `n`.
pub fn count_distinct_squares_by_windows(n: &BigInt) -> BigInt {
    if *n < BigInt::from(4) {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    let mut m = 1;
    loop {
        let lo = f(m + 1) * 2;
        if lo > *n {
            return acc;
        }
        let hi: BigInt = f(m + 2) + f(m) * 2 - 1u32;
        let hi = hi.min(n.clone());
        acc += hi - lo + 1;
        m += 1;
    }
}

/// The block `Γ_{case,m,p}`: the square run widened to a full block of
/// `f_m` (case 1) or `f_{m-1}` (case 2) consecutive positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaBlock {
    pub case: SquareCase,
    pub m: i64,
    pub p: BigInt,
    pub range: PositionRange,
}

pub fn gamma_block(case: SquareCase, m: i64, p: &BigInt) -> Result<GammaBlock> {
    check_mp(m, 1, p)?;
    let base = kernel_base(m, p);
    let range = match case {
        SquareCase::One => PositionRange::span(&base + f(m + 1) - 1, &base + f(m + 2) - 2),
        SquareCase::Two => PositionRange::span(&base + f(m) - 1, &base + f(m + 1) - 2),
    };
    Ok(GammaBlock {
        case,
        m,
        p: p.clone(),
        range,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareTreeNode {
    pub family: SquareFamily,
    pub children: Vec<SquareTreeNode>,
}

impl SquareTreeNode {
    fn build(case: SquareCase, m: i64, p: BigInt) -> Self {
        let family = square_family(case, m, &p).expect("tree nodes have m, p >= 1");
        let expand = |letter: Letter, step: i64| {
            let q: BigInt = pos_letter(letter, &p) + 1;
            vec![
                SquareTreeNode::build(SquareCase::Two, m - step, q.clone()),
                SquareTreeNode::build(SquareCase::One, m - step, q),
            ]
        };
        let children = match case {
            SquareCase::One if m >= 2 => expand(Letter::A, 1),
            SquareCase::Two if m >= 3 => expand(Letter::B, 2),
            _ => Vec::new(),
        };
        SquareTreeNode { family, children }
    }

    /// Pre-order walk over the tree.
    pub fn nodes(&self) -> Vec<&SquareTreeNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }

    /// One line per node, children indented two spaces under their parent.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(0, &mut out);
        out
    }

    fn render_into(&self, depth: usize, out: &mut String) {
        out.push_str(&"  ".repeat(depth));
        out.push_str(&self.family.to_string());
        out.push('\n');
        for c in &self.children {
            c.render_into(depth + 1, out);
        }
    }
}

/// The finite tree of square runs rooted at `⟨case, K_m, 1⟩`.
pub fn square_tree(case: SquareCase, m: i64) -> Result<SquareTreeNode> {
    check_mp(m, 1, &BigInt::one())?;
    Ok(SquareTreeNode::build(case, m, BigInt::one()))
}

/// Per-position occurrence counts aligned with a range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    pub range: PositionRange,
    pub counts: Arc<[u32]>,
}

impl CountVector {
    pub fn sum(&self) -> BigInt {
        BigInt::from(self.counts.iter().map(|&c| u64::from(c)).sum::<u64>())
    }

    pub fn get(&self, n: &BigInt) -> Option<u32> {
        if !self.range.contains(n) {
            return None;
        }
        let idx = (n - &self.range.lo).to_usize()?;
        self.counts.get(idx).copied()
    }
}

#[derive(Debug)]
struct BBlock {
    gamma2: Arc<[u32]>,
    gamma1: Arc<[u32]>,
    sum: u64,
}

fn b_blocks() -> &'static RwLock<Vec<Arc<BBlock>>> {
    static BLOCKS: OnceLock<RwLock<Vec<Arc<BBlock>>>> = OnceLock::new();
    BLOCKS.get_or_init(|| {
        let base = |g2: &[u32], g1: &[u32]| {
            Arc::new(BBlock {
                gamma2: g2.into(),
                gamma1: g1.into(),
                sum: g2.iter().chain(g1).map(|&c| u64::from(c)).sum(),
            })
        };
        // Printed base vectors for m = 1, 2; the recursion starts at m = 3.
        RwLock::new(vec![base(&[1], &[0, 1]), base(&[1, 1], &[1, 1, 2])])
    })
}

fn block_len(m: i64) -> Result<usize> {
    materializable(&f(m + 1))
}

/// Memoized block `m`; block `m` covers `[f_{m+2} - 1, f_{m+3} - 2]`.
fn b_block_raw(m: i64) -> Result<Arc<BBlock>> {
    assert!(m >= 1);
    let idx = (m - 1) as usize;
    if let Some(b) = b_blocks().read().expect("b blocks poisoned").get(idx) {
        return Ok(b.clone());
    }
    // End of block m must be materializable before we build anything.
    materializable(&(f(m + 3) - 2))?;
    let mut blocks = b_blocks().write().expect("b blocks poisoned");
    while blocks.len() <= idx {
        let k = blocks.len() as i64 + 1;
        let prev1 = &blocks[(k - 2) as usize];
        let prev2 = &blocks[(k - 3) as usize];

        let mut g1 = Vec::with_capacity(block_len(k)?);
        g1.extend_from_slice(&prev1.gamma2);
        g1.extend_from_slice(&prev1.gamma1);
        for c in g1.iter_mut().skip(1) {
            *c += 1;
        }

        let mut g2 = Vec::with_capacity(block_len(k - 1)?);
        g2.extend_from_slice(&prev2.gamma2);
        g2.extend_from_slice(&prev2.gamma1);
        let ones = (f(k - 3) + 1u32).to_usize().expect("block fits memory");
        for c in g2.iter_mut().take(ones) {
            *c += 1;
        }

        let sum = g1.iter().chain(&g2).map(|&c| u64::from(c)).sum();
        blocks.push(Arc::new(BBlock {
            gamma2: g2.into(),
            gamma1: g1.into(),
            sum,
        }));
    }
    Ok(blocks[idx].clone())
}

/// `(b(Γ_{2,m,1}), b(Γ_{1,m,1}))`, the number of squares ending at each
/// position of the two blocks.
pub fn b_block(m: i64) -> Result<(CountVector, CountVector)> {
    if m < 1 {
        return domain(format!("block index {m} < 1"));
    }
    let block = b_block_raw(m)?;
    let g2 = gamma_block(SquareCase::Two, m, &BigInt::one())?;
    let g1 = gamma_block(SquareCase::One, m, &BigInt::one())?;
    Ok((
        CountVector {
            range: g2.range,
            counts: block.gamma2.clone(),
        },
        CountVector {
            range: g1.range,
            counts: block.gamma1.clone(),
        },
    ))
}

/// `b(n)`, the number of square occurrences ending at position `n`.
pub fn b_at(n: &BigInt) -> Result<u32> {
    if *n < BigInt::one() {
        return domain("positions are 1-based");
    }
    if *n <= BigInt::from(3) {
        return Ok(0);
    }
    let m = fib_floor_index(&(n + 1)) - 2;
    let block = b_block_raw(m)?;
    let gamma1_start = f(m + 1) * 2 - 1;
    let (slice, offset) = if *n < gamma1_start {
        (&block.gamma2, n - (f(m + 2) - 1))
    } else {
        (&block.gamma1, n - gamma1_start)
    };
    let idx = offset.to_usize().expect("offset inside block");
    Ok(slice[idx])
}

/// Closed forms for `(Σ b(Γ_{1,m,1}), Σ b(Γ_{2,m,1}))`.
pub fn block_sums(m: i64) -> Result<(BigInt, BigInt)> {
    if m < 1 {
        return domain(format!("block index {m} < 1"));
    }
    let mm = BigInt::from(m);
    let gamma1 = div5(
        (&mm * 2 + 5) * f(m) + (&mm * 2 - 6) * f(m - 2),
        "sum over Γ_1 block",
    )? - 1;
    let gamma2 = div5(
        (&mm * 2 - 2) * f(m - 1) + (&mm * 2 - 3) * f(m - 3),
        "sum over Γ_2 block",
    )? + 1;
    Ok((gamma1, gamma2))
}

/// `B(f_{m+3} - 2)` for `m ≥ -1`.
pub fn occurrences_to_fib_anchor(m: i64) -> Result<BigInt> {
    if m < -1 {
        return domain(format!("B(f_(m+3) - 2) needs m >= -1, got {m}"));
    }
    let mm = BigInt::from(m);
    Ok(div5(
        (&mm * 2 - 4) * f(m + 3) + &mm * 2 * f(m + 1),
        "B(f_(m+3) - 2)",
    )? + 4)
}

/// `B(2f_{m+1} - 2)` for `m ≥ 0`.
pub fn occurrences_to_twofib_anchor(m: i64) -> Result<BigInt> {
    if m < 0 {
        return domain(format!("B(2f_(m+1) - 2) needs m >= 0, got {m}"));
    }
    let mm = BigInt::from(m);
    Ok(div5(
        (&mm * 4 - 11) * f(m + 1) + (&mm * 4 - 3) * f(m - 1),
        "B(2f_(m+1) - 2)",
    )? + 5)
}

/// `(B(f_{m+3} - 2), B(2f_{m+1} - 2))`; the second value exists for `m ≥ 0`.
pub fn b_closed_forms(m: i64) -> Result<(BigInt, Option<BigInt>)> {
    let first = occurrences_to_fib_anchor(m)?;
    let second = if m >= 0 {
        Some(occurrences_to_twofib_anchor(m)?)
    } else {
        None
    };
    Ok((first, second))
}

/// `(b(f_m - 1), b(f_m))` for `m ≥ 2`.
pub fn b_boundary(m: i64) -> Result<(u64, u64)> {
    if m < 2 {
        return domain(format!("b_boundary needs m >= 2, got {m}"));
    }
    let first = ((m - 1) / 2) as u64;
    let second = ((m - 2) / 2) as u64;
    debug_assert_eq!(first + second, (m - 2) as u64);
    Ok((first, second))
}

/// `B(f_m)` for `m ≥ 2`.
pub fn count_square_occurrences_at_fib(m: i64) -> Result<BigInt> {
    if m < 2 {
        return domain(format!("B(f_m) closed form needs m >= 2, got {m}"));
    }
    let mm = BigInt::from(m);
    Ok(div5((&mm * 4 - 16) * f(m) - (&mm * 2 - 6) * f(m - 1), "B(f_m)")? + m + 2)
}

/// Where a partial sum of `b` starts: at `f_m - 1` or at `2f_{m-1} - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Fib,
    TwoFib,
}

impl Anchor {
    pub fn start(self, m: i64) -> BigInt {
        match self {
            Anchor::Fib => f(m) - 1,
            Anchor::TwoFib => f(m - 1) * 2 - 1,
        }
    }

    /// Inclusive bounds on `n + 1` for which the anchor applies at `m`.
    pub fn window(self, m: i64) -> (BigInt, BigInt) {
        match self {
            Anchor::Fib => (f(m), f(m - 1) * 2 - 1),
            Anchor::TwoFib => (f(m - 1) * 2, f(m + 1) - 1),
        }
    }
}

/// Below this `m` the partial sums read the memoized blocks directly.
pub const DIRECT_SUM_BELOW: i64 = 5;

/// `Σ b(i)` for `i` from the anchor start up to `n`, for `(m, n)` inside
/// the anchor's window. Each step strips `f_{m-1}` from `n` and lands in a
/// window of the same kind at a smaller `m`, so the word is never built.
pub fn sum_b_suffix(anchor: Anchor, m: i64, n: &BigInt) -> Result<BigInt> {
    if m < 3 {
        return domain(format!("partial sum of b needs m >= 3, got {m}"));
    }
    let (lo, hi) = anchor.window(m);
    let n1 = n + 1;
    if n1 < lo || n1 > hi {
        return domain(format!("n = {n} outside the {anchor:?} window at m = {m}"));
    }
    let mut acc = BigInt::zero();
    let (mut anchor, mut m, mut n) = (anchor, m, n.clone());
    while m >= DIRECT_SUM_BELOW {
        let mm = BigInt::from(m);
        let n1 = &n + 1;
        let next_n = &n - f(m - 1);
        match anchor {
            Anchor::Fib => {
                if n1 < f(m) + f(m - 5) {
                    acc += &n - f(m) + 2;
                    anchor = Anchor::Fib;
                } else {
                    acc += div5(
                        (&mm * 2 - 5) * f(m - 5) + (&mm * 2 - 11) * f(m - 7),
                        "fib-anchored partial sum",
                    )? + 2;
                    anchor = Anchor::TwoFib;
                }
                m -= 2;
            }
            Anchor::TwoFib => {
                if n1 < f(m) + f(m - 2) {
                    acc += &n - f(m - 1) * 2 + 1;
                    anchor = Anchor::Fib;
                } else {
                    acc += &n - f(m - 1) * 2
                        + div5(
                            (&mm * 2 - 8) * f(m - 4) + (&mm * 2 - 9) * f(m - 6),
                            "twofib-anchored partial sum",
                        )?
                        + 2;
                    anchor = Anchor::TwoFib;
                }
                m -= 1;
            }
        }
        n = next_n;
    }
    let mut i = anchor.start(m);
    while i <= n {
        acc += b_at(&i)?;
        i += 1;
    }
    Ok(acc)
}

/// `B(n)`, the number of square occurrences in `𝔽[1,n]`, anchored at a
/// closed form and completed with [`sum_b_suffix`].
pub fn count_square_occurrences(n: &BigInt) -> Result<BigInt> {
    if *n < BigInt::one() {
        return domain("prefix length must be >= 1");
    }
    if *n <= BigInt::from(3) {
        return Ok(BigInt::zero());
    }
    let m = fib_floor_index(&(n + 1));
    if *n < f(m - 1) * 2 - 1 {
        Ok(occurrences_to_fib_anchor(m - 3)? + sum_b_suffix(Anchor::Fib, m, n)?)
    } else {
        Ok(occurrences_to_twofib_anchor(m - 2)? + sum_b_suffix(Anchor::TwoFib, m, n)?)
    }
}

/// `B(n)` by summing materialized blocks: whole blocks below `n`, then a
/// prefix of the block containing `n`. Independent of the closed forms.
pub fn count_square_occurrences_by_blocks(n: &BigInt) -> Result<BigInt> {
    if *n < BigInt::one() {
        return domain("prefix length must be >= 1");
    }
    if *n <= BigInt::from(3) {
        return Ok(BigInt::zero());
    }
    let top = fib_floor_index(&(n + 1)) - 2;
    let mut acc: u64 = (1..top)
        .map(|k| b_block_raw(k).map(|b| b.sum))
        .sum::<Result<u64>>()?;
    let block = b_block_raw(top)?;
    let start = f(top + 2) - 1;
    let offset: BigInt = n - start + 1u32;
    let take = offset.to_usize().expect("offset inside block");
    acc += block
        .gamma2
        .iter()
        .chain(block.gamma1.iter())
        .take(take)
        .map(|&c| u64::from(c))
        .sum::<u64>();
    Ok(BigInt::from(acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn range(lo: i64, hi: i64) -> PositionRange {
        PositionRange::new(big(lo), big(hi)).unwrap()
    }

    #[test]
    fn families() {
        let s = square_family(SquareCase::Two, 1, &big(1)).unwrap();
        assert_eq!(s.range, range(4, 4));
        let s = square_family(SquareCase::One, 1, &big(1)).unwrap();
        assert_eq!(s.range, range(6, 6));
        let s = square_family(SquareCase::One, 3, &big(1)).unwrap();
        assert_eq!(s.range, range(16, 19));
        assert_eq!(s.range.len(), f(3) - 1);
        assert!(SquareCase::try_from(3).is_err());
        assert!(square_family(SquareCase::One, 0, &big(1)).is_err());
    }

    #[test]
    fn family_cardinalities() {
        for m in 1..15 {
            for p in 1..30 {
                let one = square_family(SquareCase::One, m, &big(p)).unwrap();
                let two = square_family(SquareCase::Two, m, &big(p)).unwrap();
                assert_eq!(one.range.len(), f(m) - 1);
                assert_eq!(two.range.len(), f(m - 3) + 1);
            }
        }
    }

    #[test]
    fn gammas() {
        let g = |c, m, p| gamma_block(c, m, &big(p)).unwrap().range;
        assert_eq!(g(SquareCase::One, 1, 1), range(5, 6));
        assert_eq!(g(SquareCase::Two, 2, 1), range(7, 8));
        assert_eq!(g(SquareCase::Two, 4, 1), range(20, 24));
        for m in 1..12 {
            for p in 1..20 {
                let one = g(SquareCase::One, m, p);
                let two = g(SquareCase::Two, m, p);
                assert_eq!(one.len(), f(m));
                assert_eq!(two.len(), f(m - 1));
                assert_eq!(&two.hi + 1, one.lo);
            }
        }
    }

    #[test]
    fn indicator_and_distinct_counts() {
        assert_eq!(a_indicator(&big(3)), 0);
        assert_eq!(a_indicator(&big(4)), 1);
        assert_eq!(a_indicator(&big(11)), 1);
        // window for m = 2 is {10, ..., 13}
        assert_eq!(a_indicator(&big(12)), 1);
        assert_eq!(a_indicator(&big(14)), 0);
        assert_eq!(count_distinct_squares(&big(4)), big(1));
        assert_eq!(count_distinct_squares(&big(21)), big(14));
        assert_eq!(count_distinct_squares(&big(23)), big(15));
        assert_eq!(count_distinct_squares(&big(3)), big(0));
    }

    #[test]
    fn trees() {
        let t = square_tree(SquareCase::One, 5).unwrap();
        let kids: Vec<_> = t
            .children
            .iter()
            .map(|c| (c.family.case, c.family.m, c.family.p.clone()))
            .collect();
        assert_eq!(
            kids,
            vec![(SquareCase::Two, 4, big(2)), (SquareCase::One, 4, big(2))]
        );
        let t = square_tree(SquareCase::Two, 5).unwrap();
        let kids: Vec<_> = t
            .children
            .iter()
            .map(|c| (c.family.case, c.family.m, c.family.p.clone()))
            .collect();
        assert_eq!(
            kids,
            vec![(SquareCase::Two, 3, big(3)), (SquareCase::One, 3, big(3))]
        );
        let t = square_tree(SquareCase::One, 1).unwrap();
        assert!(t.children.is_empty());
        assert_eq!(t.render(), "<1,K_1,1> [6,6]\n");
    }

    #[test]
    fn figure_one_leaves() {
        let dump = square_tree(SquareCase::One, 5).unwrap().render();
        assert!(dump.contains("<2,K_1,12> [51,51]"));
        assert!(dump.contains("<1,K_1,12> [53,53]"));
        assert!(dump.contains("<1,K_4,2> [47,53]"));
        assert!(dump.contains("<2,K_4,2> [41,43]"));
    }

    #[test]
    fn printed_b_blocks() {
        let (g2, g1) = b_block(2).unwrap();
        assert_eq!(&*g1.counts, &[1, 1, 2]);
        assert_eq!(g1.range, range(9, 11));
        assert_eq!(&*g2.counts, &[1, 1]);
        let (g2, _) = b_block(3).unwrap();
        assert_eq!(&*g2.counts, &[2, 1, 1]);
        assert_eq!(g2.range, range(12, 14));
        let (_, g1) = b_block(4).unwrap();
        assert_eq!(&*g1.counts, &[2, 2, 2, 2, 3, 3, 3, 4]);
        assert_eq!(g1.range, range(25, 32));
    }

    #[test]
    fn b_values() {
        assert_eq!(b_at(&big(1)).unwrap(), 0);
        assert_eq!(b_at(&big(4)).unwrap(), 1);
        assert_eq!(b_at(&big(32)).unwrap(), 4);
        assert!(b_at(&big(0)).is_err());
    }

    #[test]
    fn closed_block_sums() {
        assert_eq!(block_sums(2).unwrap(), (big(4), big(2)));
        assert_eq!(block_sums(1).unwrap(), (big(1), big(1)));
        let (g2, g1) = b_block(10).unwrap();
        assert_eq!(block_sums(10).unwrap(), (g1.sum(), g2.sum()));
    }

    #[test]
    fn anchors() {
        assert_eq!(b_closed_forms(-1).unwrap(), (big(0), None));
        assert_eq!(b_closed_forms(4).unwrap(), (big(52), Some(big(31))));
        assert!(b_closed_forms(-2).is_err());
    }

    #[test]
    fn boundaries() {
        assert_eq!(b_boundary(2).unwrap(), (0, 0));
        assert_eq!(b_boundary(5).unwrap(), (2, 1));
        assert_eq!(b_boundary(6).unwrap(), (2, 2));
        assert!(b_boundary(1).is_err());
    }

    #[test]
    fn occurrences_at_fib() {
        assert_eq!(count_square_occurrences_at_fib(6).unwrap(), big(26));
        assert_eq!(count_square_occurrences_at_fib(4).unwrap(), big(4));
        assert_eq!(count_square_occurrences_at_fib(2).unwrap(), big(0));
    }

    #[test]
    fn partial_sums() {
        assert_eq!(sum_b_suffix(Anchor::Fib, 6, &big(23)).unwrap(), big(7));
        assert_eq!(sum_b_suffix(Anchor::Fib, 6, &big(20)).unwrap(), big(2));
        assert_eq!(sum_b_suffix(Anchor::TwoFib, 5, &big(15)).unwrap(), big(1));
        assert!(sum_b_suffix(Anchor::TwoFib, 5, &big(23)).is_err());
        assert!(sum_b_suffix(Anchor::Fib, 6, &big(19)).is_err());
    }

    #[test]
    fn occurrence_counts() {
        assert_eq!(count_square_occurrences(&big(19)).unwrap(), big(22));
        assert_eq!(count_square_occurrences(&big(23)).unwrap(), big(29));
        assert_eq!(count_square_occurrences(&big(2)).unwrap(), big(0));
        for n in 1..400 {
            assert_eq!(
                count_square_occurrences(&big(n)).unwrap(),
                count_square_occurrences_by_blocks(&big(n)).unwrap(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn range_concat() {
        assert_eq!(range(4, 6).concat(&range(7, 9)), Some(range(4, 9)));
        assert_eq!(range(4, 6).concat(&range(8, 9)), None);
        assert!(range(5, 4).is_empty());
        assert!(PositionRange::new(big(5), big(3)).is_err());
    }
}
