//! Cubes in the Fibonacci word.
//!
//! Every cube `ωωω` has kernel `K_m` with `m ≥ 3` and root length
//! `f_{m-1}`; for the `p`-th kernel occurrence the ending positions form
//! the run `⟨K_m,p⟩`. Runs nest into finite trees, and the trees rooted at
//! `⟨K_m,1⟩` partition the blocks `Γ_m = [f_{m+2} - 1, f_{m+3} - 2]`.

use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};
use crate::fibword::{div5, f, fib_floor_index, materializable, pos_letter, Letter};
use crate::squares::{kernel_base, CountVector, PositionRange};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeFamily {
    pub m: i64,
    pub p: BigInt,
    pub range: PositionRange,
    pub root_length: BigInt,
}

impl fmt::Display for CubeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<K_{},{}> {}", self.m, self.p, self.range)
    }
}

/// `⟨K_m,p⟩ = [base + 2f_{m-1}, base + f_{m+1} - 2]` with
/// `base = p·f_{m+1} + ⌊φp⌋·f_m`.
pub fn cube_family(m: i64, p: &BigInt) -> Result<CubeFamily> {
    if m < 3 {
        return domain(format!("cubes need kernel order >= 3, got {m}"));
    }
    if p < &BigInt::one() {
        return domain(format!("occurrence index {p} < 1"));
    }
    let base = kernel_base(m, p);
    Ok(CubeFamily {
        m,
        p: p.clone(),
        range: PositionRange::span(&base + f(m - 1) * 2, &base + f(m + 1) - 2),
        root_length: f(m - 1),
    })
}

/// `c(n)`: 1 when a distinct cube first appears as a suffix of `𝔽[1,n]`.
pub fn c_indicator(n: &BigInt) -> u8 {
    let mut m = 3;
    while f(m + 2) + f(m) * 2 <= *n {
        m += 1;
    }
    u8::from(f(m + 1) + f(m - 1) * 2 <= *n && *n <= f(m + 1) * 2 - 2)
}

/// `C(n)`, the number of distinct cubes in `𝔽[1,n]`.
pub fn count_distinct_cubes(n: &BigInt) -> BigInt {
    if *n < BigInt::from(14) {
        return BigInt::zero();
    }
    // Window f_{m+1} + 2f_{m-1} <= n <= f_{m+2} + 2f_m - 1.
    let mut m = 3;
    while f(m + 2) + f(m) * 2 <= *n {
        m += 1;
    }
    if *n <= f(m + 1) * 2 - 2 {
        n - f(m + 1) - f(m - 1) - m + 1
    } else {
        f(m) - m - 1
    }
}

/// `C(n)` by adding up the runs `⟨K_m,1⟩` clipped at `n`.
pub fn count_distinct_cubes_by_windows(n: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    let mut m = 3;
    loop {
        let run = cube_family(m, &BigInt::one()).expect("m >= 3");
        if run.range.lo > *n {
            return acc;
        }
        let hi = run.range.hi.min(n.clone());
        acc += hi - run.range.lo + 1;
        m += 1;
    }
}

/// `C(f_m)`.
pub fn count_distinct_cubes_at_fib(m: i64) -> Result<BigInt> {
    if m < 0 {
        return domain(format!("C(f_m) needs m >= 0, got {m}"));
    }
    if m <= 5 {
        return Ok(BigInt::zero());
    }
    Ok(f(m - 3) - m + 2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeTreeNode {
    pub family: CubeFamily,
    pub children: Vec<CubeTreeNode>,
}

impl CubeTreeNode {
    fn build(m: i64, p: BigInt) -> Self {
        let family = cube_family(m, &p).expect("tree nodes have m >= 3, p >= 1");
        let after_a = || pos_letter(Letter::A, &p) + 1;
        let children = match m {
            3 => Vec::new(),
            4 => vec![CubeTreeNode::build(3, after_a())],
            _ => vec![
                CubeTreeNode::build(m - 2, pos_letter(Letter::B, &p) + 1),
                CubeTreeNode::build(m - 1, after_a()),
            ],
        };
        CubeTreeNode { family, children }
    }

    pub fn nodes(&self) -> Vec<&CubeTreeNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }

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

/// The finite tree of cube runs rooted at `⟨K_m,1⟩`.
pub fn cube_tree(m: i64) -> Result<CubeTreeNode> {
    if m < 3 {
        return domain(format!("cube trees need m >= 3, got {m}"));
    }
    Ok(CubeTreeNode::build(m, BigInt::one()))
}

#[derive(Debug)]
struct DBlock {
    counts: Arc<[u32]>,
    sum: u64,
}

impl DBlock {
    fn new(counts: Vec<u32>) -> Arc<Self> {
        let sum = counts.iter().map(|&c| u64::from(c)).sum();
        Arc::new(DBlock {
            counts: counts.into(),
            sum,
        })
    }
}

/// Printed counts for `Γ_3 = [12, 19]` and `Γ_4 = [20, 32]`.
const D_BLOCK_3: [u32; 8] = [0, 0, 1, 0, 0, 0, 0, 0];
const D_BLOCK_4: [u32; 13] = [0, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 0, 0];

fn d_blocks() -> &'static RwLock<Vec<Arc<DBlock>>> {
    static BLOCKS: OnceLock<RwLock<Vec<Arc<DBlock>>>> = OnceLock::new();
    BLOCKS.get_or_init(|| {
        RwLock::new(vec![
            DBlock::new(D_BLOCK_3.to_vec()),
            DBlock::new(D_BLOCK_4.to_vec()),
        ])
    })
}

/// Lengths of the zero, one and zero runs added when block `k` is formed
/// from blocks `k - 2` and `k - 1`; they sum to `f_{k+1}`.
pub fn d_mask_lengths(k: i64) -> Result<(BigInt, BigInt, BigInt)> {
    if k < 5 {
        return domain(format!("d recursion starts at block 5, got {k}"));
    }
    Ok((f(k - 3) + 1, f(k - 2) - 1, f(k)))
}

fn d_block_raw(k: i64) -> Result<Arc<DBlock>> {
    assert!(k >= 3);
    let idx = (k - 3) as usize;
    if let Some(b) = d_blocks().read().expect("d blocks poisoned").get(idx) {
        return Ok(b.clone());
    }
    materializable(&(f(k + 3) - 2))?;
    let mut blocks = d_blocks().write().expect("d blocks poisoned");
    while blocks.len() <= idx {
        let j = blocks.len() as i64 + 3;
        let (zeros, ones, _) = d_mask_lengths(j)?;
        let zeros = zeros.to_usize().expect("block fits memory");
        let ones = ones.to_usize().expect("block fits memory");
        let older = &blocks[(j - 5) as usize];
        let newer = &blocks[(j - 4) as usize];
        let mut counts = Vec::with_capacity(older.counts.len() + newer.counts.len());
        counts.extend_from_slice(&older.counts);
        counts.extend_from_slice(&newer.counts);
        for c in &mut counts[zeros..zeros + ones] {
            *c += 1;
        }
        blocks.push(DBlock::new(counts));
    }
    Ok(blocks[idx].clone())
}

/// Range `Γ_k = [f_{k+2} - 1, f_{k+3} - 2]`.
pub fn cube_gamma(k: i64) -> PositionRange {
    PositionRange::span(f(k + 2) - 1, f(k + 3) - 2)
}

/// `d` over `Γ_k`: the number of cubes ending at each position.
pub fn d_block(k: i64) -> Result<CountVector> {
    if k < 3 {
        return domain(format!("d blocks start at k = 3, got {k}"));
    }
    Ok(CountVector {
        range: cube_gamma(k),
        counts: d_block_raw(k)?.counts.clone(),
    })
}

/// `d(n)`, the number of cube occurrences ending at position `n`.
pub fn d_at(n: &BigInt) -> Result<u32> {
    if *n < BigInt::one() {
        return domain("positions are 1-based");
    }
    if *n <= BigInt::from(11) {
        return Ok(0);
    }
    let k = fib_floor_index(&(n + 1)) - 2;
    let block = d_block_raw(k)?;
    let idx = (n - (f(k + 2) - 1u32))
        .to_usize()
        .expect("offset inside block");
    Ok(block.counts[idx])
}

/// Closed form for `Σ d(Γ_m)`.
pub fn d_block_sum(m: i64) -> Result<BigInt> {
    if m < 3 {
        return domain(format!("d block sums need m >= 3, got {m}"));
    }
    let mm = BigInt::from(m);
    Ok(div5((&mm - 5) * f(m) + (&mm + 2) * f(m - 2), "sum over d block")? + 1)
}

/// `D(f_m - 2)` for `m ≥ 6`; this is also `D(f_m)`.
pub fn d_closed_form(m: i64) -> Result<BigInt> {
    if m < 6 {
        return domain(format!("D(f_m - 2) closed form needs m >= 6, got {m}"));
    }
    let mm = BigInt::from(m);
    Ok(div5((&mm - 11) * f(m - 1) + (&mm + 1) * f(m - 3), "D(f_m - 2)")? + m + 1)
}

/// Below this `m` the partial sums of `d` read the blocks directly.
pub const DIRECT_D_SUM_BELOW: i64 = 7;

/// `Σ_{i = f_m - 1}^{n} d(i)` for `f_m ≤ n + 1 < f_{m+1}`, `m ≥ 5`.
pub fn sum_d_suffix(m: i64, n: &BigInt) -> Result<BigInt> {
    if m < 5 {
        return domain(format!("partial sum of d needs m >= 5, got {m}"));
    }
    let n1 = n + 1;
    if n1 < f(m) || n1 >= f(m + 1) {
        return domain(format!("n = {n} outside the window at m = {m}"));
    }
    let mut acc = BigInt::zero();
    let (mut m, mut n) = (m, n.clone());
    while m >= DIRECT_D_SUM_BELOW {
        let n1 = &n + 1;
        let next_n = &n - f(m - 1);
        if n1 <= f(m) + f(m - 5) {
            m -= 2;
        } else if n1 < f(m) + f(m - 3) {
            // The corollary sums from f_{m-2} + 1; positions f_{m-2} - 1 and
            // f_{m-2} carry no cube, so the anchored sum is the same.
            acc += &n - f(m) - f(m - 5) + 1;
            m -= 2;
        } else {
            let mm = BigInt::from(m);
            acc += div5(
                (&mm - 4) * f(m - 4) + (&mm - 2) * f(m - 6),
                "partial sum of d",
            )?;
            m -= 1;
        }
        n = next_n;
    }
    let mut i = f(m) - 1;
    while i <= n {
        acc += d_at(&i)?;
        i += 1;
    }
    Ok(acc)
}

/// `D(n)`, the number of cube occurrences in `𝔽[1,n]`.
pub fn count_cube_occurrences(n: &BigInt) -> Result<BigInt> {
    if *n < BigInt::one() {
        return domain("prefix length must be >= 1");
    }
    if *n <= BigInt::from(11) {
        return Ok(BigInt::zero());
    }
    let m = fib_floor_index(&(n + 1));
    if m < 6 {
        let mut acc = BigInt::zero();
        let mut i = BigInt::from(12);
        while i <= *n {
            acc += d_at(&i)?;
            i += 1;
        }
        return Ok(acc);
    }
    Ok(d_closed_form(m)? + sum_d_suffix(m, n)?)
}

/// `D(n)` by summing materialized blocks.
pub fn count_cube_occurrences_by_blocks(n: &BigInt) -> Result<BigInt> {
    if *n < BigInt::one() {
        return domain("prefix length must be >= 1");
    }
    if *n <= BigInt::from(11) {
        return Ok(BigInt::zero());
    }
    let top = fib_floor_index(&(n + 1)) - 2;
    let mut acc: u64 = (3..top)
        .map(|k| d_block_raw(k).map(|b| b.sum))
        .sum::<Result<u64>>()?;
    let block = d_block_raw(top)?;
    let take = (n - (f(top + 2) - 1u32) + 1u32)
        .to_usize()
        .expect("offset inside block");
    acc += block.counts[..take]
        .iter()
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
        assert_eq!(cube_family(3, &big(1)).unwrap().range, range(14, 14));
        assert_eq!(cube_family(4, &big(1)).unwrap().range, range(23, 24));
        assert_eq!(cube_family(3, &big(7)).unwrap().range, range(82, 82));
        assert!(cube_family(2, &big(1)).is_err());
        for m in 3..16 {
            for p in 1..30 {
                assert_eq!(cube_family(m, &big(p)).unwrap().range.len(), f(m - 2) - 1);
            }
        }
    }

    #[test]
    fn distinct_cubes() {
        assert_eq!(c_indicator(&big(13)), 0);
        assert_eq!(c_indicator(&big(14)), 1);
        assert_eq!(c_indicator(&big(25)), 0);
        assert_eq!(count_distinct_cubes(&big(13)), big(0));
        assert_eq!(count_distinct_cubes(&big(24)), big(3));
        assert_eq!(count_distinct_cubes(&big(21)), big(1));
        assert_eq!(count_distinct_cubes_at_fib(5).unwrap(), big(0));
        assert_eq!(count_distinct_cubes_at_fib(6).unwrap(), big(1));
        assert_eq!(count_distinct_cubes_at_fib(9).unwrap(), big(14));
    }

    #[test]
    fn trees() {
        let t = cube_tree(6).unwrap();
        let kids: Vec<_> = t
            .children
            .iter()
            .map(|c| (c.family.m, c.family.p.clone()))
            .collect();
        assert_eq!(kids, vec![(4, big(3)), (5, big(2))]);
        assert!(cube_tree(3).unwrap().children.is_empty());
        let t = cube_tree(5).unwrap();
        let kids: Vec<_> = t
            .children
            .iter()
            .map(|c| (c.family.m, c.family.p.clone()))
            .collect();
        assert_eq!(kids, vec![(3, big(3)), (4, big(2))]);
        let dump = cube_tree(6).unwrap().render();
        assert!(dump.contains("<K_5,2> [71,74]"));
        assert!(dump.contains("<K_4,3> [57,58]"));
    }

    #[test]
    fn printed_blocks() {
        let b = d_block(3).unwrap();
        assert_eq!(&*b.counts, &D_BLOCK_3);
        assert_eq!(b.range, range(12, 19));
        let b = d_block(5).unwrap();
        assert_eq!(
            &*b.counts,
            &[0, 0, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 0, 0]
        );
        assert_eq!(b.range, range(33, 53));
        let b = d_block(7).unwrap();
        assert_eq!(b.sum(), d_block_sum(7).unwrap());
    }

    #[test]
    fn mask_lengths_cover_block() {
        for k in 5..20 {
            let (z, o, z2) = d_mask_lengths(k).unwrap();
            assert_eq!(z + o + z2, f(k + 1));
        }
    }

    #[test]
    fn d_values() {
        assert_eq!(d_at(&big(14)).unwrap(), 1);
        assert_eq!(d_at(&big(12)).unwrap(), 0);
        assert_eq!(d_at(&big(44)).unwrap(), 1);
        assert_eq!(d_block_sum(3).unwrap(), big(1));
        assert_eq!(d_block_sum(4).unwrap(), big(3));
        assert_eq!(d_block_sum(5).unwrap(), big(8));
    }

    #[test]
    fn closed_and_partial() {
        assert_eq!(d_closed_form(7).unwrap(), big(4));
        assert_eq!(d_closed_form(6).unwrap(), big(1));
        assert!(d_closed_form(5).is_err());
        assert_eq!(sum_d_suffix(7, &big(48)).unwrap(), big(8));
        assert_eq!(sum_d_suffix(7, &big(34)).unwrap(), big(0));
        assert_eq!(sum_d_suffix(6, &big(24)).unwrap(), big(2));
        assert!(sum_d_suffix(7, &big(60)).is_err());
        assert_eq!(count_cube_occurrences(&big(11)).unwrap(), big(0));
        assert_eq!(count_cube_occurrences(&big(32)).unwrap(), big(4));
        assert_eq!(count_cube_occurrences(&big(48)).unwrap(), big(12));
        for n in 1..500 {
            assert_eq!(
                count_cube_occurrences(&big(n)).unwrap(),
                count_cube_occurrences_by_blocks(&big(n)).unwrap(),
                "n = {n}"
            );
        }
    }
}
