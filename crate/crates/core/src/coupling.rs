//! Componentwise ("lexicographic") order on equal-size vertex subsets and the
//! block-swapping bijection on choice sequences that couples `|N(X)|` with
//! `|N(X')|` for a cover pair `(X, X')`.
//!
//! Everything here is checked by exhaustive enumeration, so probabilities are
//! carried as exact counts over the `(n-1)!^k` equally likely sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{enumerate_choice_sequences_capped, sequence_count, ChoiceSequence, DEFAULT_ENUMERATION_CAP};
use crate::subset::VertexSubset;

/// `X ⪯ Y`: same size and `x_i <= y_i` position by position.
pub fn lex_leq(x: &VertexSubset, y: &VertexSubset) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch { left: x.len(), right: y.len() });
    }
    Ok(x.iter().zip(y.iter()).all(|(a, b)| a <= b))
}

/// Two subsets differing by replacing `pivot` with `pivot + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverPair {
    pivot: u32,
    lower: VertexSubset,
    upper: VertexSubset,
}

impl CoverPair {
    pub fn new(lower: VertexSubset, upper: VertexSubset) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::SizeMismatch { left: lower.len(), right: upper.len() });
        }
        let only_lower: Vec<u32> = lower.iter().filter(|&v| !upper.contains(v)).collect();
        let only_upper: Vec<u32> = upper.iter().filter(|&v| !lower.contains(v)).collect();
        match (only_lower.as_slice(), only_upper.as_slice()) {
            ([x], [y]) if *y == x + 1 => Ok(Self { pivot: *x, lower, upper }),
            _ => Err(Error::InvalidParameter(format!("{upper} does not cover {lower}"))),
        }
    }

    /// The pair obtained from `lower` by moving `pivot` to `pivot + 1`.
    pub fn from_pivot(lower: VertexSubset, pivot: u32) -> Result<Self> {
        if !lower.contains(pivot) || lower.contains(pivot + 1) {
            return Err(Error::InvalidParameter(format!("pivot {pivot} cannot be incremented in {lower}")));
        }
        let upper = VertexSubset::from_unsorted(lower.iter().map(|v| if v == pivot { v + 1 } else { v }));
        Ok(Self { pivot, lower, upper })
    }

    pub fn pivot(&self) -> u32 {
        self.pivot
    }

    pub fn lower(&self) -> &VertexSubset {
        &self.lower
    }

    pub fn upper(&self) -> &VertexSubset {
        &self.upper
    }
}

/// Chain of cover pairs leading from `x` to `y`.
///
/// Each step increments the largest element that still lies below its target,
/// which is always free to move up by one.
pub fn cover_decompose(x: &VertexSubset, y: &VertexSubset) -> Result<Vec<CoverPair>> {
    if !lex_leq(x, y)? {
        return Err(Error::NotComparable);
    }
    let target = y.as_slice();
    let mut current = x.as_slice().to_vec();
    let mut chain = Vec::new();
    while let Some(i) = (0..current.len()).rev().find(|&i| current[i] < target[i]) {
        let pivot = current[i];
        let lower = VertexSubset::new(current.clone())?;
        current[i] += 1;
        let upper = VertexSubset::new(current.clone())?;
        chain.push(CoverPair { pivot, lower, upper });
    }
    Ok(chain)
}

/// The coupling map for pivot `x`.
///
/// Blocks before `x` are kept. Blocks `x` and `x + 1` are swapped position by
/// position, except at positions where block `x + 1` holds `x`. In every later
/// block the labels `x` and `x + 1` trade places. Vertex 1 owns no block, so
/// for `x = 1` the swap step is empty (block 2 consists of 1s only).
pub fn swap_map(z: &ChoiceSequence, x: u32) -> Result<ChoiceSequence> {
    let n = z.n();
    if x == 0 || x + 1 > n {
        return Err(Error::PivotOutOfRange { pivot: x, n });
    }
    let k = z.k() as usize;
    let mut out = z.entries().to_vec();
    if x >= 2 {
        let bx = (x as usize - 2) * k;
        let by = bx + k;
        for j in 0..k {
            if z.entries()[by + j] != x {
                out.swap(bx + j, by + j);
            }
        }
    }
    let tail = (x as usize) * k;
    for e in &mut out[tail..] {
        if *e == x {
            *e = x + 1;
        } else if *e == x + 1 {
            *e = x;
        }
    }
    Ok(ChoiceSequence::from_raw(n, z.k(), out))
}

/// Undoes [`swap_map`].
///
/// Positions of block `x + 1` that were left alone are exactly those still
/// holding `x` (a swapped-in entry comes from block `x` and is at most
/// `x - 1`), so running the same procedure again restores the input.
pub fn swap_unmap(z_prime: &ChoiceSequence, x: u32) -> Result<ChoiceSequence> {
    swap_map(z_prime, x)
}

/// Out-neighbourhood size of `subset` in the graph of `z`, straight from the blocks.
pub fn neighborhood_size(z: &ChoiceSequence, subset: &VertexSubset) -> usize {
    let n = z.n() as usize;
    let mut inside = vec![false; n + 1];
    for v in subset {
        inside[*v as usize] = true;
    }
    let mut hit = vec![false; n + 1];
    for (i, block) in z.blocks() {
        let i_in = inside[i as usize];
        for &u in block {
            let u_in = inside[u as usize];
            if i_in && !u_in {
                hit[u as usize] = true;
            } else if u_in && !i_in {
                hit[i as usize] = true;
            }
        }
    }
    hit.iter().filter(|&&h| h).count()
}

/// Checks `|N_{Γ(z')}(X')| <= |N_{Γ(z)}(X)|` for the pair's pivot.
pub fn verify_neighbor_claim(z: &ChoiceSequence, pair: &CoverPair) -> bool {
    let Ok(z_prime) = swap_map(z, pair.pivot) else {
        return false;
    };
    neighborhood_size(&z_prime, &pair.upper) <= neighborhood_size(z, &pair.lower)
}

/// Exact comparison of `P(|N(X)| >= m)` and `P(|N(Y)| >= m)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub n: u32,
    pub k: u32,
    pub m: u32,
    pub x: VertexSubset,
    pub y: VertexSubset,
    /// `(n-1)!^k`
    pub total: u64,
    /// Sequences with `|N(X)| >= m`.
    pub count_x: u64,
    /// Sequences with `|N(Y)| >= m`.
    pub count_y: u64,
    pub dominates: bool,
}

impl DominanceReport {
    pub fn prob_x(&self) -> f64 {
        self.count_x as f64 / self.total as f64
    }

    pub fn prob_y(&self) -> f64 {
        self.count_y as f64 / self.total as f64
    }
}

pub fn verify_dominance_exact(
    n: u32,
    k: u32,
    x: &VertexSubset,
    y: &VertexSubset,
    m: u32,
) -> Result<DominanceReport> {
    verify_dominance_exact_capped(n, k, x, y, m, DEFAULT_ENUMERATION_CAP)
}

pub fn verify_dominance_exact_capped(
    n: u32,
    k: u32,
    x: &VertexSubset,
    y: &VertexSubset,
    m: u32,
    cap: u128,
) -> Result<DominanceReport> {
    if !lex_leq(x, y)? {
        return Err(Error::NotComparable);
    }
    if !x.within(n) || !y.within(n) {
        return Err(Error::InvalidParameter(format!("subsets must lie in [1, {n}]")));
    }
    let (mut total, mut count_x, mut count_y) = (0u64, 0u64, 0u64);
    for z in enumerate_choice_sequences_capped(n, k, cap)? {
        total += 1;
        count_x += u64::from(neighborhood_size(&z, x) >= m as usize);
        count_y += u64::from(neighborhood_size(&z, y) >= m as usize);
    }
    Ok(DominanceReport {
        n,
        k,
        m,
        x: x.clone(),
        y: y.clone(),
        total,
        count_x,
        count_y,
        dominates: count_x >= count_y,
    })
}

/// Exact distribution of `|N(X)|` for every subset `X` of `[n]`.
///
/// `counts[mask][s]` is the number of sequences with `|N(X)| = s`, where bit
/// `v - 1` of `mask` marks vertex `v`.
#[derive(Debug, Clone)]
pub struct NeighborhoodCensus {
    pub n: u32,
    pub k: u32,
    pub total: u64,
    counts: Vec<Vec<u64>>,
}

impl NeighborhoodCensus {
    /// Enumerates all sequences; the last block's values are spread across threads.
    pub fn compute(n: u32, k: u32, cap: u128) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter("n and k must be positive".into()));
        }
        if n > 20 {
            return Err(Error::InvalidParameter("census is limited to n <= 20".into()));
        }
        let required = sequence_count(n, k).unwrap_or(u128::MAX);
        if required > cap {
            return Err(Error::EnumerationCap { required, cap });
        }
        let subsets = 1usize << n;
        let width = n as usize + 1;
        if n == 1 {
            let mut counts = vec![vec![0u64; width]; subsets];
            counts[0][0] = 1;
            counts[1][0] = 1;
            return Ok(Self { n, k, total: 1, counts });
        }
        let prefix: Vec<ChoiceSequence> = enumerate_choice_sequences_capped(n - 1, k, cap)?.collect();
        let last_blocks = (n as u64 - 1).pow(k);
        let merged = (0..last_blocks)
            .into_par_iter()
            .fold(
                || vec![0u64; subsets * width],
                |mut acc, code| {
                    let mut block = Vec::with_capacity(k as usize);
                    let mut c = code;
                    for _ in 0..k {
                        block.push((c % (n as u64 - 1)) as u32 + 1);
                        c /= n as u64 - 1;
                    }
                    let mut nb = vec![0u64; subsets];
                    for p in &prefix {
                        let mut adj = vec![0u64; n as usize];
                        let mut add = |u: u32, v: u32| {
                            adj[u as usize - 1] |= 1 << (v - 1);
                            adj[v as usize - 1] |= 1 << (u - 1);
                        };
                        for (i, b) in p.blocks() {
                            for &u in b {
                                add(u, i);
                            }
                        }
                        for &u in &block {
                            add(u, n);
                        }
                        for mask in 1..subsets {
                            let low = mask.trailing_zeros() as usize;
                            nb[mask] = nb[mask & (mask - 1)] | adj[low];
                        }
                        for (mask, &reach) in nb.iter().enumerate() {
                            let size = (reach & !(mask as u64)).count_ones() as usize;
                            acc[mask * width + size] += 1;
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; subsets * width],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
        let counts = merged.chunks(width).map(|c| c.to_vec()).collect();
        Ok(Self { n, k, total: required as u64, counts })
    }

    /// Histogram of `|N(X)|` over all sequences.
    pub fn distribution(&self, subset: &VertexSubset) -> &[u64] {
        &self.counts[subset.to_mask() as usize]
    }

    /// Number of sequences with `|N(X)| >= m`.
    pub fn count_at_least(&self, subset: &VertexSubset, m: u32) -> u64 {
        self.distribution(subset).iter().skip(m as usize).sum()
    }

    /// Number of sequences with `|N(X)| < m`.
    pub fn count_below(&self, subset: &VertexSubset, m: u32) -> u64 {
        self.total - self.count_at_least(subset, m)
    }

    pub fn dominance(&self, x: &VertexSubset, y: &VertexSubset, m: u32) -> Result<DominanceReport> {
        if !lex_leq(x, y)? {
            return Err(Error::NotComparable);
        }
        let count_x = self.count_at_least(x, m);
        let count_y = self.count_at_least(y, m);
        Ok(DominanceReport {
            n: self.n,
            k: self.k,
            m,
            x: x.clone(),
            y: y.clone(),
            total: self.total,
            count_x,
            count_y,
            dominates: count_x >= count_y,
        })
    }
}

/// All `size`-subsets of `[n]` in lexicographic order.
pub fn subsets_of_size(n: u32, size: usize) -> Vec<VertexSubset> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: u32, n: u32, size: usize, cur: &mut Vec<u32>, out: &mut Vec<VertexSubset>) {
        if cur.len() == size {
            out.push(VertexSubset::new(cur.clone()).expect("increasing by construction"));
            return;
        }
        for v in start..=n {
            if (n - v + 1) as usize + cur.len() < size {
                break;
            }
            cur.push(v);
            rec(v + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(1, n, size, &mut cur, &mut out);
    out
}

/// Every ordered pair `(X, Y)` of `size`-subsets with `X ⪯ Y` and `X != Y`.
pub fn comparable_pairs(n: u32, size: usize) -> Vec<(VertexSubset, VertexSubset)> {
    let all = subsets_of_size(n, size);
    let mut out = Vec::new();
    for x in &all {
        for y in &all {
            if x != y && lex_leq(x, y).unwrap_or(false) {
                out.push((x.clone(), y.clone()));
            }
        }
    }
    out
}

/// Every cover pair among subsets of `[n]`.
pub fn all_cover_pairs(n: u32) -> Vec<CoverPair> {
    let mut out = Vec::new();
    for size in 1..=n as usize {
        for lower in subsets_of_size(n, size) {
            for pivot in lower.iter() {
                if pivot < n && !lower.contains(pivot + 1) {
                    out.push(CoverPair::from_pivot(lower.clone(), pivot).expect("checked"));
                }
            }
        }
    }
    out
}
