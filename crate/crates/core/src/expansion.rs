//! Out-neighbourhoods, `(α, β)`-expansion certificates and the analytic
//! tail bounds for the suffix sets `[n-m+1, n]`.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{RngSpec, UagGraph, DEFAULT_ENUMERATION_CAP};
use crate::subset::VertexSubset;
use crate::thresholds::{solve_threshold, Which, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodReport {
    pub set: VertexSubset,
    pub neighbors: VertexSubset,
}

impl NeighborhoodReport {
    pub fn set_size(&self) -> usize {
        self.set.len()
    }

    pub fn neighbor_count(&self) -> usize {
        self.neighbors.len()
    }
}

/// `N(X)`: vertices outside `X` adjacent to some member of `X`.
pub fn out_neighbors(g: &UagGraph, set: &VertexSubset) -> NeighborhoodReport {
    NeighborhoodReport { set: set.clone(), neighbors: neighbor_set(g, set.as_slice()) }
}

pub(crate) fn neighbor_set(g: &UagGraph, set: &[u32]) -> VertexSubset {
    let n = g.n() as usize;
    let mut inside = vec![false; n + 1];
    for &v in set {
        inside[v as usize] = true;
    }
    let mut seen = vec![false; n + 1];
    let mut out = Vec::new();
    for &v in set {
        for &u in g.neighbors(v) {
            if !inside[u as usize] && !seen[u as usize] {
                seen[u as usize] = true;
                out.push(u);
            }
        }
    }
    VertexSubset::from_unsorted(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificationMethod {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpanderCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub pass: bool,
    /// A violating set, present iff `pass` is false.
    pub witness: Option<VertexSubset>,
    pub method: CertificationMethod,
    /// Subsets examined.
    pub checked: u64,
}

fn check_alpha_beta(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

fn max_size(n: u32, alpha: f64) -> usize {
    // guard against 0.3 * 10 = 2.9999999999999996
    ((alpha * f64::from(n)) + 1e-9).floor() as usize
}

fn violates(neighbors: usize, size: usize, beta: f64) -> bool {
    (neighbors as f64) < beta * size as f64
}

fn binomial_u128(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

pub fn is_expander_exact(g: &UagGraph, alpha: f64, beta: f64) -> Result<ExpanderCertificate> {
    is_expander_exact_capped(g, alpha, beta, DEFAULT_ENUMERATION_CAP)
}

/// Scans every subset with `1 <= |X| <= ⌊αn⌋`.
///
/// Subsets are visited depth-first in lexicographic order of their sorted
/// member lists, split across threads by smallest member; the first violation
/// in that order is returned as the witness.
pub fn is_expander_exact_capped(g: &UagGraph, alpha: f64, beta: f64, cap: u128) -> Result<ExpanderCertificate> {
    check_alpha_beta(alpha, beta)?;
    let n = g.n();
    let limit = max_size(n, alpha);
    let required: u128 = (1..=limit as u128).map(|m| binomial_u128(u128::from(n), m).unwrap_or(u128::MAX)).fold(0u128, |a, b| a.saturating_add(b));
    if required > cap {
        return Err(Error::EnumerationCap { required, cap });
    }
    if limit == 0 {
        return Ok(ExpanderCertificate { alpha, beta, pass: true, witness: None, method: CertificationMethod::Exact, checked: 0 });
    }
    let adj = g.adjacency_masks()?;
    let results: Vec<(u64, Option<u64>)> = (1..=n)
        .into_par_iter()
        .map(|first| {
            let mut checked = 0u64;
            let bit = 1u64 << (first - 1);
            let found = scan(&adj, n, limit, beta, bit, adj[first as usize - 1], first, &mut checked);
            (checked, found)
        })
        .collect();
    let checked = results.iter().map(|r| r.0).sum();
    let witness = results.iter().find_map(|r| r.1).map(VertexSubset::from_mask);
    Ok(ExpanderCertificate {
        alpha,
        beta,
        pass: witness.is_none(),
        witness,
        method: CertificationMethod::Exact,
        checked,
    })
}

#[allow(clippy::too_many_arguments)]
fn scan(adj: &[u64], n: u32, limit: usize, beta: f64, set: u64, reach: u64, last: u32, checked: &mut u64) -> Option<u64> {
    *checked += 1;
    let size = set.count_ones() as usize;
    if violates((reach & !set).count_ones() as usize, size, beta) {
        return Some(set);
    }
    if size == limit {
        return None;
    }
    for v in last + 1..=n {
        let bit = 1u64 << (v - 1);
        if let Some(w) = scan(adj, n, limit, beta, set | bit, reach | adj[v as usize - 1], v, checked) {
            return Some(w);
        }
    }
    None
}

/// Options for [`is_expander_sampled`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledOptions {
    pub trials: u64,
    pub rng: RngSpec,
    /// Choices per vertex of the graph, used to weight subset sizes by the
    /// union-bound terms. Without it sizes are drawn uniformly.
    pub k_hint: Option<u32>,
}

/// One-sided check: a failure carries a verified witness, a pass only means
/// no violation turned up.
///
/// All suffix sets `[n-m+1, n]` are always tested first. Each trial then
/// alternates between a uniformly random subset of a weighted random size and
/// a greedy growth that repeatedly adds the vertex keeping `N(X)` smallest,
/// testing every intermediate set.
pub fn is_expander_sampled(g: &UagGraph, alpha: f64, beta: f64, opts: &SampledOptions) -> Result<ExpanderCertificate> {
    check_alpha_beta(alpha, beta)?;
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let n = g.n();
    let limit = max_size(n, alpha);
    let mut best: Option<VertexSubset> = None;
    let mut checked = 0u64;
    let consider = |set: &[u32], best: &mut Option<VertexSubset>| {
        let cand = VertexSubset::from_unsorted(set.iter().copied());
        if best.as_ref().is_none_or(|b| cand < *b) {
            *best = Some(cand);
        }
    };
    for m in 1..=limit {
        checked += 1;
        let suffix: Vec<u32> = (n - m as u32 + 1..=n).collect();
        if violates(neighbor_set(g, &suffix).len(), m, beta) {
            consider(&suffix, &mut best);
        }
    }
    if limit == 0 {
        return Ok(ExpanderCertificate { alpha, beta, pass: true, witness: None, method: CertificationMethod::Sampled, checked });
    }
    let weights = size_weights(n, limit, beta, opts.k_hint);
    let total_weight: f64 = weights.iter().sum();
    let mut rng = opts.rng.rng();
    let mut grower = Grower::new(g);
    for trial in 0..opts.trials {
        if trial % 2 == 0 {
            let mut r = rng.random::<f64>() * total_weight;
            let mut m = limit;
            for (i, w) in weights.iter().enumerate() {
                if r < *w {
                    m = i + 1;
                    break;
                }
                r -= w;
            }
            let set: Vec<u32> = sample_indices(&mut rng, n as usize, m).into_iter().map(|i| i as u32 + 1).collect();
            checked += 1;
            if violates(neighbor_set(g, &set).len(), m, beta) {
                consider(&set, &mut best);
            }
        } else {
            let start = rng.random_range(1..=n);
            checked += grower.grow(start, limit, beta, &mut rng, |set| consider(set, &mut best));
        }
    }
    Ok(ExpanderCertificate {
        alpha,
        beta,
        pass: best.is_none(),
        witness: best,
        method: CertificationMethod::Sampled,
        checked,
    })
}

fn size_weights(n: u32, limit: usize, beta: f64, k_hint: Option<u32>) -> Vec<f64> {
    let uniform = vec![1.0; limit];
    let Some(k) = k_hint else {
        return uniform;
    };
    let variant = if beta <= 1.0 { UnionVariant::Match } else { UnionVariant::Hamilton };
    let logs: Vec<f64> = (1..=limit as u32).map(|m| union_term_ln(u64::from(n), u64::from(m), k, variant)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return uniform;
    }
    // keep a floor so that every size is still visited now and then
    logs.iter().map(|l| (l - top).exp() + 0.05 / limit as f64).collect()
}

/// Greedy low-expansion set builder with reusable scratch space.
struct Grower<'a> {
    g: &'a UagGraph,
    in_set: Vec<bool>,
    /// number of set members adjacent to each vertex
    touch: Vec<u32>,
}

impl<'a> Grower<'a> {
    fn new(g: &'a UagGraph) -> Self {
        let n = g.n() as usize;
        Self { g, in_set: vec![false; n + 1], touch: vec![0; n + 1] }
    }

    fn grow<R: Rng>(&mut self, start: u32, limit: usize, beta: f64, rng: &mut R, mut report: impl FnMut(&[u32])) -> u64 {
        let mut set = Vec::with_capacity(limit);
        let mut frontier = 0usize;
        let mut frontier_list: Vec<u32> = Vec::new();
        let mut checked = 0;
        let mut next = Some(start);
        while let Some(v) = next {
            // add v
            if self.touch[v as usize] > 0 {
                frontier -= 1;
            }
            self.in_set[v as usize] = true;
            set.push(v);
            for &u in self.g.neighbors(v) {
                if self.touch[u as usize] == 0 && !self.in_set[u as usize] {
                    frontier += 1;
                    frontier_list.push(u);
                }
                self.touch[u as usize] += 1;
            }
            checked += 1;
            if violates(frontier, set.len(), beta) {
                report(&set);
            }
            if set.len() == limit {
                break;
            }
            // candidate minimising the new frontier size; ties broken at random
            let mut best_gain = i64::MAX;
            let mut choice = None;
            let mut ties = 0u32;
            frontier_list.retain(|&u| !self.in_set[u as usize]);
            for &u in &frontier_list {
                let fresh = self.g.neighbors(u).iter().filter(|&&w| !self.in_set[w as usize] && self.touch[w as usize] == 0).count() as i64;
                let gain = fresh - 1;
                if gain < best_gain {
                    best_gain = gain;
                    choice = Some(u);
                    ties = 1;
                } else if gain == best_gain {
                    ties += 1;
                    if rng.random_range(0..ties) == 0 {
                        choice = Some(u);
                    }
                }
            }
            next = choice.or_else(|| {
                // the set has no outside neighbours left; jump anywhere
                (1..=self.g.n()).find(|&u| !self.in_set[u as usize])
            });
        }
        for &v in &set {
            self.in_set[v as usize] = false;
            for &u in self.g.neighbors(v) {
                self.touch[u as usize] = 0;
            }
        }
        checked
    }
}

/// Which of the two suffix-set tail bounds to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailVariant {
    /// `P(|N(X)| < m)`
    M,
    /// `P(|N(X)| < 2m)`
    TwoM,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub n: u64,
    pub m: u64,
    pub k: u32,
    pub variant: TailVariant,
    /// Natural log of the bound.
    pub ln_value: f64,
}

impl TailBound {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// `ln (a)_j` with `(a)_j = a(a-1)...(a-j+1)`.
pub fn ln_falling_factorial(a: u64, j: u64) -> f64 {
    assert!(j <= a, "falling factorial ({a})_{j} is zero");
    ln_gamma(a as f64 + 1.0) - ln_gamma((a - j) as f64 + 1.0)
}

pub fn falling_factorial(a: u64, j: u64) -> u128 {
    (0..j).fold(1u128, |acc, i| acc * u128::from(a.saturating_sub(i)))
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Bound on `P(|N(X)| < m)` (resp. `< 2m`) for `X = [n-m+1, n]` in `G_{n,k}`:
/// `C(n-m, m-1) ((2m)_m / (n)_m)^k`, resp. `C(n-m, 2m-1) ((3m)_m / (n)_m)^k`.
pub fn tail_bound(n: u64, m: u64, k: u32, variant: TailVariant) -> Result<TailBound> {
    if m == 0 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let (ok, choose, top) = match variant {
        TailVariant::M => (2 * m <= n, m - 1, 2 * m),
        TailVariant::TwoM => (3 * m <= n, 2 * m - 1, 3 * m),
    };
    if !ok {
        return Err(Error::Domain(format!("m = {m} too large for n = {n} in variant {variant:?}")));
    }
    let ratio = ln_falling_factorial(top, m) - ln_falling_factorial(n, m);
    let ln_value = ln_binomial(n - m, choose) + f64::from(k) * ratio;
    Ok(TailBound { n, m, k, variant, ln_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnionVariant {
    /// `Σ_{m=2}^{⌊αn⌋} q_m`
    Match,
    /// `Σ_{m=1}^{⌊αn⌋} q'_m`
    Hamilton,
}

/// `ln q_m` or `ln q'_m`.
pub fn union_term_ln(n: u64, m: u64, k: u32, variant: UnionVariant) -> f64 {
    let (choose, top) = match variant {
        UnionVariant::Match => (m.saturating_sub(1), 2 * m),
        UnionVariant::Hamilton => (2 * m - 1, 3 * m),
    };
    if m > n || top > n {
        return f64::NEG_INFINITY;
    }
    ln_binomial(n, m) + ln_binomial(n - m, choose) + f64::from(k) * (ln_falling_factorial(top, m) - ln_falling_factorial(n, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionBound {
    pub n: u64,
    pub k: u32,
    pub alpha: f64,
    pub variant: UnionVariant,
    /// `ln` of each term, starting at the variant's first `m`.
    pub ln_terms: Vec<f64>,
    /// `ln` of the sum; `-inf` for an empty sum.
    pub ln_value: f64,
}

impl UnionBound {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    pub fn first_m(&self) -> u64 {
        match self.variant {
            UnionVariant::Match => 2,
            UnionVariant::Hamilton => 1,
        }
    }
}

/// Union bound over all sets of size up to `⌊αn⌋` failing to expand.
pub fn union_bound_sum(n: u64, k: u32, alpha: f64, variant: UnionVariant) -> Result<UnionBound> {
    let which = match variant {
        UnionVariant::Match => Which::Alpha1,
        UnionVariant::Hamilton => Which::Alpha2,
    };
    if k < which.min_k() {
        return Err(Error::Domain(format!("{variant:?} needs k >= {}", which.min_k())));
    }
    let threshold = solve_threshold(k, which, DEFAULT_TOLERANCE)?.root;
    if !(alpha > 0.0 && alpha < threshold) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, {threshold:.6}) for k = {k}")));
    }
    let top = ((alpha * n as f64) + 1e-9).floor() as u64;
    let first = match variant {
        UnionVariant::Match => 2,
        UnionVariant::Hamilton => 1,
    };
    let ln_terms: Vec<f64> = (first..=top).map(|m| union_term_ln(n, m, k, variant)).collect();
    let ln_value = log_sum_exp(&ln_terms);
    Ok(UnionBound { n, k, alpha, variant, ln_terms, ln_value })
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return f64::NEG_INFINITY;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}
