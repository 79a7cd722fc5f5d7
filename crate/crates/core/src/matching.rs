//! Maximum matchings in general graphs, the sets `A(G)` and `B(v)`, and the
//! two matching-building processes on uniform attachment graphs.
//!
//! `A(G)` is the set of vertices missed by at least one maximum matching and
//! `B(v)` the set of `w != v` such that some maximum matching misses both `v`
//! and `w`. Both come out of an alternating forest grown from every exposed
//! vertex at once: once the matching is maximum, the outer vertices of that
//! forest are exactly the vertices reachable from an exposed vertex by an
//! even alternating path, which is `A(G)`. `B(v)` is `A(G - v)`.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::neighbor_set;
use crate::model::{ChoiceSequence, RngSpec, UagGraph};
use crate::subset::VertexSubset;

const NIL: u32 = 0;

/// A matching stored as a mate table (`0` = unmatched).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    mate: Vec<u32>,
}

impl Matching {
    pub fn empty(n: u32) -> Self {
        Self { mate: vec![NIL; n as usize + 1] }
    }

    /// Builds a matching from explicit pairs; rejects pairs sharing a vertex.
    pub fn from_edges(n: u32, edges: &[(u32, u32)]) -> Result<Self> {
        let mut m = Self::empty(n);
        for &(u, v) in edges {
            if u == v || u == 0 || v == 0 || u > n || v > n {
                return Err(Error::InvalidParameter(format!("bad matching edge ({u}, {v})")));
            }
            if m.mate[u as usize] != NIL || m.mate[v as usize] != NIL {
                return Err(Error::InvalidParameter(format!("edge ({u}, {v}) overlaps another")));
            }
            m.mate[u as usize] = v;
            m.mate[v as usize] = u;
        }
        Ok(m)
    }

    pub fn n(&self) -> u32 {
        self.mate.len() as u32 - 1
    }

    pub fn mate(&self, v: u32) -> Option<u32> {
        match self.mate[v as usize] {
            NIL => None,
            u => Some(u),
        }
    }

    pub fn size(&self) -> usize {
        self.mate.iter().skip(1).filter(|&&m| m != NIL).count() / 2
    }

    /// Matched pairs `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        (1..self.mate.len() as u32).filter_map(|u| self.mate(u).filter(|&v| u < v).map(|v| (u, v))).collect()
    }

    /// Vertices covered by no matching edge.
    pub fn isolated(&self) -> VertexSubset {
        VertexSubset::from_unsorted((1..self.mate.len() as u32).filter(|&v| self.mate[v as usize] == NIL))
    }

    pub fn isolated_count(&self) -> usize {
        self.mate.iter().skip(1).filter(|&&m| m == NIL).count()
    }

    /// Perfect in the loose sense: at most one vertex left over.
    pub fn is_perfect(&self) -> bool {
        self.isolated_count() <= 1
    }

    /// Every matched pair is an edge of `g` and the mate table is symmetric.
    pub fn is_valid_in(&self, g: &UagGraph) -> bool {
        self.n() == g.n()
            && (1..=g.n()).all(|v| match self.mate(v) {
                None => true,
                Some(u) => self.mate(u) == Some(v) && g.has_edge(u, v),
            })
    }
}

/// Reusable alternating-forest search. Only vertices touched by a search are
/// reset afterwards, so a failed search costs time proportional to the part of
/// the graph it explored. Blossom bases live in a union-find so a contraction
/// only walks the two tree paths it merges.
#[derive(Debug, Clone)]
struct Forest {
    parent: Vec<u32>,
    uf: Vec<u32>,
    outer: Vec<bool>,
    labelled: Vec<bool>,
    root: Vec<u32>,
    lca_mark: Vec<bool>,
    touched: Vec<u32>,
    queue: VecDeque<u32>,
}

/// The forest met an outer-outer edge between two different trees.
#[derive(Debug)]
struct CrossTree;

impl Forest {
    fn new(n: u32) -> Self {
        let len = n as usize + 1;
        Self {
            parent: vec![NIL; len],
            uf: (0..len as u32).collect(),
            outer: vec![false; len],
            labelled: vec![false; len],
            root: vec![NIL; len],
            lca_mark: vec![false; len],
            touched: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    fn grow_to(&mut self, n: u32) {
        let len = n as usize + 1;
        while self.parent.len() < len {
            let v = self.parent.len() as u32;
            self.parent.push(NIL);
            self.uf.push(v);
            self.outer.push(false);
            self.labelled.push(false);
            self.root.push(NIL);
            self.lca_mark.push(false);
        }
    }

    fn touch(&mut self, v: u32) {
        if !self.labelled[v as usize] {
            self.labelled[v as usize] = true;
            self.touched.push(v);
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            let i = v as usize;
            self.parent[i] = NIL;
            self.uf[i] = v;
            self.outer[i] = false;
            self.labelled[i] = false;
            self.root[i] = NIL;
        }
        self.touched.clear();
        self.queue.clear();
    }

    fn add_root(&mut self, r: u32) {
        self.touch(r);
        self.outer[r as usize] = true;
        self.root[r as usize] = r;
        self.queue.push_back(r);
    }

    fn base(&mut self, v: u32) -> u32 {
        let mut r = v;
        while self.uf[r as usize] != r {
            r = self.uf[r as usize];
        }
        let mut x = v;
        while self.uf[x as usize] != r {
            let next = self.uf[x as usize];
            self.uf[x as usize] = r;
            x = next;
        }
        r
    }

    fn lca(&mut self, mate: &[u32], mut a: u32, mut b: u32) -> u32 {
        let mut marked = Vec::new();
        loop {
            a = self.base(a);
            self.lca_mark[a as usize] = true;
            marked.push(a);
            if mate[a as usize] == NIL {
                break;
            }
            a = self.parent[mate[a as usize] as usize];
        }
        let found = loop {
            b = self.base(b);
            if self.lca_mark[b as usize] {
                break b;
            }
            b = self.parent[mate[b as usize] as usize];
        };
        for m in marked {
            self.lca_mark[m as usize] = false;
        }
        found
    }

    /// Walks from `v` up to blossom base `b`, relinking outer vertices through
    /// `child` and turning the inner vertices outer. Bases met on the way are
    /// collected in `merged`; they must not be united with `b` until both
    /// halves of the cycle are walked, or the walk would stop early at a
    /// nested blossom.
    fn mark_path(&mut self, mate: &[u32], mut v: u32, b: u32, mut child: u32, merged: &mut Vec<u32>) {
        while self.base(v) != b {
            let mv = mate[v as usize];
            let bv = self.base(v);
            let bmv = self.base(mv);
            merged.push(bv);
            merged.push(bmv);
            if !self.outer[mv as usize] {
                self.outer[mv as usize] = true;
                self.queue.push_back(mv);
            }
            self.parent[v as usize] = child;
            child = mv;
            v = self.parent[mv as usize];
        }
    }

    fn contract(&mut self, mate: &[u32], v: u32, to: u32) {
        let cur = self.lca(mate, v, to);
        let mut merged = Vec::new();
        self.mark_path(mate, v, cur, to, &mut merged);
        self.mark_path(mate, to, cur, v, &mut merged);
        for r in merged {
            self.uf[r as usize] = cur;
        }
    }

    /// Runs the forest until the queue empties. With `stop_at_exposed`, returns
    /// the first exposed vertex reached through an unlabelled edge (an
    /// augmenting path end, single-root searches only).
    fn run(&mut self, adj: &[Vec<u32>], mate: &[u32], excluded: u32, stop_at_exposed: bool) -> Result<Option<u32>, CrossTree> {
        while let Some(v) = self.queue.pop_front() {
            for &to in &adj[v as usize] {
                if to == excluded {
                    continue;
                }
                if mate[v as usize] == to || self.base(v) == self.base(to) {
                    continue;
                }
                if self.outer[to as usize] {
                    if self.root[to as usize] != self.root[v as usize] {
                        return Err(CrossTree);
                    }
                    self.contract(mate, v, to);
                } else if !self.labelled[to as usize] {
                    self.touch(to);
                    self.parent[to as usize] = v;
                    self.root[to as usize] = self.root[v as usize];
                    let m = mate[to as usize];
                    if m == NIL {
                        if stop_at_exposed {
                            return Ok(Some(to));
                        }
                        // an exposed vertex is a root in multi-root mode
                        return Err(CrossTree);
                    }
                    self.touch(m);
                    self.outer[m as usize] = true;
                    self.root[m as usize] = self.root[v as usize];
                    self.queue.push_back(m);
                }
            }
        }
        Ok(None)
    }

    /// Augmenting search from exposed `root`; flips the path when found.
    fn augment_from(&mut self, adj: &[Vec<u32>], mate: &mut [u32], root: u32, excluded: u32) -> bool {
        debug_assert_eq!(mate[root as usize], NIL);
        self.add_root(root);
        let end = self.run(adj, mate, excluded, true).expect("single-root search stays in one tree");
        let found = if let Some(mut v) = end {
            while v != NIL {
                let pv = self.parent[v as usize];
                let ppv = mate[pv as usize];
                mate[v as usize] = pv;
                mate[pv as usize] = v;
                v = ppv;
            }
            true
        } else {
            false
        };
        self.reset();
        found
    }

    /// Outer vertices of the forest grown from every exposed vertex (other than
    /// `excluded`). Requires `mate` to be maximum in `G - excluded`.
    fn outer_vertices(&mut self, adj: &[Vec<u32>], mate: &[u32], excluded: u32) -> Vec<u32> {
        for v in 1..adj.len() as u32 {
            if v != excluded && mate[v as usize] == NIL {
                self.add_root(v);
            }
        }
        self.run(adj, mate, excluded, false).expect("matching must be maximum before computing A(G)");
        let mut out: Vec<u32> = self.touched.iter().copied().filter(|&v| self.outer[v as usize]).collect();
        out.sort_unstable();
        self.reset();
        out
    }
}

fn greedy_mates(g: &UagGraph) -> Vec<u32> {
    let mut mate = vec![NIL; g.n() as usize + 1];
    for v in g.vertices() {
        if mate[v as usize] != NIL {
            continue;
        }
        if let Some(&u) = g.neighbors(v).iter().find(|&&u| mate[u as usize] == NIL) {
            mate[v as usize] = u;
            mate[u as usize] = v;
        }
    }
    mate
}

/// Maximum matching by Edmonds' blossom contraction, seeded greedily.
pub fn maximum_matching(g: &UagGraph) -> Matching {
    let mut mate = greedy_mates(g);
    let mut forest = Forest::new(g.n());
    for v in g.vertices() {
        if mate[v as usize] == NIL {
            forest.augment_from(g.adjacency(), &mut mate, v, NIL);
        }
    }
    Matching { mate }
}

/// Maximum matching is perfect in the loose sense (isolates at most one vertex).
pub fn has_perfect_matching(g: &UagGraph) -> bool {
    maximum_matching(g).is_perfect()
}

/// Maximum matching isolates no vertex.
pub fn has_strict_perfect_matching(g: &UagGraph) -> bool {
    maximum_matching(g).isolated_count() == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GallaiEdmondsReport {
    /// Vertices missed by at least one maximum matching.
    pub a: VertexSubset,
    /// `B(v)` for every `v` in `A`.
    pub b: BTreeMap<u32, VertexSubset>,
    pub max_matching_size: usize,
}

/// `A(G)` given a maximum matching of `g`.
pub fn a_set(g: &UagGraph, matching: &Matching) -> VertexSubset {
    let mut forest = Forest::new(g.n());
    VertexSubset::from_unsorted(forest.outer_vertices(g.adjacency(), &matching.mate, NIL))
}

/// `B(v)` given a maximum matching of `g` and `v ∈ A(G)`.
pub fn b_set(g: &UagGraph, matching: &Matching, v: u32) -> Result<VertexSubset> {
    let mut forest = Forest::new(g.n());
    let mut mate = matching.mate.clone();
    b_set_with(g.adjacency(), &mut mate, &mut forest, v).map(VertexSubset::from_unsorted)
}

/// Rewrites `mate` into a maximum matching that misses `v`, then returns
/// `A(G - v)`. Fails if `v ∉ A(G)`.
fn b_set_with(adj: &[Vec<u32>], mate: &mut [u32], forest: &mut Forest, v: u32) -> Result<Vec<u32>> {
    let u = mate[v as usize];
    if u != NIL {
        mate[v as usize] = NIL;
        mate[u as usize] = NIL;
        if !forest.augment_from(adj, mate, u, v) {
            // restore and report
            mate[v as usize] = u;
            mate[u as usize] = v;
            return Err(Error::Precondition(format!("vertex {v} is covered by every maximum matching")));
        }
    }
    Ok(forest.outer_vertices(adj, mate, v))
}

/// `A(G)`, every `B(v)` and the maximum matching size.
pub fn exposed_structure(g: &UagGraph) -> GallaiEdmondsReport {
    let m = maximum_matching(g);
    let a = a_set(g, &m);
    let mut forest = Forest::new(g.n());
    let mut b = BTreeMap::new();
    for v in a.iter() {
        let mut mate = m.mate.clone();
        let set = b_set_with(g.adjacency(), &mut mate, &mut forest, v).expect("v is in A(G)");
        b.insert(v, VertexSubset::from_unsorted(set));
    }
    GallaiEdmondsReport { a, b, max_matching_size: m.size() }
}

/// Checks `|N(B(v))| < |B(v)|` for every `v ∈ A(G)`.
///
/// Only meaningful when the graph has no perfect matching in the loose sense
/// (a maximum matching isolates at least two vertices); otherwise an error.
pub fn check_b_contraction(g: &UagGraph) -> Result<bool> {
    let report = exposed_structure(g);
    let isolated = g.n() as usize - 2 * report.max_matching_size;
    if isolated <= 1 {
        return Err(Error::Precondition(format!("graph has a perfect matching ({isolated} vertex isolated)")));
    }
    Ok(report.b.values().all(|bv| neighbor_set(g, bv.as_slice()).len() < bv.len()))
}

/// Graph plus a maximum matching, extended one vertex at a time.
#[derive(Debug, Clone)]
pub struct IncrementalMatcher {
    graph: UagGraph,
    mate: Vec<u32>,
    forest: Forest,
}

impl IncrementalMatcher {
    pub fn new(graph: UagGraph) -> Self {
        let m = maximum_matching(&graph);
        let forest = Forest::new(graph.n());
        Self { graph, mate: m.mate, forest }
    }

    pub fn graph(&self) -> &UagGraph {
        &self.graph
    }

    pub fn matching(&self) -> Matching {
        Matching { mate: self.mate.clone() }
    }

    pub fn isolated_count(&self) -> usize {
        self.mate.iter().skip(1).filter(|&&m| m == NIL).count()
    }

    /// Adds vertex `n + 1` joined to `choices` and repairs the matching with a
    /// single augmenting search from the new vertex. Returns whether the
    /// matching grew.
    pub fn add_vertex(&mut self, choices: &[u32]) -> Result<bool> {
        let v = self.graph.push_vertex(choices)?;
        self.mate.push(NIL);
        self.forest.grow_to(v);
        Ok(self.forest.augment_from(self.graph.adjacency(), &mut self.mate, v, NIL))
    }

    /// `A(G)` for the current graph.
    pub fn a_set(&mut self) -> Vec<u32> {
        self.forest.outer_vertices(self.graph.adjacency(), &self.mate, NIL)
    }

    pub fn into_parts(self) -> (UagGraph, Matching) {
        (self.graph, Matching { mate: self.mate })
    }
}

/// Record of one vertex-by-vertex exposure run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchingTrajectory {
    /// `⌊√n⌋`
    pub t0: u32,
    /// `kappa[t - 1]` = vertices isolated by a maximum matching of `G_t`, `t = 1..=n`.
    pub kappa: Vec<u32>,
    /// `xi[t - 1]` = 1 iff `κ_{t-1} != 0` and `κ_t = κ_{t-1} + 1` (always 0 at `t = 1`).
    pub xi: Vec<u8>,
    pub choices: ChoiceSequence,
    pub final_matching: Matching,
}

impl MatchingTrajectory {
    pub fn n(&self) -> u32 {
        self.kappa.len() as u32
    }

    pub fn final_kappa(&self) -> u32 {
        *self.kappa.last().expect("n >= 1")
    }

    /// `κ_t` with 1-based `t`.
    pub fn kappa_at(&self, t: u32) -> u32 {
        self.kappa[t as usize - 1]
    }

    /// Counts over `t0 <= t < n` with `κ_t != 0`: (steps, up-steps).
    pub fn conditional_up_steps(&self) -> (u64, u64) {
        let mut steps = 0;
        let mut ups = 0;
        for t in self.t0.max(1)..self.n() {
            if self.kappa_at(t) != 0 {
                steps += 1;
                ups += u64::from(self.kappa_at(t + 1) == self.kappa_at(t) + 1);
            }
        }
        (steps, ups)
    }
}

pub fn isqrt(n: u32) -> u32 {
    let mut r = (f64::from(n)).sqrt() as u32;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Reveals vertices `2..=n` of `G_{n,k}` one at a time, keeping a maximum
/// matching and the series `κ_t`.
pub fn run_incremental_process(n: u32, k: u32, rng: &RngSpec) -> Result<MatchingTrajectory> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("n and k must be positive".into()));
    }
    let mut rng = rng.rng();
    let mut matcher = IncrementalMatcher::new(UagGraph::empty(1));
    let mut kappa = Vec::with_capacity(n as usize);
    let mut xi = Vec::with_capacity(n as usize);
    let mut entries = Vec::with_capacity(k as usize * (n as usize - 1));
    kappa.push(1u32);
    xi.push(0u8);
    let mut block = Vec::with_capacity(k as usize);
    for t in 1..n {
        block.clear();
        for _ in 0..k {
            block.push(rng.random_range(1..=t));
        }
        entries.extend_from_slice(&block);
        let improved = matcher.add_vertex(&block)?;
        let prev = *kappa.last().expect("nonempty");
        let next = if improved { prev - 1 } else { prev + 1 };
        kappa.push(next);
        xi.push(u8::from(prev != 0 && !improved));
    }
    let (_, final_matching) = matcher.into_parts();
    Ok(MatchingTrajectory {
        t0: isqrt(n),
        kappa,
        xi,
        choices: ChoiceSequence::from_raw(n, k, entries),
        final_matching,
    })
}

/// One exposure of the fresh-choice augmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureStep {
    pub vertex: u32,
    pub choices: Vec<u32>,
    /// Some choice fell in `B(vertex)` of the graph before the exposure.
    pub hit_b: bool,
    pub improved: bool,
    pub matching_size: usize,
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    pub graph: UagGraph,
    pub matching: Matching,
    pub steps: Vec<ExposureStep>,
}

/// Adds `k` fresh uniform choices to vertices of `g`, always exposing the
/// largest not-yet-exposed vertex of the current `A(G)`, until the matching
/// is perfect (loose sense) or every vertex of `A(G)` has been exposed.
pub fn augment_with_fresh_choices(g: &UagGraph, k: u32, rng: &RngSpec) -> Result<Augmentation> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let mut rng = rng.rng();
    let mut graph = g.clone();
    let mut mate = maximum_matching(&graph).mate;
    let mut forest = Forest::new(graph.n());
    let mut exposed = vec![false; graph.n() as usize + 1];
    let mut steps = Vec::new();
    loop {
        let isolated = mate.iter().skip(1).filter(|&&m| m == NIL).count();
        if isolated <= 1 {
            break;
        }
        let a = forest.outer_vertices(graph.adjacency(), &mate, NIL);
        let Some(&w) = a.iter().rev().find(|&&v| !exposed[v as usize]) else {
            break;
        };
        exposed[w as usize] = true;
        // a maximum matching missing w, and B(w) in the graph before exposure
        let b = b_set_with(graph.adjacency(), &mut mate, &mut forest, w)?;
        let choices: Vec<u32> = (0..k).filter(|_| w > 1).map(|_| rng.random_range(1..w)).collect();
        let hit_b = choices.iter().any(|c| b.binary_search(c).is_ok());
        for &c in &choices {
            graph.add_edge(w, c);
        }
        let improved = forest.augment_from(graph.adjacency(), &mut mate, w, NIL);
        let size = mate.iter().skip(1).filter(|&&m| m != NIL).count() / 2;
        steps.push(ExposureStep { vertex: w, choices, hit_b, improved, matching_size: size });
    }
    Ok(Augmentation { graph, matching: Matching { mate }, steps })
}

/// Two-stage construction: `G_{n,k1}` grown vertex by vertex, then `k2`
/// fresh choices per exposed vertex of `A`.
#[derive(Debug, Clone)]
pub struct TwoStageOutcome {
    pub first: MatchingTrajectory,
    pub augmentation: Augmentation,
}

impl TwoStageOutcome {
    pub fn perfect(&self) -> bool {
        self.augmentation.matching.is_perfect()
    }
}

pub fn run_two_stage(n: u32, k1: u32, k2: u32, rng: &RngSpec) -> Result<TwoStageOutcome> {
    let first = run_incremental_process(n, k1, rng)?;
    let g = crate::model::build_graph(&first.choices);
    let augmentation = augment_with_fresh_choices(&g, k2, &rng.derive(1))?;
    Ok(TwoStageOutcome { first, augmentation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_graph, sample_choice_sequence};

    fn g(n: u32, edges: &[(u32, u32)]) -> UagGraph {
        UagGraph::from_edges(n, edges).unwrap()
    }

    fn s(v: &[u32]) -> VertexSubset {
        VertexSubset::new(v.to_vec()).unwrap()
    }

    #[test]
    fn small_matchings() {
        let e = g(2, &[(1, 2)]);
        let m = maximum_matching(&e);
        assert_eq!(m.edges(), vec![(1, 2)]);
        assert!(m.isolated().is_empty());
        let p3 = g(3, &[(1, 2), (2, 3)]);
        let m = maximum_matching(&p3);
        assert_eq!(m.size(), 1);
        assert_eq!(m.isolated_count(), 1);
        assert!(has_perfect_matching(&p3));
        assert!(!has_strict_perfect_matching(&p3));
        assert!(!has_perfect_matching(&g(4, &[(1, 2), (1, 3), (1, 4)])));
    }

    #[test]
    fn blossom_needed() {
        // triangle 1-2-3 with pendant 4 on 3 and 5 on 1: greedy can get stuck
        let gr = g(6, &[(1, 2), (2, 3), (1, 3), (3, 4), (1, 5), (5, 6)]);
        let m = maximum_matching(&gr);
        assert_eq!(m.size(), 3);
        assert!(m.is_valid_in(&gr));
    }

    #[test]
    fn structure_examples() {
        let star = g(4, &[(1, 2), (1, 3), (1, 4)]);
        let rep = exposed_structure(&star);
        assert_eq!(rep.a, s(&[2, 3, 4]));
        assert_eq!(rep.b[&2], s(&[3, 4]));
        assert!(exposed_structure(&g(2, &[(1, 2)])).a.is_empty());
        // P3: the two maximum matchings each cover one end, so B(1) is empty
        let p3 = exposed_structure(&g(3, &[(1, 2), (2, 3)]));
        assert_eq!(p3.a, s(&[1, 3]));
        assert!(p3.b[&1].is_empty());
    }

    #[test]
    fn b_contraction() {
        let star = g(4, &[(1, 2), (1, 3), (1, 4)]);
        assert!(check_b_contraction(&star).unwrap());
        assert!(matches!(check_b_contraction(&g(2, &[(1, 2)])), Err(Error::Precondition(_))));
        assert!(check_b_contraction(&g(3, &[(1, 2), (2, 3)])).is_err());
    }

    #[test]
    fn b_set_rejects_covered_vertex() {
        let star = g(4, &[(1, 2), (1, 3), (1, 4)]);
        let m = maximum_matching(&star);
        assert!(b_set(&star, &m, 1).is_err());
    }

    #[test]
    fn incremental_matches_from_scratch() {
        for seed in 0..20 {
            let z = sample_choice_sequence(60, 2, &RngSpec::new(seed, 0)).unwrap();
            let mut inc = IncrementalMatcher::new(UagGraph::empty(1));
            for (_, block) in z.blocks() {
                inc.add_vertex(block).unwrap();
            }
            let full = maximum_matching(&build_graph(&z));
            assert_eq!(inc.matching().size(), full.size());
            assert!(inc.matching().is_valid_in(&build_graph(&z)));
        }
    }

    #[test]
    fn trajectory_invariants() {
        let tr = run_incremental_process(300, 3, &RngSpec::new(1, 2)).unwrap();
        assert_eq!(tr.kappa.len(), 300);
        assert_eq!(tr.t0, 17);
        assert!(tr.kappa.windows(2).all(|w| w[0].abs_diff(w[1]) == 1));
        let g = build_graph(&tr.choices);
        assert!(tr.final_matching.is_valid_in(&g));
        assert_eq!(tr.final_kappa() as usize, tr.final_matching.isolated_count());
    }

    #[test]
    fn already_perfect_needs_no_exposure() {
        let e = g(4, &[(1, 2), (3, 4), (2, 3)]);
        let out = augment_with_fresh_choices(&e, 1, &RngSpec::new(0, 0)).unwrap();
        assert!(out.steps.is_empty());
        assert!(out.matching.is_perfect());
    }

    #[test]
    fn isqrt_values() {
        assert_eq!(isqrt(2000), 44);
        assert_eq!(isqrt(1), 1);
        assert_eq!(isqrt(16), 4);
        assert_eq!(isqrt(15), 3);
    }
}
