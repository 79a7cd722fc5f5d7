//! Uniform attachment graphs and the choice sequences that define them.
//!
//! Vertices are labelled `1..=n`. Vertex `i >= 2` owns a block of `k`
//! choices, each in `[1, i-1]`; vertex 1 owns no block. The graph keeps only
//! the simple undirected structure: repeated choices and orientations are
//! dropped when the graph is built.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on the number of objects an exhaustive enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

/// Seed plus stream index. Each `(seed, stream)` pair drives its own ChaCha
/// stream, so trial `i` is reproducible no matter which thread runs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Independent spec for a sub-task (a later stage of the same trial).
    /// Mixes `tag` into the seed and keeps the stream.
    pub fn derive(&self, tag: u64) -> Self {
        let mut z = self.seed ^ tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        Self { seed: z ^ (z >> 31), stream: self.stream }
    }
}

/// The raw randomness behind a uniform attachment graph: `k` choices for each
/// vertex `2..=n`, stored block after block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChoiceSequence {
    n: u32,
    k: u32,
    entries: Vec<u32>,
}

impl ChoiceSequence {
    /// Builds a sequence from its flat entry list (block of vertex 2 first).
    pub fn new(n: u32, k: u32, entries: Vec<u32>) -> Result<Self> {
        check_nk(n, k)?;
        let expected = k as usize * (n as usize - 1);
        if entries.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} entries for n = {n}, k = {k}, got {}",
                entries.len()
            )));
        }
        let seq = Self { n, k, entries };
        for i in 2..=n {
            for &z in seq.block(i) {
                if z == 0 || z >= i {
                    return Err(Error::ChoiceOutOfRange { vertex: i, value: z, max: i - 1 });
                }
            }
        }
        Ok(seq)
    }

    /// Builds a sequence from one block per vertex `2..=n`.
    pub fn from_blocks<B: AsRef<[u32]>>(k: u32, blocks: &[B]) -> Result<Self> {
        let n = blocks.len() as u32 + 1;
        let mut entries = Vec::with_capacity(blocks.len() * k as usize);
        for (idx, b) in blocks.iter().enumerate() {
            let b = b.as_ref();
            if b.len() != k as usize {
                return Err(Error::InvalidParameter(format!(
                    "block of vertex {} has {} entries, expected {k}",
                    idx + 2,
                    b.len()
                )));
            }
            entries.extend_from_slice(b);
        }
        Self::new(n, k, entries)
    }

    pub(crate) fn from_raw(n: u32, k: u32, entries: Vec<u32>) -> Self {
        debug_assert_eq!(entries.len(), k as usize * (n as usize - 1));
        Self { n, k, entries }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Choices of vertex `i`, `2 <= i <= n`.
    pub fn block(&self, i: u32) -> &[u32] {
        assert!(i >= 2 && i <= self.n, "vertex {i} has no block");
        let k = self.k as usize;
        let start = (i as usize - 2) * k;
        &self.entries[start..start + k]
    }

    pub fn blocks(&self) -> impl Iterator<Item = (u32, &[u32])> + '_ {
        (2..=self.n).map(move |i| (i, self.block(i)))
    }

    /// The prefix describing the first `t` vertices.
    pub fn prefix(&self, t: u32) -> ChoiceSequence {
        assert!(t >= 1 && t <= self.n);
        let len = (t as usize - 1) * self.k as usize;
        Self::from_raw(t, self.k, self.entries[..len].to_vec())
    }

    /// Line format: header `n k`, then one line of `k` integers per vertex `2..=n`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.k);
        for (_, block) in self.blocks() {
            let mut first = true;
            for z in block {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{z}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let nums = parse_ints(header, hline + 1)?;
        if nums.len() != 2 {
            return Err(Error::Parse { line: hline + 1, msg: "header must be `n k`".into() });
        }
        let (n, k) = (nums[0], nums[1]);
        check_nk(n, k)?;
        let mut entries = Vec::with_capacity(k as usize * (n as usize - 1));
        let mut rows = 0u32;
        for (lno, line) in lines {
            let vals = parse_ints(line, lno + 1)?;
            if vals.len() != k as usize {
                return Err(Error::Parse { line: lno + 1, msg: format!("expected {k} choices") });
            }
            entries.extend(vals);
            rows += 1;
        }
        if rows != n - 1 {
            return Err(Error::Parse { line: 0, msg: format!("expected {} blocks, found {rows}", n - 1) });
        }
        Self::new(n, k, entries)
    }
}

fn parse_ints(line: &str, lno: usize) -> Result<Vec<u32>> {
    line.split_whitespace()
        .map(|tok| tok.parse::<u32>().map_err(|e| Error::Parse { line: lno, msg: format!("{tok:?}: {e}") }))
        .collect()
}

fn check_nk(n: u32, k: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok(())
}

/// Draws `k` independent uniform choices from `[1, i-1]` for every vertex `i`.
pub fn sample_choice_sequence(n: u32, k: u32, rng: &RngSpec) -> Result<ChoiceSequence> {
    check_nk(n, k)?;
    let mut rng = rng.rng();
    Ok(sample_with(n, k, &mut rng))
}

pub(crate) fn sample_with<R: Rng + ?Sized>(n: u32, k: u32, rng: &mut R) -> ChoiceSequence {
    let mut entries = Vec::with_capacity(k as usize * (n as usize).saturating_sub(1));
    for i in 2..=n {
        for _ in 0..k {
            entries.push(rng.random_range(1..i));
        }
    }
    ChoiceSequence::from_raw(n, k, entries)
}

/// Simple undirected graph on `1..=n`.
///
/// Adjacency lists are indexed by vertex label; slot 0 is unused.
#[derive(Debug, Clone)]
pub struct UagGraph {
    n: u32,
    adj: Vec<Vec<u32>>,
    edge_count: usize,
    provenance: Option<Arc<ChoiceSequence>>,
}

impl PartialEq for UagGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edge_list() == other.edge_list()
    }
}

impl Eq for UagGraph {}

impl UagGraph {
    /// Graph on `1..=n` with no edges.
    pub fn empty(n: u32) -> Self {
        Self { n, adj: vec![Vec::new(); n as usize + 1], edge_count: 0, provenance: None }
    }

    /// Graph from an explicit edge list; loops and repeated edges are dropped.
    pub fn from_edges(n: u32, edges: &[(u32, u32)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(Error::InvalidParameter(format!("edge ({u}, {v}) outside [1, {n}]")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn vertices(&self) -> std::ops::RangeInclusive<u32> {
        1..=self.n
    }

    pub fn provenance(&self) -> Option<&ChoiceSequence> {
        self.provenance.as_deref()
    }

    pub(crate) fn adjacency(&self) -> &[Vec<u32>] {
        &self.adj
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        if u == v || u == 0 || v == 0 || u > self.n || v > self.n {
            return false;
        }
        let (a, b) = if self.adj[u as usize].len() <= self.adj[v as usize].len() { (u, v) } else { (v, u) };
        self.adj[a as usize].contains(&b)
    }

    /// Inserts `{u, v}` unless it is a loop or already present. Returns whether
    /// the edge was new. Any provenance link is dropped since the graph no
    /// longer matches its sequence.
    pub fn add_edge(&mut self, u: u32, v: u32) -> bool {
        if u == v || self.has_edge(u, v) {
            return false;
        }
        self.adj[u as usize].push(v);
        self.adj[v as usize].push(u);
        self.edge_count += 1;
        self.provenance = None;
        true
    }

    /// Appends vertex `n + 1` joined to the distinct members of `choices`.
    pub(crate) fn push_vertex(&mut self, choices: &[u32]) -> Result<u32> {
        let t = self.n;
        for &c in choices {
            if c == 0 || c > t {
                return Err(Error::ChoiceOutOfRange { vertex: t + 1, value: c, max: t });
            }
        }
        self.n += 1;
        self.adj.push(Vec::with_capacity(choices.len()));
        let v = self.n;
        for &c in choices {
            if !self.adj[v as usize].contains(&c) {
                self.adj[v as usize].push(c);
                self.adj[c as usize].push(v);
                self.edge_count += 1;
            }
        }
        self.provenance = None;
        Ok(v)
    }

    /// Sorted `(u, v)` pairs with `u < v`.
    pub fn edge_list(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = self
            .vertices()
            .flat_map(|u| self.adj[u as usize].iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Neighbour sets as bitmasks; bit `v - 1` stands for vertex `v`.
    pub fn adjacency_masks(&self) -> Result<Vec<u64>> {
        if self.n > 64 {
            return Err(Error::InvalidParameter(format!("bitmask view needs n <= 64, got {}", self.n)));
        }
        Ok(self
            .vertices()
            .map(|v| self.adj[v as usize].iter().fold(0u64, |m, &u| m | 1u64 << (u - 1)))
            .collect())
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut seen = vec![false; self.n as usize + 1];
        let mut stack = vec![1u32];
        seen[1] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.adj[v as usize] {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Edge-list format: `n` on the first line, then `u v` with `u < v`.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (u, v) in self.edge_list() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_edge_list_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let n = header
            .trim()
            .parse::<u32>()
            .map_err(|e| Error::Parse { line: hline + 1, msg: e.to_string() })?;
        let mut edges = Vec::new();
        for (lno, line) in lines {
            let vals = parse_ints(line, lno + 1)?;
            if vals.len() != 2 {
                return Err(Error::Parse { line: lno + 1, msg: "expected `u v`".into() });
            }
            edges.push((vals[0], vals[1]));
        }
        Self::from_edges(n, &edges)
    }
}

/// The graph `Γ(z)`: for `u < v`, `{u, v}` is an edge iff `u` is in block `v`.
pub fn build_graph(z: &ChoiceSequence) -> UagGraph {
    let mut g = UagGraph::empty(1);
    for (_, block) in z.blocks() {
        g.push_vertex(block).expect("choice sequence entries are in range by construction");
    }
    g.provenance = Some(Arc::new(z.clone()));
    g
}

/// Returns `g` extended by vertex `t + 1` attached to `choices`; `g` itself is untouched.
pub fn expose_vertex(g: &UagGraph, choices: &[u32]) -> Result<UagGraph> {
    let mut next = g.clone();
    next.push_vertex(choices)?;
    Ok(next)
}

/// `(n-1)!^k`, or `None` on overflow.
pub fn sequence_count(n: u32, k: u32) -> Option<u128> {
    let mut fact: u128 = 1;
    for i in 2..n as u128 {
        fact = fact.checked_mul(i)?;
    }
    let mut total: u128 = 1;
    for _ in 0..k {
        total = total.checked_mul(fact)?;
    }
    Some(total)
}

/// Every legal choice sequence for `(n, k)` exactly once, in odometer order.
pub fn enumerate_choice_sequences(n: u32, k: u32) -> Result<ChoiceSequences> {
    enumerate_choice_sequences_capped(n, k, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_choice_sequences_capped(n: u32, k: u32, cap: u128) -> Result<ChoiceSequences> {
    check_nk(n, k)?;
    let required = sequence_count(n, k).unwrap_or(u128::MAX);
    if required > cap {
        return Err(Error::EnumerationCap { required, cap });
    }
    Ok(ChoiceSequences::new(n, k))
}

/// Odometer over all choice sequences. The last entry varies fastest.
#[derive(Debug, Clone)]
pub struct ChoiceSequences {
    n: u32,
    k: u32,
    limits: Vec<u32>,
    current: Option<Vec<u32>>,
}

impl ChoiceSequences {
    fn new(n: u32, k: u32) -> Self {
        let limits: Vec<u32> = (2..=n).flat_map(|i| std::iter::repeat_n(i - 1, k as usize)).collect();
        let current = Some(vec![1; limits.len()]);
        Self { n, k, limits, current }
    }
}

impl Iterator for ChoiceSequences {
    type Item = ChoiceSequence;

    fn next(&mut self) -> Option<ChoiceSequence> {
        let cur = self.current.as_mut()?;
        let out = ChoiceSequence::from_raw(self.n, self.k, cur.clone());
        let mut pos = cur.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            if cur[pos] < self.limits[pos] {
                cur[pos] += 1;
                break;
            }
            cur[pos] = 1;
        }
        Some(out)
    }
}
