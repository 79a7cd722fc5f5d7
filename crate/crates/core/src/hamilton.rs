//! Pósa rotations, END sets, path growth and Hamilton cycles.
//!
//! Paths are vertex sequences `x_0 … x_t`; `x_0` is the anchor and never
//! moves, `x_t` is the free end. Lengths count vertices.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::neighbor_set;
use crate::matching::isqrt;
use crate::model::{sample_with, ChoiceSequence, RngSpec, UagGraph};
use crate::subset::VertexSubset;

const NONE: u32 = u32::MAX;

/// Largest `n` accepted by [`exact_hamiltonicity`].
pub const EXACT_HAMILTON_MAX_N: u32 = 18;
/// Default stages: a 10-choice base graph plus three 1-choice boosts.
pub const DEFAULT_STAGES: [u32; 4] = [10, 1, 1, 1];
/// Distinct paths explored by [`ClosureMode::Exact`] before giving up.
pub const DEFAULT_EXACT_STATE_CAP: usize = 1_000_000;
/// Distinct paths [`ClosureMode::Auto`] explores before falling back.
pub const AUTO_EXACT_STATE_CAP: usize = 100_000;

/// How [`end_set`] closes under rotations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosureMode {
    /// Search over distinct paths. Exact, exponential in the worst case.
    Exact,
    /// Search over endpoints, rotating one witness path per endpoint.
    /// Polynomial; may miss endpoints reachable only through another path
    /// with the same free end.
    EndpointKeyed,
    /// Exact while the path search stays under [`AUTO_EXACT_STATE_CAP`],
    /// endpoint-keyed beyond. [`RotationState::mode`] tells which ran.
    #[default]
    Auto,
}

/// Checks that `path` is a simple path of `g`.
pub fn is_path(g: &UagGraph, path: &[u32]) -> bool {
    let mut seen = vec![false; g.n() as usize + 1];
    for &v in path {
        if v == 0 || v > g.n() || seen[v as usize] {
            return false;
        }
        seen[v as usize] = true;
    }
    path.windows(2).all(|w| g.has_edge(w[0], w[1]))
}

fn check_path(g: &UagGraph, path: &[u32]) -> Result<()> {
    if path.is_empty() {
        return Err(Error::InvalidParameter("path is empty".into()));
    }
    if !is_path(g, path) {
        return Err(Error::InvalidParameter("vertex sequence is not a path of the graph".into()));
    }
    Ok(())
}

/// One rotation: with `pivot = x_i` adjacent to `x_t`, returns
/// `x_0 … x_i x_t x_{t-1} … x_{i+1}`.
pub fn rotate(g: &UagGraph, path: &[u32], pivot: u32) -> Result<Vec<u32>> {
    let t = path.len().checked_sub(1).ok_or_else(|| Error::InvalidParameter("path is empty".into()))?;
    let i = path
        .iter()
        .position(|&v| v == pivot)
        .ok_or_else(|| Error::InvalidParameter(format!("pivot {pivot} is not on the path")))?;
    if i + 1 >= t {
        return Err(Error::InvalidParameter(format!("pivot {pivot} is the free end or next to it")));
    }
    if !g.has_edge(pivot, path[t]) {
        return Err(Error::InvalidParameter(format!("pivot {pivot} is not adjacent to the free end {}", path[t])));
    }
    let mut out = path.to_vec();
    out[i + 1..].reverse();
    Ok(out)
}

fn replay(root: &[u32], nodes: &[(u32, u32)], node: u32) -> Vec<u32> {
    let mut pivots = Vec::new();
    let mut cur = node;
    while cur != 0 {
        let (parent, pivot) = nodes[cur as usize];
        pivots.push(pivot);
        cur = parent;
    }
    let mut path = root.to_vec();
    for &p in pivots.iter().rev() {
        let i = path.iter().position(|&v| v == p).expect("pivot lies on the path");
        path[i + 1..].reverse();
    }
    path
}

/// A path, its anchor and `END(path, anchor)`, with enough bookkeeping to
/// rebuild a witness path for every member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationState {
    path: Vec<u32>,
    end_set: VertexSubset,
    /// Rotation tree: node `i > 0` is its parent's path rotated at `pivot`.
    nodes: Vec<(u32, u32)>,
    witness_node: BTreeMap<u32, u32>,
    mode: ClosureMode,
}

impl RotationState {
    pub fn path(&self) -> &[u32] {
        &self.path
    }

    pub fn anchor(&self) -> u32 {
        self.path[0]
    }

    pub fn free_end(&self) -> u32 {
        *self.path.last().expect("nonempty path")
    }

    pub fn end_set(&self) -> &VertexSubset {
        &self.end_set
    }

    pub fn mode(&self) -> ClosureMode {
        self.mode
    }

    /// Number of rotation-tree nodes (distinct paths in exact mode).
    pub fn explored(&self) -> usize {
        self.nodes.len()
    }

    /// A path from the anchor to `v` over the same vertex set, if `v ∈ END`.
    pub fn witness(&self, v: u32) -> Option<Vec<u32>> {
        self.witness_node.get(&v).map(|&node| replay(&self.path, &self.nodes, node))
    }
}

/// Lazy endpoint-keyed rotation closure. Endpoints are numbered in discovery
/// order and the search can be resumed after the graph gains vertices that
/// are off the path (such vertices never take part in a rotation).
#[derive(Debug, Clone, Default)]
pub(crate) struct EndSearch {
    root: Vec<u32>,
    nodes: Vec<(u32, u32)>,
    node_end: Vec<u32>,
    node_of: Vec<u32>,
    queue: VecDeque<(u32, Vec<u32>)>,
    pos: Vec<u32>,
}

impl EndSearch {
    fn ensure_size(&mut self, n: u32) {
        let len = n as usize + 1;
        if self.node_of.len() < len {
            self.node_of.resize(len, NONE);
            self.pos.resize(len, NONE);
        }
    }

    pub(crate) fn reset(&mut self, path: Vec<u32>, n: u32) {
        for &e in &self.node_end {
            self.node_of[e as usize] = NONE;
        }
        self.ensure_size(n);
        self.nodes.clear();
        self.node_end.clear();
        self.queue.clear();
        let end = *path.last().expect("nonempty path");
        self.nodes.push((NONE, NONE));
        self.node_end.push(end);
        self.node_of[end as usize] = 0;
        self.queue.push_back((0, path.clone()));
        self.root = path;
    }

    pub(crate) fn len(&self) -> usize {
        self.node_end.len()
    }

    pub(crate) fn endpoint(&self, i: usize) -> u32 {
        self.node_end[i]
    }

    fn node(&self, v: u32) -> Option<u32> {
        self.node_of.get(v as usize).copied().filter(|&id| id != NONE)
    }

    /// Rotates one queued path; `false` once the closure is complete.
    pub(crate) fn expand(&mut self, g: &UagGraph) -> bool {
        let Some((node, path)) = self.queue.pop_front() else {
            return false;
        };
        self.ensure_size(g.n());
        let t = path.len() - 1;
        for (i, &v) in path.iter().enumerate() {
            self.pos[v as usize] = i as u32;
        }
        for &x in g.neighbors(path[t]) {
            let i = self.pos[x as usize];
            if i == NONE || i as usize + 1 >= t {
                continue;
            }
            let y = path[i as usize + 1];
            if self.node_of[y as usize] != NONE {
                continue;
            }
            let id = self.nodes.len() as u32;
            self.nodes.push((node, x));
            self.node_end.push(y);
            self.node_of[y as usize] = id;
            let mut next = path.clone();
            next[i as usize + 1..].reverse();
            self.queue.push_back((id, next));
        }
        for &v in &path {
            self.pos[v as usize] = NONE;
        }
        true
    }

    pub(crate) fn complete(&mut self, g: &UagGraph) {
        while self.expand(g) {}
    }

    /// The earliest-discovered member of `targets` in the closure, expanding
    /// only as far as needed. Agrees with what a completed search would pick.
    pub(crate) fn find_any(&mut self, g: &UagGraph, targets: &[u32]) -> Option<u32> {
        loop {
            if let Some((_, c)) = targets.iter().filter_map(|&c| self.node(c).map(|id| (id, c))).min() {
                return Some(c);
            }
            if !self.expand(g) {
                return None;
            }
        }
    }

    pub(crate) fn witness(&self, v: u32) -> Option<Vec<u32>> {
        self.node(v).map(|id| replay(&self.root, &self.nodes, id))
    }

    fn into_state(self) -> RotationState {
        let witness_node = self.node_end.iter().enumerate().map(|(i, &e)| (e, i as u32)).collect();
        RotationState {
            end_set: VertexSubset::from_unsorted(self.node_end.iter().copied()),
            path: self.root,
            nodes: self.nodes,
            witness_node,
            mode: ClosureMode::EndpointKeyed,
        }
    }
}

/// `END(path, path[0])`: free ends of all paths reachable by rotations.
pub fn end_set(g: &UagGraph, path: &[u32], mode: ClosureMode) -> Result<RotationState> {
    end_set_capped(g, path, mode, DEFAULT_EXACT_STATE_CAP)
}

/// [`end_set`] with an explicit state cap for the exact search.
pub fn end_set_capped(g: &UagGraph, path: &[u32], mode: ClosureMode, cap: usize) -> Result<RotationState> {
    check_path(g, path)?;
    let keyed = || {
        let mut search = EndSearch::default();
        search.reset(path.to_vec(), g.n());
        search.complete(g);
        search.into_state()
    };
    match mode {
        ClosureMode::EndpointKeyed => Ok(keyed()),
        ClosureMode::Exact => exact_closure(g, path, cap),
        ClosureMode::Auto => match exact_closure(g, path, cap.min(AUTO_EXACT_STATE_CAP)) {
            Err(Error::EnumerationCap { .. }) => Ok(keyed()),
            other => other,
        },
    }
}

fn exact_closure(g: &UagGraph, path: &[u32], cap: usize) -> Result<RotationState> {
    let mut seen: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut paths = vec![path.to_vec()];
    let mut nodes = vec![(NONE, NONE)];
    let mut witness_node = BTreeMap::new();
    seen.insert(path.to_vec(), 0);
    witness_node.insert(*path.last().expect("nonempty"), 0u32);
    let mut pos = vec![NONE; g.n() as usize + 1];
    let mut head = 0;
    while head < paths.len() {
        let cur = paths[head].clone();
        let t = cur.len() - 1;
        for (i, &v) in cur.iter().enumerate() {
            pos[v as usize] = i as u32;
        }
        for &x in g.neighbors(cur[t]) {
            let i = pos[x as usize];
            if i == NONE || i as usize + 1 >= t {
                continue;
            }
            let mut next = cur.clone();
            next[i as usize + 1..].reverse();
            if seen.contains_key(&next) {
                continue;
            }
            let id = paths.len() as u32;
            if paths.len() >= cap {
                return Err(Error::EnumerationCap { required: paths.len() as u128 + 1, cap: cap as u128 });
            }
            witness_node.entry(next[t]).or_insert(id);
            seen.insert(next.clone(), id);
            nodes.push((head as u32, x));
            paths.push(next);
        }
        for &v in &cur {
            pos[v as usize] = NONE;
        }
        head += 1;
    }
    Ok(RotationState {
        path: path.to_vec(),
        end_set: VertexSubset::from_unsorted(witness_node.keys().copied()),
        nodes,
        witness_node,
        mode: ClosureMode::Exact,
    })
}

/// `|N(END)| < 2|END|`, the expansion deficit of END for a longest path.
pub fn check_end_expansion(g: &UagGraph, state: &RotationState) -> bool {
    neighbor_set(g, state.end_set.as_slice()).len() < 2 * state.end_set.len()
}

/// A Hamilton cycle as a cyclic vertex order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HamiltonCertificate {
    cycle: Vec<u32>,
}

impl HamiltonCertificate {
    pub fn new(cycle: Vec<u32>) -> Self {
        Self { cycle }
    }

    pub fn cycle(&self) -> &[u32] {
        &self.cycle
    }

    /// Single line of space-separated labels.
    pub fn to_line(&self) -> String {
        self.cycle.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let cycle = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|e| Error::Parse { line: 1, msg: e.to_string() }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cycle })
    }
}

/// `cert` is a permutation of `[n]`, `n >= 3`, with cyclically consecutive
/// vertices adjacent in `g`.
pub fn verify_certificate(g: &UagGraph, cert: &HamiltonCertificate) -> bool {
    let c = &cert.cycle;
    let n = g.n() as usize;
    if n < 3 || c.len() != n {
        return false;
    }
    let mut seen = vec![false; n + 1];
    for &v in c {
        if v == 0 || v as usize > n || seen[v as usize] {
            return false;
        }
        seen[v as usize] = true;
    }
    (0..n).all(|i| g.has_edge(c[i], c[(i + 1) % n]))
}

/// Exact Hamiltonicity by bitmask dynamic programming over subsets.
pub fn exact_hamiltonicity(g: &UagGraph) -> Result<bool> {
    let n = g.n();
    if n > EXACT_HAMILTON_MAX_N {
        return Err(Error::InvalidParameter(format!(
            "exact Hamiltonicity is limited to n <= {EXACT_HAMILTON_MAX_N}, got {n}"
        )));
    }
    if n < 3 {
        return Ok(false);
    }
    let adj: Vec<u32> = g.adjacency_masks()?.iter().map(|&m| m as u32).collect();
    let n = n as usize;
    let full = (1u32 << n) - 1;
    // ends[mask]: vertices where a path from vertex 0 covering `mask` can stop
    let mut ends = vec![0u32; 1 << n];
    ends[1] = 1;
    for mask in (1..=full).step_by(2) {
        let mut e = ends[mask as usize];
        while e != 0 {
            let v = e.trailing_zeros() as usize;
            e &= e - 1;
            let mut next = adj[v] & !mask;
            while next != 0 {
                let u = next.trailing_zeros();
                next &= next - 1;
                ends[(mask | 1 << u) as usize] |= 1 << u;
            }
        }
    }
    Ok(ends[full as usize] & adj[0] != 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoOpReason {
    /// The edge does not touch the anchor.
    NotAnchored,
    /// The far end of the edge is not in END.
    NotInEndSet,
    /// The edge is not in the graph.
    EdgeMissing,
    /// The path is too short to close into a cycle.
    TooShort,
    /// No edge leaves the cycle, so the graph is disconnected.
    Disconnected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CloseOutcome {
    Hamiltonian(HamiltonCertificate),
    Longer(Vec<u32>),
    NoOp(NoOpReason),
}

/// Closes the witness path for the anchor–END edge into a cycle. Returns a
/// certificate if the cycle spans the graph, else a path one vertex longer
/// built from an edge leaving the cycle.
pub fn close_or_extend(g: &UagGraph, state: &RotationState, edge: (u32, u32)) -> CloseOutcome {
    let a = state.anchor();
    let c = match edge {
        (u, v) if u == a => v,
        (u, v) if v == a => u,
        _ => return CloseOutcome::NoOp(NoOpReason::NotAnchored),
    };
    let Some(q) = state.witness(c) else {
        return CloseOutcome::NoOp(NoOpReason::NotInEndSet);
    };
    if !g.has_edge(a, c) {
        return CloseOutcome::NoOp(NoOpReason::EdgeMissing);
    }
    close_path(g, &q)
}

/// `q[0]` and `q[last]` must be adjacent.
fn close_path(g: &UagGraph, q: &[u32]) -> CloseOutcome {
    if q.len() < 3 {
        return CloseOutcome::NoOp(NoOpReason::TooShort);
    }
    if q.len() == g.n() as usize {
        let cert = HamiltonCertificate::new(q.to_vec());
        assert!(verify_certificate(g, &cert), "closed path is not a Hamilton cycle");
        return CloseOutcome::Hamiltonian(cert);
    }
    let mut on = vec![false; g.n() as usize + 1];
    for &v in q {
        on[v as usize] = true;
    }
    for (j, &c) in q.iter().enumerate() {
        if let Some(&d) = g.neighbors(c).iter().find(|&&d| !on[d as usize]) {
            let mut p = Vec::with_capacity(q.len() + 1);
            p.push(d);
            p.extend_from_slice(&q[j..]);
            p.extend_from_slice(&q[..j]);
            debug_assert!(is_path(g, &p));
            return CloseOutcome::Longer(p);
        }
    }
    CloseOutcome::NoOp(NoOpReason::Disconnected)
}

/// Either a Hamilton cycle or the best path found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Progress {
    Hamiltonian(HamiltonCertificate),
    Path(Vec<u32>),
}

impl Progress {
    pub fn len(&self) -> usize {
        match self {
            Progress::Hamiltonian(c) => c.cycle.len(),
            Progress::Path(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn certificate(&self) -> Option<&HamiltonCertificate> {
        match self {
            Progress::Hamiltonian(c) => Some(c),
            Progress::Path(_) => None,
        }
    }
}

/// Extends `path` until neither end can be pushed out by rotations: no END
/// member has an off-path neighbour and no END member closes a cycle.
pub fn saturate_path(g: &UagGraph, path: Vec<u32>) -> Result<Progress> {
    check_path(g, &path)?;
    Ok(saturate(g, path, &mut EndSearch::default()))
}

fn saturate(g: &UagGraph, mut path: Vec<u32>, search: &mut EndSearch) -> Progress {
    let mut on = vec![false; g.n() as usize + 1];
    'grow: loop {
        on.iter_mut().for_each(|b| *b = false);
        for &v in &path {
            on[v as usize] = true;
        }
        for flip in [false, true] {
            let mut oriented = path.clone();
            if flip {
                oriented.reverse();
            }
            let a = oriented[0];
            let closable = oriented.len() >= 3;
            search.reset(oriented, g.n());
            let mut i = 0;
            loop {
                while i < search.len() {
                    let e = search.endpoint(i);
                    i += 1;
                    if let Some(&d) = g.neighbors(e).iter().find(|&&d| !on[d as usize]) {
                        let mut q = search.witness(e).expect("discovered endpoint");
                        q.push(d);
                        path = q;
                        continue 'grow;
                    }
                    if closable && g.has_edge(e, a) {
                        let q = search.witness(e).expect("discovered endpoint");
                        match close_path(g, &q) {
                            CloseOutcome::Hamiltonian(c) => return Progress::Hamiltonian(c),
                            CloseOutcome::Longer(p) => {
                                path = p;
                                continue 'grow;
                            }
                            CloseOutcome::NoOp(_) => {}
                        }
                    }
                }
                if !search.expand(g) {
                    break;
                }
            }
        }
        return Progress::Path(path);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthOptions {
    /// Record the full `|END(P_t, a_t)|` every this many steps.
    pub measure_end_every: Option<u32>,
}

/// Record of one vertex-by-vertex path growth run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathTrajectory {
    /// `⌊√n⌋`
    pub t0: u32,
    /// `lengths[t - 1]`: vertices on the tracked path after step `t`.
    pub lengths: Vec<u32>,
    /// `xi[t - 1]` for `t = 1..n`: vertex `t + 1` chose a member of `END(P_t, a_t)`.
    pub xi: Vec<u8>,
    /// `(t, |END(P_t, a_t)|)` at measured steps.
    pub end_sizes: Vec<(u32, u32)>,
    pub final_path: Vec<u32>,
    pub choices: ChoiceSequence,
}

impl PathTrajectory {
    pub fn n(&self) -> u32 {
        self.lengths.len() as u32
    }

    pub fn final_length(&self) -> u32 {
        *self.lengths.last().expect("n >= 1")
    }

    pub fn final_fraction(&self) -> f64 {
        f64::from(self.final_length()) / f64::from(self.n())
    }

    /// `Σ ξ_t` over `t0 <= t < n`.
    pub fn hits_after_warmup(&self) -> u64 {
        (self.t0.max(1)..self.n()).map(|t| u64::from(self.xi[t as usize - 1])).sum()
    }
}

/// Reveals `G_{n,k}` vertex by vertex and extends a tracked path whenever the
/// new vertex chooses a member of `END(P_t, a_t)`; the anchor stays put.
pub fn grow_longest_path_incremental(n: u32, k: u32, rng: &RngSpec) -> Result<PathTrajectory> {
    grow_longest_path_with(n, k, rng, &GrowthOptions::default()).map(|(t, _)| t)
}

/// [`grow_longest_path_incremental`] with options; also returns the graph.
pub fn grow_longest_path_with(n: u32, k: u32, rng: &RngSpec, opts: &GrowthOptions) -> Result<(PathTrajectory, UagGraph)> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("n and k must be positive".into()));
    }
    if opts.measure_end_every == Some(0) {
        return Err(Error::InvalidParameter("measure_end_every must be positive".into()));
    }
    let mut rng = rng.rng();
    let mut graph = UagGraph::empty(1);
    let mut path = vec![1u32];
    let mut search = EndSearch::default();
    search.reset(path.clone(), n);
    let mut lengths = Vec::with_capacity(n as usize);
    let mut xi = Vec::with_capacity(n as usize);
    let mut end_sizes = Vec::new();
    let mut entries = Vec::with_capacity(k as usize * (n as usize - 1));
    lengths.push(1);
    let mut block = Vec::with_capacity(k as usize);
    for t in 1..n {
        block.clear();
        for _ in 0..k {
            block.push(rng.random_range(1..=t));
        }
        entries.extend_from_slice(&block);
        if opts.measure_end_every.is_some_and(|m| t % m == 0) {
            search.complete(&graph);
            end_sizes.push((t, search.len() as u32));
        }
        let hit = search.find_any(&graph, &block);
        graph.push_vertex(&block)?;
        if let Some(c) = hit {
            let mut q = search.witness(c).expect("hit is in END");
            q.push(t + 1);
            path = q;
            search.reset(path.clone(), n);
        }
        xi.push(u8::from(hit.is_some()));
        lengths.push(path.len() as u32);
    }
    let traj = PathTrajectory {
        t0: isqrt(n),
        lengths,
        xi,
        end_sizes,
        final_path: path,
        choices: ChoiceSequence::from_raw(n, k, entries),
    };
    Ok((traj, graph))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoostReport {
    pub start_length: u32,
    pub end_length: u32,
    pub exposures: u32,
    pub improvements: u32,
}

#[derive(Debug, Clone)]
pub struct BoostOutcome {
    pub graph: UagGraph,
    pub progress: Progress,
    pub report: BoostReport,
}

/// Adds an independent `G_{n,k}` to `g`, exposing vertices lazily.
///
/// Repeatedly takes the largest unexposed endpoint `w` of the current path's
/// END sets (both anchors), re-anchors a witness path at `w` and reveals the
/// `k` choices of `w`. A choice off the path extends it; a choice in
/// `END(Q, w)` closes a cycle that is either Hamiltonian or yields a longer
/// path. After the candidates run out, the choices of every unexposed vertex
/// are added too and the path is saturated once more.
pub fn boost_with_fresh_choices(g: &UagGraph, path: Vec<u32>, k: u32, rng: &RngSpec) -> Result<BoostOutcome> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    check_path(g, &path)?;
    let n = g.n();
    let fresh = sample_with(n, k, &mut rng.rng());
    let mut graph = g.clone();
    let mut exposed = vec![false; n as usize + 1];
    let mut report = BoostReport { start_length: path.len() as u32, ..BoostReport::default() };
    let mut scratch = EndSearch::default();
    let mut from_a = EndSearch::default();
    let mut from_b = EndSearch::default();
    let mut at_w = EndSearch::default();
    let mut on = vec![false; n as usize + 1];
    let mut progress = saturate(&graph, path, &mut scratch);

    while let Progress::Path(path) = &progress {
        from_a.reset(path.clone(), n);
        from_a.complete(&graph);
        let mut reversed = path.clone();
        reversed.reverse();
        from_b.reset(reversed, n);
        from_b.complete(&graph);
        let mut candidates: Vec<u32> =
            (0..from_a.len()).map(|i| from_a.endpoint(i)).chain((0..from_b.len()).map(|i| from_b.endpoint(i))).collect();
        candidates.sort_unstable_by(|x, y| y.cmp(x));
        candidates.dedup();
        on.iter_mut().for_each(|b| *b = false);
        for &v in path {
            on[v as usize] = true;
        }

        let mut next = None;
        for w in candidates {
            if exposed[w as usize] {
                continue;
            }
            exposed[w as usize] = true;
            report.exposures += 1;
            let choices: &[u32] = if w >= 2 { fresh.block(w) } else { &[] };
            for &c in choices {
                graph.add_edge(w, c);
            }
            let mut q = from_a.witness(w).or_else(|| from_b.witness(w)).expect("candidate is an endpoint");
            q.reverse();
            if let Some(&c) = choices.iter().find(|&&c| !on[c as usize]) {
                let mut p = Vec::with_capacity(q.len() + 1);
                p.push(c);
                p.extend_from_slice(&q);
                next = Some(Progress::Path(p));
                break;
            }
            at_w.reset(q, n);
            if let Some(c) = at_w.find_any(&graph, choices) {
                let r = at_w.witness(c).expect("hit is in END");
                match close_path(&graph, &r) {
                    CloseOutcome::Hamiltonian(cert) => {
                        next = Some(Progress::Hamiltonian(cert));
                        break;
                    }
                    CloseOutcome::Longer(p) => {
                        next = Some(Progress::Path(p));
                        break;
                    }
                    CloseOutcome::NoOp(_) => {}
                }
            }
        }
        match next {
            None => break,
            Some(Progress::Path(p)) => {
                report.improvements += 1;
                progress = saturate(&graph, p, &mut scratch);
            }
            Some(done) => {
                report.improvements += 1;
                progress = done;
            }
        }
    }

    for w in 2..=n {
        if !exposed[w as usize] {
            for &c in fresh.block(w) {
                graph.add_edge(w, c);
            }
        }
    }
    if let Progress::Path(p) = progress {
        progress = saturate(&graph, p, &mut scratch);
    }
    if let Progress::Hamiltonian(cert) = &progress {
        assert!(verify_certificate(&graph, cert));
    }
    report.end_length = progress.len() as u32;
    Ok(BoostOutcome { graph, progress, report })
}

/// Outcome of the staged construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StagedOutcome {
    pub n: u32,
    pub stages: Vec<u32>,
    pub certificate: Option<HamiltonCertificate>,
    /// Tracked path length over `n` after each stage; 1 once a cycle is found.
    /// Stage 0 reports the raw growth path, later stages the saturated path.
    pub stage_fractions: Vec<f64>,
    pub final_path_len: u32,
    pub boosts: Vec<BoostReport>,
}

impl StagedOutcome {
    pub fn success(&self) -> bool {
        self.certificate.is_some()
    }
}

/// Stage 0 grows a path in `G_{n, stages[0]}`; every later stage adds an
/// independent `G_{n, stages[i]}` through [`boost_with_fresh_choices`].
pub fn staged_hamilton(n: u32, stages: &[u32], rng: &RngSpec) -> Result<StagedOutcome> {
    staged_hamilton_with_graph(n, stages, rng).map(|(o, _)| o)
}

/// [`staged_hamilton`] that also returns the final union graph.
pub fn staged_hamilton_with_graph(n: u32, stages: &[u32], rng: &RngSpec) -> Result<(StagedOutcome, UagGraph)> {
    let Some((&first, rest)) = stages.split_first() else {
        return Err(Error::InvalidParameter("at least one stage is required".into()));
    };
    if stages.contains(&0) {
        return Err(Error::InvalidParameter("every stage needs at least one choice".into()));
    }
    let (traj, mut graph) = grow_longest_path_with(n, first, rng, &GrowthOptions::default())?;
    let nf = f64::from(n);
    let mut fractions = vec![traj.final_fraction()];
    let mut progress = Progress::Path(traj.final_path);
    let mut boosts = Vec::new();
    for (i, &k) in rest.iter().enumerate() {
        if let Progress::Path(path) = progress {
            let out = boost_with_fresh_choices(&graph, path, k, &rng.derive(i as u64 + 1))?;
            graph = out.graph;
            progress = out.progress;
            boosts.push(out.report);
        }
        fractions.push(match &progress {
            Progress::Hamiltonian(_) => 1.0,
            Progress::Path(p) => p.len() as f64 / nf,
        });
    }
    if let Progress::Path(p) = progress {
        progress = saturate(&graph, p, &mut EndSearch::default());
    }
    let outcome = StagedOutcome {
        n,
        stages: stages.to_vec(),
        final_path_len: progress.len() as u32,
        certificate: progress.certificate().cloned(),
        stage_fractions: fractions,
        boosts,
    };
    if let Some(cert) = &outcome.certificate {
        assert!(verify_certificate(&graph, cert));
    }
    Ok((outcome, graph))
}
