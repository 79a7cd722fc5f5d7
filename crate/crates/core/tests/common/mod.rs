//! Brute-force oracles shared by the integration tests. Each one is written
//! independently of the library code it checks.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uag_core::{build_graph, sample_choice_sequence, RngSpec, UagGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi `G(n, p)`.
pub fn gnp(n: u32, p: f64, rng: &mut ChaCha8Rng) -> UagGraph {
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    UagGraph::from_edges(n, &edges).unwrap()
}

pub fn uag(n: u32, k: u32, seed: u64, stream: u64) -> UagGraph {
    build_graph(&sample_choice_sequence(n, k, &RngSpec::new(seed, stream)).unwrap())
}

/// Mixed corpus: uniform attachment graphs with small k and sparse `G(n, p)`.
pub fn random_small_graph(i: u64, max_n: u32, rng: &mut ChaCha8Rng) -> UagGraph {
    let n = rng.random_range(2..=max_n);
    if i & 1 == 0 {
        uag(n, rng.random_range(1..=3), 1000 + i, i)
    } else {
        gnp(n, rng.random_range(0.15..0.6), rng)
    }
}

pub fn is_connected(g: &UagGraph) -> bool {
    let n = g.n() as usize;
    let mut seen = vec![false; n + 1];
    let mut stack = vec![1u32];
    seen[1] = true;
    while let Some(v) = stack.pop() {
        for &u in g.neighbors(v) {
            if !seen[u as usize] {
                seen[u as usize] = true;
                stack.push(u);
            }
        }
    }
    seen[1..].iter().all(|&s| s)
}

/// Vertices outside `set` adjacent to it.
pub fn outside_neighbors(g: &UagGraph, set: &BTreeSet<u32>) -> BTreeSet<u32> {
    set.iter().flat_map(|&v| g.neighbors(v).iter().copied()).filter(|u| !set.contains(u)).collect()
}

/// Every matching of `g` avoiding `banned`, reported as the set of covered
/// vertices, by branching on the smallest undecided vertex.
fn covered_sets(g: &UagGraph, banned: Option<u32>) -> Vec<u64> {
    let n = g.n();
    let mut out = Vec::new();
    fn rec(g: &UagGraph, n: u32, v: u32, used: u64, banned: u64, out: &mut Vec<u64>) {
        if v > n {
            out.push(used);
            return;
        }
        let bit = 1u64 << (v - 1);
        if used & bit != 0 || banned & bit != 0 {
            rec(g, n, v + 1, used, banned, out);
            return;
        }
        rec(g, n, v + 1, used, banned, out);
        for &u in g.neighbors(v) {
            let ub = 1u64 << (u - 1);
            if u > v && used & ub == 0 && banned & ub == 0 {
                rec(g, n, v + 1, used | bit | ub, banned, out);
            }
        }
    }
    let banned = banned.map_or(0, |b| 1u64 << (b - 1));
    rec(g, n, 1, 0, banned, &mut out);
    out
}

/// Maximum matching size and the vertices missed by some maximum matching,
/// optionally in `g - banned`.
pub fn brute_matching(g: &UagGraph, banned: Option<u32>) -> (usize, BTreeSet<u32>) {
    let sets = covered_sets(g, banned);
    let best = sets.iter().map(|s| s.count_ones()).max().unwrap_or(0);
    let mut missed = BTreeSet::new();
    for s in sets.iter().filter(|s| s.count_ones() == best) {
        for v in 1..=g.n() {
            if s & (1 << (v - 1)) == 0 && Some(v) != banned {
                missed.insert(v);
            }
        }
    }
    (best as usize / 2, missed)
}

/// One rotation with pivot index `i`.
fn rotated(path: &[u32], i: usize) -> Vec<u32> {
    let mut p = path.to_vec();
    p[i + 1..].reverse();
    p
}

/// Free ends of every path reachable from `path` by rotations keeping
/// `path[0]` fixed, by search over whole paths.
pub fn brute_end_set(g: &UagGraph, path: &[u32]) -> BTreeSet<u32> {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(path.to_vec());
    queue.push_back(path.to_vec());
    let mut ends = BTreeSet::new();
    while let Some(p) = queue.pop_front() {
        let t = p.len() - 1;
        ends.insert(p[t]);
        for i in 0..t.saturating_sub(1) {
            if g.has_edge(p[i], p[t]) {
                let q = rotated(&p, i);
                if seen.insert(q.clone()) {
                    queue.push_back(q);
                }
            }
        }
    }
    ends
}

/// All longest paths of `g`, each listed in both directions.
pub fn longest_paths(g: &UagGraph) -> Vec<Vec<u32>> {
    let n = g.n();
    let mut best: Vec<Vec<u32>> = Vec::new();
    let mut best_len = 0;
    fn dfs(g: &UagGraph, path: &mut Vec<u32>, on: &mut Vec<bool>, best: &mut Vec<Vec<u32>>, best_len: &mut usize) {
        let v = *path.last().unwrap();
        if path.len() > *best_len {
            *best_len = path.len();
            best.clear();
        }
        if path.len() == *best_len {
            best.push(path.clone());
        }
        for &u in g.neighbors(v) {
            if !on[u as usize] {
                on[u as usize] = true;
                path.push(u);
                dfs(g, path, on, best, best_len);
                path.pop();
                on[u as usize] = false;
            }
        }
    }
    for s in 1..=n {
        let mut on = vec![false; n as usize + 1];
        on[s as usize] = true;
        dfs(g, &mut vec![s], &mut on, &mut best, &mut best_len);
    }
    best
}

/// Hamiltonicity by trying every cyclic order starting at vertex 1.
pub fn brute_hamiltonian(g: &UagGraph) -> bool {
    let n = g.n();
    if n < 3 {
        return false;
    }
    fn rec(g: &UagGraph, path: &mut Vec<u32>, on: &mut Vec<bool>, n: u32) -> bool {
        let v = *path.last().unwrap();
        if path.len() == n as usize {
            return g.has_edge(v, path[0]);
        }
        for &u in g.neighbors(v) {
            if !on[u as usize] {
                on[u as usize] = true;
                path.push(u);
                if rec(g, path, on, n) {
                    return true;
                }
                path.pop();
                on[u as usize] = false;
            }
        }
        false
    }
    let mut on = vec![false; n as usize + 1];
    on[1] = true;
    rec(g, &mut vec![1], &mut on, n)
}

/// A random simple path grown greedily from a random start.
pub fn random_path(g: &UagGraph, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let n = g.n();
    let start = rng.random_range(1..=n);
    let mut on = vec![false; n as usize + 1];
    on[start as usize] = true;
    let mut path = vec![start];
    loop {
        let v = *path.last().unwrap();
        let free: Vec<u32> = g.neighbors(v).iter().copied().filter(|&u| !on[u as usize]).collect();
        if free.is_empty() {
            return path;
        }
        let u = free[rng.random_range(0..free.len())];
        on[u as usize] = true;
        path.push(u);
    }
}
