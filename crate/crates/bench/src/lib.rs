//! Shared fixtures for the benchmarks.

use uag_core::{build_graph, sample_choice_sequence, RngSpec, UagGraph};

/// A fixed `G_{n,k}` sample so every benchmark sees the same input.
pub fn fixture(n: u32, k: u32) -> UagGraph {
    build_graph(&sample_choice_sequence(n, k, &RngSpec::new(2024, 0)).expect("valid parameters"))
}
