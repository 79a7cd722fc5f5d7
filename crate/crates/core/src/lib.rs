//! Uniform attachment graphs: sampling, coupling, expansion, matchings and
//! Hamilton cycles, plus the experiment harness that drives them.

pub mod coupling;
pub mod experiment;
pub mod error;
pub mod expansion;
pub mod hamilton;
pub mod matching;
pub mod model;
pub mod subset;
pub mod thresholds;

pub use error::{Error, Result};
pub use matching::{maximum_matching, Matching};
pub use model::{build_graph, sample_choice_sequence, ChoiceSequence, RngSpec, UagGraph};
pub use subset::VertexSubset;
