//! Nearest-better network construction and fitness landscape analysis for
//! binary and permutation problems.
//!
//! A sample of solutions is turned into a forest in which every solution
//! points to its nearest strictly better sampled solution. The exact
//! construction is quadratic; the division and random projection builders
//! reach log-linear time on assignment problems.

pub mod analysis;
pub mod builder;
pub mod error;
pub mod graph;
pub mod io;
pub mod metric;
pub mod model;
pub mod problems;
pub mod sample_set;
pub mod sampling;
pub mod transition;

pub use builder::{build_graph, Algorithm, BetaTable, BuildConfig, Link};
pub use error::{Error, Result};
pub use graph::NbnGraph;
pub use model::{Encoding, Solution, SolutionId};
pub use problems::Problem;
pub use sample_set::{SampleSet, SampleSetBuilder};
