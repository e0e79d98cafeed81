//! Majority-based imitation dynamics on finite connected graphs.
//!
//! An agent and one of its neighbors are selected at random; the agent
//! copies the neighbor only if strictly more of its neighbors share the
//! neighbor's opinion than its own. The crate provides:
//!
//! - [`graph`]: graph families, random connected graphs, edge-list I/O
//! - [`dynamics`]: the update rule, the potential `Z` and trajectories
//! - [`exact`]: the full `2^n` Markov chain for small graphs
//! - [`theory`]: the consensus bound and frozen-configuration detection
//! - [`montecarlo`]: reproducible parallel estimation with Wilson intervals
//! - [`cli`]: the `majsim` command line
//!
//! ```
//! use majsim::{dynamics, exact, graph::Graph};
//!
//! let c4 = Graph::cycle(4).unwrap();
//! let frozen = "++--".parse().unwrap();
//! assert!(dynamics::is_absorbing(&c4, &frozen));
//! let analysis = exact::exact_consensus_probability(&c4, 0.5).unwrap();
//! assert!((analysis.p_consensus - 0.75).abs() < 1e-12);
//! ```

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod graph;
pub mod montecarlo;
pub mod opinion;
pub mod stream;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{Family, Graph};
pub use opinion::{Opinion, OpinionState};
