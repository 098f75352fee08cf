//! Flip dynamics for sampling proper colorings, the greedy and variable-length
//! couplings used to analyze it, and exact coupling linear programs.
//!
//! ```
//! use std::sync::Arc;
//! use flipdyn::{coupling, Coloring, FlipProbabilities, Graph, NeighboringPair};
//!
//! // A single vertex whose two colorings disagree: one greedy step always coalesces.
//! let g = Arc::new(Graph::empty(1));
//! let pair = NeighboringPair::new(g, Coloring::new(vec![0], 2)?, Coloring::new(vec![1], 2)?)?;
//! let change = coupling::expected_distance_change(&pair, &FlipProbabilities::vigoda())?;
//! assert_eq!(change.to_string(), "-1");
//! # Ok::<(), flipdyn::Error>(())
//! ```

pub mod classify;
pub mod constructions;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod lp;
pub mod probs;
pub mod rational;

pub use error::{Error, Result};
pub use graph::{Coloring, Flip, Graph, NeighboringPair};
pub use probs::FlipProbabilities;
