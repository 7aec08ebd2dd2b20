//! Multiple testing with false discovery rate control when the dependence
//! between p-values is described by a known graph.
//!
//! Indices are 0-based throughout the library; the text formats in [`io`]
//! and the command-line tool use 1-based ids.
//!
//! ```
//! use depfdr::{engine, graph::DependencyGraph, procedures, PValues};
//!
//! let g = DependencyGraph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4)]).unwrap();
//! let p = PValues::new(vec![0.02, 0.02, 0.01, 0.02, 0.04]).unwrap();
//! assert_eq!(procedures::bh(&p, 0.05).len(), 5);
//! assert_eq!(engine::indbh_fast(&p, 0.05, &g).unwrap().one_based(), vec![1, 2, 3, 4]);
//! ```

pub mod bounds;
pub mod engine;
mod error;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod procedures;
mod pvalues;
pub mod simgen;

pub use error::{Error, Result};
pub use pvalues::{harmonic, mask, Level, PValues, RejectionSet, NO_RANK};
