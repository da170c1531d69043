//! Exact attributed substructure counting and the machinery needed to check,
//! by computation, which graph models can and cannot count substructures.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`], [`iso`], [`io`]: attributed graphs, brute-force isomorphism for
//!   small graphs, and the text/JSON graph formats.
//! * [`counting`]: matching-count (induced) and containment-count (subgraph)
//!   oracles, pattern builders and the closed-form star count.
//! * [`wl`]: k-WL tuple refinement with exact color interning, plus classic
//!   node refinement.
//! * [`counterexamples`]: the doubled-pattern and path constructions, and a
//!   verifier that recomputes counts and runs WL on them.
//! * [`models`]: a reference message passing network and the local relational
//!   pooling (LRP-1-k) model with analytic gradients and training.
//! * [`datasets`]: synthetic Erdős–Rényi and random-regular benchmarks.
//! * [`harness`]: verification sweeps and experiment reports used by the CLI.
//!
//! Node indices are 0-based everywhere in the API. The text and JSON formats
//! are 1-based.

pub mod counterexamples;
pub mod counting;
pub mod datasets;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod iso;
pub mod models;
pub mod rng;
pub mod wl;

pub use error::{Error, Result};
pub use graph::{AttributedGraph, FeatureToken, GraphBuilder, IsoMapping};
