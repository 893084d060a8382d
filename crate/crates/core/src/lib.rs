//! Comparing groups of documents through a weighted bipartite graph.
//!
//! Documents are split into groups (programs, years, sources) and into
//! comparison criteria (by default, each document's dominant LDA topic).
//! Groups and criteria become the two node sets of a bipartite graph whose
//! edge weights count shared documents. On that graph:
//!
//! - [`analytics::node_entropy`] measures how concentrated a group (or topic) is,
//! - [`analytics::similarity`] compares groups by their criterion profiles,
//! - [`analytics::louvain_cluster`] clusters the thresholded similarity graph,
//! - [`analytics::topic_trend`] follows a topic across year groups,
//! - [`pairs::blocked_pairs`] finds similar document pairs without a full scan.

pub mod analytics;
pub mod corpus;
mod error;
pub mod eval;
pub mod graph;
pub mod pairs;
pub mod topics;

pub use error::{Error, Result};
