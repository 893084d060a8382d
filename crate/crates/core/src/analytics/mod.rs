//! Group-level analyses on the bipartite graph.

pub mod entropy;
pub mod louvain;
pub mod simgraph;
pub mod similarity;
pub mod trend;

pub use entropy::{entropy_ranking, node_entropy, normalized_entropy, SortOrder};
pub use louvain::{louvain_cluster, modularity, Clustering};
pub use simgraph::{build_similarity_graph, SimilarityGraph, DEFAULT_XI};
pub use similarity::{cosine, similarity, spearman, top_k_similar, weighted_jaccard, Measure};
pub use trend::{topic_trend, TrendPoint, TrendSeries};
