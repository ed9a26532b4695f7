//! Threshold networks for rolling stock-market correlation matrices.
//!
//! The pipeline: parse a daily price panel, compute log returns, slide a
//! fixed-width window over the returns producing one Pearson correlation
//! matrix per window, threshold each matrix into an undirected graph, and
//! score every candidate threshold by the *dynamic consistence* between the
//! matrix-level change sequence and the network-level change sequence.
//! The threshold attaining maximal consistence is the estimate used to build
//! the per-window networks whose evolutionary metrics (density, clustering,
//! path length, heterogeneity, entropy) separate market regimes.
//!
//! Modules follow the pipeline stages:
//!
//! - [`ingest`]: price-file parsing and log returns
//! - [`rolling`]: windowing, correlation matrices, matrix difference norms
//! - [`netgraph`]: bit-packed threshold graphs and BFS distance profiles
//! - [`dissim`]: graph dissimilarity (distance-distribution divergence,
//!   node dispersion, centrality terms)
//! - [`metrics`]: per-window network statistics
//! - [`estimate`]: threshold-grid sweep and argmax estimation
//! - [`synth`]: deterministic synthetic market generator
//! - [`rng`]: the portable pseudo-random generator backing `synth`

pub mod dissim;
pub mod error;
pub mod estimate;
pub mod ingest;
pub mod metrics;
pub mod netgraph;
pub(crate) mod numeric;
pub mod rng;
pub mod rolling;
pub mod synth;

pub use error::{Error, Result};
