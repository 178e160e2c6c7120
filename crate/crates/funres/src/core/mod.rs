//! Shared numeric and data-handling foundations: datasets, design
//! matrices, normal-distribution primitives, and deterministic RNG
//! streams.

pub mod dataset;
pub mod matrix;
pub mod normal;
pub mod rng;
pub mod special;
pub mod terms;

pub use dataset::Dataset;
pub use matrix::Matrix;
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use rng::RngStream;
pub use terms::{CompiledTerms, Term, TermSet};
