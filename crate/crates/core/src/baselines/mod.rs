//! Comparison selectors and the pass@k estimator.

mod codet;
mod hac;
mod passk;
mod similarity;

use thiserror::Error;

pub use codet::{dual_agreement_select, fingerprint, Fingerprint, TestResult};
pub use hac::{hac_clusters, hac_medoid_select, medoid, DEFAULT_TAU};
pub use passk::{pass_at_k, pass_at_k_exact};
pub use similarity::{
    similarity_matrix, subtree_bag, token_ngrams, token_similarity, SimilarityMatrix,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid similarity matrix: {0}")]
    Matrix(String),
}

pub type SimilarityMatrixF64 = SimilarityMatrix<f64>;
pub type SimilarityMatrixF32 = SimilarityMatrix<f32>;
