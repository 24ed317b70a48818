//! Sparse principal subspace estimation under the spiked covariance model.
//!
//! The crate provides the generative model and sampler, the projection
//! distance between subspaces, weak-lq sparsity geometry with the
//! rate/effective-dimension calculators, penalized group-sparse regression
//! for orthogonal designs, and the subspace estimators built on them:
//! regular PCA, diagonal-thresholding screening, rank estimation, the
//! reduction-to-regression pipeline with a symmetrized variant, and
//! exhaustive support aggregation.

pub mod error;
pub mod estimators;
pub mod frame;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod regression;
pub mod rng;
pub mod sparsity;

pub use error::{Error, Result};
pub use estimators::{
    aggregate_estimator, diagonal_threshold_init, estimate_m0, estimate_m0_from_sigma1,
    estimate_rank, estimate_rank_from_block, reduce_and_fit, reduce_with_split, regular_pca,
    screen_and_estimate_rank, split_samples, symmetrized_regspca, AggregationConfig, DiagInit,
    DiagThreshConfig, RankEstimate, ReductionArtifacts, ReductionFlags,
};
pub use frame::{subspace_loss, subspace_loss_general, OrthonormalFrame};
pub use matrix::Matrix;
pub use model::{sample_covariance, sample_covariance_with, Dataset, SpikedModel};
pub use regression::{cumulative_penalty, fit_group_sparse, penalty_t, GroupEstimate, PenaltyConfig};
pub use sparsity::{rate_report, weak_lq_radius, RateReport, SparsityClass};
