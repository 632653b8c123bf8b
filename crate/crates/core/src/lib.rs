//! Corpus abnormality scoring without the standard library.
//!
//! Contexts are featurized as zero-padded positional n-gram densities, each
//! example is scored by its squared Mahalanobis distance from the corpus
//! feature distribution, and a reduced training set is drawn from the low
//! tail, the high tail and the neighbourhood of the mean score.
//!
//! Everything here needs only `alloc`. File formats, ingestion and the
//! command line live in the `abnormal` crate.

#![no_std]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod exec;
pub mod featurize;
pub mod linalg;
pub mod mahalanobis;
pub mod sampler;
pub mod stats;

pub use corpus::{Corpus, Example};
pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use featurize::{
    build_matrix, featurize_example, fit_density, ngrams, tokenize, DensityTable, FeatureMatrix,
    FeatureRow, TokenizerConfig, NGRAM_SEPARATOR,
};
pub use mahalanobis::{
    fit_moments, regularized_factorize, score, score_all, EpsilonPolicy, FactoredModel,
    MomentModel, ScoreVector,
};
pub use sampler::{
    label_all, select, select_bucketed, select_global, Category, PolicyEcho, Selection,
    SelectionSpec, Strategy,
};
pub use stats::{histogram, moments_stats, pearson, DistributionStats, Histogram};
