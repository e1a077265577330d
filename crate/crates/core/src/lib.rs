//! Pool-based batch active learning for regression.
//!
//! Ridge regression learners pick which unlabeled samples to label next by
//! committee disagreement (QBC) or expected model change (EMCM), optionally
//! with a representative, outlier-aware first batch and diversity-aware later
//! batches. The [`harness`] replays a learner on repeated pool draws and
//! [`stats`] compares the resulting learning curves.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod committee;
pub mod config;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod regression;
pub mod seed;
pub mod stats;
pub mod strategies;

pub use dataset::{Dataset, LabelState, SampleId};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, Metric, ResultsTable};
pub use linalg::Matrix;
pub use strategies::StrategySpec;
