//! Fairness-aware classification by shifting decision boundaries.
//!
//! Three confidence-producing learners (boosted stumps, an SMO-trained SVM and
//! logistic regression) are post-processed so the protected group's positive
//! rate matches its complement's. The crate also carries the baselines the
//! shift is compared against, the resilience-to-random-bias measure, and an
//! experiment harness that runs the whole grid from raw data files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod fairness;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod seed;

pub use dataset::{Dataset, Label};
pub use error::{Error, Result};
pub use learners::{ConfidenceModel, LearnerKind};
