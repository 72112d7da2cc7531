//! A workbench for evaluating query performance prediction (QPP) methods
//! and for measuring how sensitive those evaluations are to the
//! experimental context they are run in.
//!
//! The pipeline: a corpus is analyzed into an immutable inverted
//! [`index::Index`]; a [`retrieval::RetrievalModel`] produces per-query
//! [`retrieval::RankedList`]s; [`metrics`] turn ranked lists plus relevance
//! judgments into ground-truth effectiveness vectors; [`predictors`]
//! estimate the same quantity without judgments; [`correlation`] compares
//! the two vectors. The [`harness`] sweeps a grid of evaluation contexts
//! (metric, retrieval model, rank cutoff) and reports
//! (a) the standard deviation of each predictor's outcome across contexts
//! and (b) the Kendall-tau agreement between predictor rankings induced by
//! different contexts.

pub mod analysis;
pub mod config;
pub mod correlation;
mod error;
pub mod harness;
pub mod index;
pub mod metrics;
pub mod predictors;
pub mod report;
pub mod retrieval;
pub mod synth;
pub mod trec;

pub use error::{Error, Result};
