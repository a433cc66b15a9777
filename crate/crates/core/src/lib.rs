//! Coronary artery disease detection from clinical records.
//!
//! The pipeline discretizes raw measurements against demographic normal
//! ranges, binarizes them, mines frequent itemsets as extra features,
//! picks a feature subset with a GA-wrapped SVM, and reports
//! cross-validated metrics.

pub mod binarize;
pub mod bits;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod gafs;
pub mod miner;
pub mod pipeline;
pub mod profiling;
pub mod svm;

pub use error::{Error, Result};
