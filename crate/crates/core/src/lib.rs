//! Explaining prediction shifts between two datasets with Shapley values over
//! the subgroup conditional probabilities of a decision tree.

pub mod cli;
pub mod conditionals;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod learn;
pub mod metrics;
pub mod model_json;
pub mod report;
pub mod shapley;
pub mod surrogate;
pub mod synthetic;
pub mod tree;

pub use error::{Error, Result};
