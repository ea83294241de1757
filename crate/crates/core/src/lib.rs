//! Estimators for counting objects that satisfy an expensive predicate.
//!
//! The crate implements classical sampling baselines (simple random,
//! proportional and Neyman stratified sampling), quantification-learning
//! estimators (classify-and-count, adjusted count, sample-corrected count),
//! and two learn-to-sample methods: learned weighted sampling with the
//! Des Raj estimator and learned stratified sampling with optimized
//! score-order stratification. Every estimator reports a point estimate,
//! an optional confidence interval, and the number of predicate
//! evaluations it spent.

pub mod baseline;
pub mod core;
pub mod error;
pub mod harness;
pub mod lws;
pub mod lss;
pub mod predicates;
pub mod quantification;
pub mod rng;
pub mod scorers;
pub mod synth;

pub use crate::core::{Budget, DataPoint, Dataset, Estimate, PhaseOverhead};
pub use crate::error::{Error, Result};
pub use crate::predicates::{CountingOracle, NoiseTable, Predicate};
