//! Learn per-question weights for existing benchmarks so that the weighted
//! benchmark orders models like an external preference ranking, then rank
//! unseen models with those weights.
//!
//! The crate also carries the comparison baselines (random task,
//! distillation with IRT, anchor items with IRT), ranking metrics, split
//! and sweep generators, and a synthetic world with planted weights.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod irt;
pub mod ltr;
pub mod metrics;
pub mod rng;
pub mod scoring;

pub use error::{Error, Result};
