//! Pairwise learning-to-rank over per-question weights.
//!
//! A single linear layer `score = W . x` is trained on ordered model pairs
//! with a weighted logistic pair loss. Five lambda-weight schemes select
//! how much each pair contributes.

mod adam;
mod apply;
mod lambda;
mod loss;
mod pairs;
mod train;

pub use adam::{adam_update, AdamState};
pub use apply::apply_benchmark;
pub use lambda::{current_rank_positions, discount, gains_and_discounts, pair_weight, pair_weights};
pub use loss::{batch_gradient, batch_loss, pair_loss};
pub use pairs::{generate_pairs, generate_pairs_for, OrderedPair};
pub use train::{train, FeatureMatrix, TraceRow, TrainOutput};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::WeightedBenchmark;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossVariant {
    RankNet,
    LambdaRank,
    NDCGLoss1,
    NDCGLoss2,
    NDCGLoss2pp,
}

impl LossVariant {
    pub const ALL: [LossVariant; 5] = [
        LossVariant::RankNet,
        LossVariant::LambdaRank,
        LossVariant::NDCGLoss1,
        LossVariant::NDCGLoss2,
        LossVariant::NDCGLoss2pp,
    ];

    /// Whether pair weights depend on the current predicted positions.
    pub fn uses_positions(self) -> bool {
        self != LossVariant::RankNet
    }

    pub fn name(self) -> &'static str {
        match self {
            LossVariant::RankNet => "RankNet",
            LossVariant::LambdaRank => "LambdaRank",
            LossVariant::NDCGLoss1 => "NDCGLoss1",
            LossVariant::NDCGLoss2 => "NDCGLoss2",
            LossVariant::NDCGLoss2pp => "NDCGLoss2pp",
        }
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown loss variant {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub variant: LossVariant,
    /// Logistic scale.
    pub sigma: f64,
    pub margin: f64,
    /// NDCGLoss2pp mixing weight on the NDCGLoss2 term.
    pub mu: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            variant: LossVariant::RankNet,
            sigma: 1.0,
            margin: 0.0,
            mu: 10.0,
        }
    }
}

impl LossConfig {
    pub fn with_variant(variant: LossVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::invalid("margin must be nonnegative"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Pairs per batch.
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 256,
            epochs: 100,
            seed: 0,
            weight_decay: 0.0,
            init_scale: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.weight_decay >= 0.0 && self.init_scale >= 0.0) {
            return Err(Error::invalid("weight_decay and init_scale must be nonnegative"));
        }
        Ok(())
    }
}

/// Learned weights aligned to the training question order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub question_ids: Vec<String>,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn to_benchmark(&self) -> Result<WeightedBenchmark> {
        WeightedBenchmark::new(self.question_ids.clone(), self.weights.clone())
    }
}

/// Graded relevance from ranks: `(K - r) / (K - 1)`, or `[1]` for a single model.
pub fn relevance_labels(ranks: &[usize]) -> Vec<f64> {
    let k = ranks.len();
    if k == 1 {
        return vec![1.0];
    }
    ranks
        .iter()
        .map(|&r| (k - r) as f64 / (k - 1) as f64)
        .collect()
}
