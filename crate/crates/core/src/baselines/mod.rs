//! Comparison methods that rank models without learning from the target
//! ranking: a seeded random task, item distillation with IRT-based score
//! reconstruction, and a fixed anchor set with IRT score estimation. The
//! no-learning aggregate (plain accuracy) is here as well.
//!
//! None of these functions take a target ranking.

mod metabench;
mod random;
pub mod regression;
mod tinybench;

pub use metabench::{
    metabench_preprocess, metabench_rank, metabench_subsample, DistillationResult, MetabenchConfig, MetabenchOutput,
};
pub use random::{random_task_ranking, TaskCatalog, TASK_SEPARATOR};
pub use tinybench::{tinybench_rank, tinybench_select_anchors, TinyEstimator, TinybenchConfig, TinybenchOutput};

use std::collections::BTreeMap;

use crate::dataset::ResponseMatrix;
use crate::error::Result;
use crate::scoring::{mean_accuracy_score, rank_models, Ranking};

/// Ranking by plain accuracy over every question in `dataset`.
pub fn no_ltr_ranking(dataset: &ResponseMatrix) -> Result<Ranking> {
    let mut scores = BTreeMap::new();
    for (m, rec) in dataset.models().iter().enumerate() {
        scores.insert(rec.model_id.clone(), mean_accuracy_score(&dataset.features(m))?);
    }
    rank_models(scores)
}

/// Row positions of `ids` in `dataset`.
pub(crate) fn rows_of(dataset: &ResponseMatrix, ids: &[String]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| {
            dataset
                .model_position(id)
                .ok_or_else(|| crate::Error::invalid(format!("unknown model {id}")))
        })
        .collect()
}

/// Mean of `dataset[row, cols]`.
pub(crate) fn mean_over(dataset: &ResponseMatrix, row: usize, cols: &[usize]) -> f64 {
    let r = dataset.row(row);
    cols.iter().map(|&c| r[c] as f64).sum::<f64>() / cols.len() as f64
}
