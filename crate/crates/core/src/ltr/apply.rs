use std::collections::BTreeMap;

use log::warn;

use crate::dataset::ResponseMatrix;
use crate::error::{Error, Result};
use crate::scoring::{rank_models, raw_score, weighted_score, Ranking, WeightedBenchmark};

/// Ranks the models of `new_models` with a reweighted benchmark.
///
/// Uses the normalized score when the weights sum to a positive value and
/// the raw linear score otherwise; both induce the same order.
pub fn apply_benchmark(bench: &WeightedBenchmark, new_models: &ResponseMatrix) -> Result<Ranking> {
    let cols = bench
        .question_ids
        .iter()
        .map(|id| {
            new_models
                .question_position(id)
                .ok_or_else(|| Error::invalid(format!("benchmark question {id} is absent from the dataset")))
        })
        .collect::<Result<Vec<_>>>()?;
    if cols.len() < new_models.n_questions() {
        warn!(
            "{} dataset questions are not in the benchmark and are ignored",
            new_models.n_questions() - cols.len()
        );
    }
    let normalized = bench.weight_sum() > 0.0;
    let mut scores = BTreeMap::new();
    let mut x = vec![0.0; cols.len()];
    for m in 0..new_models.n_models() {
        let row = new_models.row(m);
        for (xi, &c) in x.iter_mut().zip(&cols) {
            *xi = row[c] as f64;
        }
        let s = if normalized {
            weighted_score(&x, bench)?
        } else {
            raw_score(&x, &bench.weights)?
        };
        scores.insert(new_models.models()[m].model_id.clone(), s);
    }
    rank_models(scores)
}
