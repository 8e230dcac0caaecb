use log::debug;

use super::{
    adam_update, batch_gradient, current_rank_positions, gains_and_discounts, generate_pairs_for, pair_loss,
    pair_weights, relevance_labels, AdamState, LossConfig, OrderedPair, TrainConfig, WeightVector,
};
use crate::dataset::{ResponseMatrix, TargetRanking};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scoring::dot;

/// Dense row-major real features, one row per model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "feature matrix shape");
        Self { rows, cols, data }
    }

    pub fn from_responses(ds: &ResponseMatrix) -> Self {
        let mut data = Vec::with_capacity(ds.n_models() * ds.n_questions());
        for m in 0..ds.n_models() {
            data.extend(ds.row(m).iter().map(|&v| v as f64));
        }
        Self::new(ds.n_models(), ds.n_questions(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn score(&self, r: usize, weights: &[f64]) -> f64 {
        dot(self.row(r), weights)
    }

    pub fn scores(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| self.score(r, weights)).collect()
    }
}

/// One line of the training trace. Epoch 0 is the initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    /// Mean weighted pair loss over all training pairs.
    pub mean_loss: f64,
    pub train_acc_pair: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub weights: WeightVector,
    pub trace: Vec<TraceRow>,
}

impl TrainOutput {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss,train_acc_pair\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.mean_loss, r.train_acc_pair));
        }
        out
    }
}

struct Problem<'a> {
    features: FeatureMatrix,
    pairs: Vec<OrderedPair>,
    gains: Vec<f64>,
    model_ids: Vec<String>,
    loss: &'a LossConfig,
}

impl Problem<'_> {
    fn positions(&self, scores: &[f64]) -> Result<Vec<usize>> {
        if self.loss.variant.uses_positions() {
            current_rank_positions(scores)
        } else {
            Ok(Vec::new())
        }
    }

    /// Mean loss over all pairs and the fraction of pairs the current
    /// scores order correctly (ties broken by model id).
    fn evaluate(&self, weights: &[f64]) -> Result<(f64, f64)> {
        let scores = self.features.scores(weights);
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("training diverged: non-finite scores"));
        }
        let pos = self.positions(&scores)?;
        let pw = pair_weights(self.loss, &self.gains, &pos, &self.pairs);
        let mut loss = 0.0;
        let mut correct = 0usize;
        for (p, w) in self.pairs.iter().zip(pw) {
            let (si, sj) = (scores[p.preferred], scores[p.other]);
            loss += pair_loss(self.loss, si, sj, w);
            let ahead = si > sj || (si == sj && self.model_ids[p.preferred] < self.model_ids[p.other]);
            correct += ahead as usize;
        }
        let n = self.pairs.len() as f64;
        Ok((loss / n, correct as f64 / n))
    }
}

/// Learns per-question weights whose linear scores reproduce `target` on
/// the models of `dataset`.
///
/// Random stream order: weight initialization first, then one shuffle of
/// the pair list per epoch, all from one splitmix64 generator seeded with
/// `train_config.seed`.
pub fn train(
    dataset: &ResponseMatrix,
    target: &TargetRanking,
    loss_config: &LossConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutput> {
    loss_config.validate()?;
    train_config.validate()?;
    let model_ids = dataset.model_ids();
    if model_ids.len() < 2 {
        return Err(Error::invalid("training needs at least 2 models"));
    }
    if target.len() != model_ids.len() {
        return Err(Error::invalid(format!(
            "target ranks {} models but the dataset has {}",
            target.len(),
            model_ids.len()
        )));
    }
    let pairs = generate_pairs_for(target, &model_ids)?;
    if pairs.is_empty() {
        return Err(Error::invalid("no training pairs"));
    }
    let ranks: Vec<usize> = model_ids.iter().map(|id| target.rank(id).unwrap()).collect();
    let (gains, _) = gains_and_discounts(&relevance_labels(&ranks));
    let problem = Problem {
        features: FeatureMatrix::from_responses(dataset),
        pairs,
        gains,
        model_ids,
        loss: loss_config,
    };

    let mut rng = SplitMix64::new(train_config.seed);
    let s = train_config.init_scale;
    let mut weights: Vec<f64> = (0..dataset.n_questions()).map(|_| rng.uniform(-s, s)).collect();
    let mut adam = AdamState::new(weights.len());

    let mut trace = Vec::with_capacity(train_config.epochs + 1);
    let (l0, a0) = problem.evaluate(&weights)?;
    trace.push(TraceRow {
        epoch: 0,
        mean_loss: l0,
        train_acc_pair: a0,
    });

    let mut order = problem.pairs.clone();
    for epoch in 1..=train_config.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(train_config.batch_size) {
            let pw = if loss_config.variant.uses_positions() {
                let pos = current_rank_positions(&problem.features.scores(&weights))?;
                pair_weights(loss_config, &problem.gains, &pos, batch)
            } else {
                vec![1.0; batch.len()]
            };
            let grad = batch_gradient(&weights, &problem.features, batch, &pw, loss_config);
            adam_update(&mut adam, &mut weights, &grad, train_config);
        }
        let (loss, acc) = problem.evaluate(&weights)?;
        debug!("epoch {epoch}: loss {loss:.6} acc_pair {acc:.4}");
        trace.push(TraceRow {
            epoch,
            mean_loss: loss,
            train_acc_pair: acc,
        });
    }

    Ok(TrainOutput {
        weights: WeightVector {
            question_ids: dataset.question_ids(),
            weights,
        },
        trace,
    })
}
