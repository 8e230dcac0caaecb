//! Anchor-item baseline: a fixed set of representative items per
//! benchmark, chosen by k-medoid clustering of item response columns, plus
//! a global 2PL fit that turns anchor responses into a full-benchmark score
//! estimate for unseen models.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{mean_over, rows_of};
use crate::dataset::ResponseMatrix;
use crate::error::{Error, Result};
use crate::experiments::Split;
use crate::irt::{fit_2pl, gp_irt, irf_2pl, map_ability, p_irt_from_predictions, IrtFitConfig, ItemParams};
use crate::rng::{fnv1a64, SplitMix64};
use crate::scoring::{rank_models, Ranking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TinyEstimator {
    PIrt,
    GpIrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TinybenchConfig {
    pub n_anchors: usize,
    pub max_iterations: usize,
    pub estimator: TinyEstimator,
    /// gp-IRT weight on the empirical anchor accuracy.
    pub mix: f64,
    pub irt: IrtFitConfig,
    pub seed: u64,
}

impl Default for TinybenchConfig {
    fn default() -> Self {
        Self {
            n_anchors: 100,
            max_iterations: 50,
            estimator: TinyEstimator::PIrt,
            mix: 0.5,
            irt: IrtFitConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TinybenchOutput {
    pub ranking: Ranking,
    /// Anchor question ids per benchmark.
    pub anchors: BTreeMap<String, Vec<String>>,
}

/// Item response columns over a fixed set of rows, packed into bits.
struct BitColumns {
    words: usize,
    bits: Vec<Vec<u64>>,
}

impl BitColumns {
    fn new(bench: &ResponseMatrix, rows: &[usize], cols: &[usize]) -> Self {
        let words = rows.len().div_ceil(64);
        let bits = cols
            .iter()
            .map(|&c| {
                let mut v = vec![0u64; words];
                for (k, &r) in rows.iter().enumerate() {
                    if bench.get(r, c) == 1 {
                        v[k / 64] |= 1 << (k % 64);
                    }
                }
                v
            })
            .collect();
        Self { words, bits }
    }

    fn hamming(&self, a: usize, b: usize) -> u32 {
        (0..self.words)
            .map(|w| (self.bits[a][w] ^ self.bits[b][w]).count_ones())
            .sum()
    }
}

/// Columns of `bench` that are neither all-0 nor all-1 on `rows`.
fn usable_columns(bench: &ResponseMatrix, rows: &[usize]) -> Vec<usize> {
    (0..bench.n_questions())
        .filter(|&c| {
            let s: usize = rows.iter().map(|&r| bench.get(r, c) as usize).sum();
            s > 0 && s < rows.len()
        })
        .collect()
}

/// k-medoid anchor selection over the non-degenerate items of `bench`,
/// using Hamming distance between item columns restricted to `train_rows`.
/// Returns column indices of the medoids, ascending.
pub fn tinybench_select_anchors(
    bench: &ResponseMatrix,
    train_rows: &[usize],
    n: usize,
    seed: u64,
    max_iterations: usize,
) -> Result<Vec<usize>> {
    let usable = usable_columns(bench, train_rows);
    if n == 0 || usable.len() < n {
        return Err(Error::invalid(format!(
            "{} usable items, cannot select {n} anchors",
            usable.len()
        )));
    }
    let cols = BitColumns::new(bench, train_rows, &usable);
    let m = usable.len();

    // Seeded order; distinct columns are preferred as initial medoids so
    // duplicates never start in separate clusters.
    let mut order: Vec<usize> = (0..m).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let mut seen = HashSet::new();
    let (mut first, mut rest) = (Vec::new(), Vec::new());
    for &i in &order {
        if seen.insert(&cols.bits[i]) {
            first.push(i);
        } else {
            rest.push(i);
        }
    }
    let mut medoids: Vec<usize> = first.into_iter().chain(rest).take(n).collect();

    let mut assignment = vec![0usize; m];
    for _ in 0..max_iterations {
        let slot_of: BTreeMap<usize, usize> = medoids.iter().enumerate().map(|(s, &i)| (i, s)).collect();
        for i in 0..m {
            assignment[i] = match slot_of.get(&i) {
                Some(&s) => s,
                None => (0..n)
                    .min_by_key(|&s| (cols.hamming(i, medoids[s]), s))
                    .expect("n > 0"),
            };
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..m {
            members[assignment[i]].push(i);
        }
        let mut changed = false;
        for (s, group) in members.iter().enumerate() {
            let cost = |c: usize| -> u64 { group.iter().map(|&o| cols.hamming(c, o) as u64).sum() };
            let current = cost(medoids[s]);
            let (best_cost, best) = group
                .iter()
                .map(|&c| (cost(c), c))
                .min()
                .expect("a medoid is in its own cluster");
            if best_cost < current {
                medoids[s] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out: Vec<usize> = medoids.into_iter().map(|i| usable[i]).collect();
    out.sort_unstable();
    Ok(out)
}

/// Global item parameters for one benchmark: 2PL on the usable items,
/// constant training accuracy for degenerate ones.
enum ItemModel {
    Fitted(ItemParams),
    Constant(f64),
}

impl ItemModel {
    fn probability(&self, theta: f64) -> f64 {
        match self {
            ItemModel::Fitted(p) => irf_2pl(theta, p),
            ItemModel::Constant(c) => *c,
        }
    }
}

/// Ranks the test models by the mean over benchmarks of their estimated
/// full-benchmark scores, observing each test model only on the anchors.
pub fn tinybench_rank(dataset: &ResponseMatrix, split: &Split, config: &TinybenchConfig) -> Result<TinybenchOutput> {
    let train_rows = rows_of(dataset, &split.train_ids)?;
    let test_rows = rows_of(dataset, &split.test_ids)?;
    let mut totals = vec![0.0; test_rows.len()];
    let mut anchor_ids = BTreeMap::new();
    let by_bench = dataset.columns_by_benchmark();
    for (name, cols) in &by_bench {
        let bench = dataset.select_questions(cols)?;
        let usable = usable_columns(&bench, &train_rows);
        if usable.is_empty() {
            return Err(Error::invalid(format!("benchmark {name} has no usable items")));
        }
        let fit = fit_2pl(&bench.select_models(&train_rows)?.select_questions(&usable)?, &config.irt)?;
        let mut models: Vec<ItemModel> = (0..bench.n_questions())
            .map(|c| ItemModel::Constant(mean_over_rows(&bench, &train_rows, c)))
            .collect();
        for (&c, p) in usable.iter().zip(&fit.items) {
            models[c] = ItemModel::Fitted(*p);
        }

        let seed = config.seed ^ fnv1a64(name.as_bytes());
        let anchors = tinybench_select_anchors(&bench, &train_rows, config.n_anchors, seed, config.max_iterations)?;
        let anchor_set: HashSet<usize> = anchors.iter().copied().collect();
        let anchor_params: Vec<ItemParams> = anchors
            .iter()
            .map(|&c| match &models[c] {
                ItemModel::Fitted(p) => *p,
                ItemModel::Constant(_) => unreachable!("anchors are usable items"),
            })
            .collect();
        let unseen: Vec<usize> = (0..bench.n_questions()).filter(|c| !anchor_set.contains(c)).collect();

        for (t, &r) in totals.iter_mut().zip(&test_rows) {
            let seen: Vec<u8> = anchors.iter().map(|&c| bench.get(r, c)).collect();
            let theta = map_ability(&seen, &anchor_params)?.theta;
            let probs: Vec<f64> = unseen.iter().map(|&c| models[c].probability(theta)).collect();
            let p = p_irt_from_predictions(&seen, &probs)?;
            *t += match config.estimator {
                TinyEstimator::PIrt => p,
                TinyEstimator::GpIrt => gp_irt(p, mean_over(&bench, r, &anchors), config.mix)?,
            };
        }
        anchor_ids.insert(
            name.clone(),
            anchors.iter().map(|&c| bench.questions()[c].question_id.clone()).collect(),
        );
    }
    let nb = by_bench.len() as f64;
    let scores = split
        .test_ids
        .iter()
        .cloned()
        .zip(totals.into_iter().map(|t| t / nb))
        .collect();
    Ok(TinybenchOutput {
        ranking: rank_models(scores)?,
        anchors: anchor_ids,
    })
}

fn mean_over_rows(bench: &ResponseMatrix, rows: &[usize], col: usize) -> f64 {
    rows.iter().map(|&r| bench.get(r, col) as f64).sum::<f64>() / rows.len() as f64
}
