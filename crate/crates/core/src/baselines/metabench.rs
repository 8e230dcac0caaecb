//! Distillation baseline: per benchmark, filter uninformative items on the
//! training models, pick the item subset whose subtest score best predicts
//! the full score under cross-validation, fit a 2PL model on that subset and
//! reconstruct full-benchmark scores from (ability, subtest score).

use std::collections::BTreeMap;

use log::debug;
use serde::{Deserialize, Serialize};

use super::regression::PolyRidge;
use super::{mean_over, rows_of};
use crate::dataset::ResponseMatrix;
use crate::error::{Error, Result};
use crate::experiments::Split;
use crate::irt::{fit_2pl, map_ability, IrtFitConfig};
use crate::rng::{fnv1a64, SplitMix64};
use crate::scoring::{rank_models, Ranking};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetabenchConfig {
    pub k_grid: Vec<usize>,
    pub candidates_per_k: usize,
    pub folds: usize,
    pub min_variance: f64,
    pub max_mean: f64,
    pub min_point_biserial: f64,
    pub degree: usize,
    pub ridge: f64,
    pub irt: IrtFitConfig,
    pub seed: u64,
}

impl Default for MetabenchConfig {
    fn default() -> Self {
        Self {
            k_grid: vec![500, 1000, 1500],
            candidates_per_k: 20,
            folds: 5,
            min_variance: 0.01,
            max_mean: 0.95,
            min_point_biserial: 0.1,
            degree: 3,
            ridge: 1e-3,
            irt: IrtFitConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillationResult {
    /// Column indices of the chosen subset, ascending.
    pub selected: Vec<usize>,
    /// Coefficients of the subtest-to-full-score regressor fit on all
    /// training models.
    pub coefficients: Vec<f64>,
    pub cv_rmse: f64,
    /// Prediction of that regressor per training model.
    pub predicted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetabenchOutput {
    pub ranking: Ranking,
    /// Selected question ids per benchmark.
    pub selected: BTreeMap<String, Vec<String>>,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

fn item_passes(variance: f64, mean: f64, point_biserial: f64, config: &MetabenchConfig) -> bool {
    variance >= config.min_variance && mean <= config.max_mean && point_biserial >= config.min_point_biserial
}

/// Columns of `bench` that pass the variance, easiness and discrimination
/// filters, with statistics computed on `train_rows` only.
pub fn metabench_preprocess(bench: &ResponseMatrix, train_rows: &[usize], config: &MetabenchConfig) -> Result<Vec<usize>> {
    if train_rows.is_empty() {
        return Err(Error::invalid("preprocessing needs training models"));
    }
    let n = train_rows.len() as f64;
    let totals: Vec<f64> = train_rows
        .iter()
        .map(|&r| bench.row(r).iter().map(|&v| v as f64).sum())
        .collect();
    let mut kept = Vec::new();
    for j in 0..bench.n_questions() {
        let col: Vec<f64> = train_rows.iter().map(|&r| bench.get(r, j) as f64).collect();
        let mean = col.iter().sum::<f64>() / n;
        if item_passes(mean * (1.0 - mean), mean, pearson(&col, &totals), config) {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(Error::invalid("preprocessing dropped every item"));
    }
    Ok(kept)
}

fn cv_rmse(inputs: &[Vec<f64>], targets: &[f64], folds: &[usize], n_folds: usize, config: &MetabenchConfig) -> Result<f64> {
    let mut sq = 0.0;
    for f in 0..n_folds {
        let (mut tx, mut ty) = (Vec::new(), Vec::new());
        for (i, &fold) in folds.iter().enumerate() {
            if fold != f {
                tx.push(inputs[i].clone());
                ty.push(targets[i]);
            }
        }
        let model = PolyRidge::fit(&tx, &ty, config.degree, config.ridge)?;
        for (i, &fold) in folds.iter().enumerate() {
            if fold == f {
                sq += (model.predict(&inputs[i]) - targets[i]).powi(2);
            }
        }
    }
    Ok((sq / targets.len() as f64).sqrt())
}

/// Cross-validated subset search.
///
/// `bench` rows are the training models; `retained` are candidate columns;
/// `full_scores` is the full-benchmark score per row. Candidates are drawn
/// per `k` in grid order; the first candidate with the lowest CV RMSE wins.
pub fn metabench_subsample(
    bench: &ResponseMatrix,
    retained: &[usize],
    full_scores: &[f64],
    config: &MetabenchConfig,
    seed: u64,
) -> Result<DistillationResult> {
    let n = bench.n_models();
    if config.folds < 2 || n < config.folds {
        return Err(Error::invalid(format!(
            "{n} training models cannot be split into {} folds",
            config.folds
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % config.folds;
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for &k in &config.k_grid {
        if k == 0 || k > retained.len() {
            debug!("skipping subset size {k} with {} retained items", retained.len());
            continue;
        }
        for _ in 0..config.candidates_per_k {
            let mut subset: Vec<usize> = rng
                .sample_indices(retained.len(), k)
                .into_iter()
                .map(|i| retained[i])
                .collect();
            subset.sort_unstable();
            let inputs: Vec<Vec<f64>> = (0..n).map(|r| vec![mean_over(bench, r, &subset)]).collect();
            let rmse = cv_rmse(&inputs, full_scores, &folds, config.folds, config)?;
            if best.as_ref().is_none_or(|(b, _)| rmse < *b) {
                best = Some((rmse, subset));
            }
        }
    }
    let (rmse, selected) =
        best.ok_or_else(|| Error::invalid("every subset size exceeds the retained item count"))?;
    let inputs: Vec<Vec<f64>> = (0..n).map(|r| vec![mean_over(bench, r, &selected)]).collect();
    let model = PolyRidge::fit(&inputs, full_scores, config.degree, config.ridge)?;
    Ok(DistillationResult {
        predicted: inputs.iter().map(|x| model.predict(x)).collect(),
        coefficients: model.coefficients().to_vec(),
        selected,
        cv_rmse: rmse,
    })
}

/// Runs the full distillation pipeline per benchmark and ranks the test
/// models by the mean of their reconstructed benchmark scores.
pub fn metabench_rank(dataset: &ResponseMatrix, split: &Split, config: &MetabenchConfig) -> Result<MetabenchOutput> {
    let train_rows = rows_of(dataset, &split.train_ids)?;
    let test_rows = rows_of(dataset, &split.test_ids)?;
    let mut totals = vec![0.0; test_rows.len()];
    let mut selected_ids = BTreeMap::new();
    let by_bench = dataset.columns_by_benchmark();
    for (name, cols) in &by_bench {
        let bench = dataset.select_questions(cols)?;
        let all: Vec<usize> = (0..bench.n_questions()).collect();
        let full = |r: usize| mean_over(&bench, r, &all);

        let retained = metabench_preprocess(&bench, &train_rows, config)?;
        let train_bench = bench.select_models(&train_rows)?;
        let train_full: Vec<f64> = train_rows.iter().map(|&r| full(r)).collect();
        let seed = config.seed ^ fnv1a64(name.as_bytes());
        let distilled = metabench_subsample(&train_bench, &retained, &train_full, config, seed)?;
        let subset = &distilled.selected;

        let fit = fit_2pl(&train_bench.select_questions(subset)?, &config.irt)?;
        let features = |r: usize| -> Result<Vec<f64>> {
            let resp: Vec<u8> = subset.iter().map(|&c| bench.get(r, c)).collect();
            let theta = map_ability(&resp, &fit.items)?.theta;
            Ok(vec![theta, mean_over(&bench, r, subset)])
        };
        let train_x = train_rows.iter().map(|&r| features(r)).collect::<Result<Vec<_>>>()?;
        let predictor = PolyRidge::fit(&train_x, &train_full, config.degree, config.ridge)?;
        for (t, &r) in totals.iter_mut().zip(&test_rows) {
            *t += predictor.predict(&features(r)?);
        }
        debug!(
            "benchmark {name}: {} retained, {} selected, cv rmse {:.5}",
            retained.len(),
            subset.len(),
            distilled.cv_rmse
        );
        selected_ids.insert(
            name.clone(),
            subset.iter().map(|&c| bench.questions()[c].question_id.clone()).collect(),
        );
    }
    let nb = by_bench.len() as f64;
    let scores = split
        .test_ids
        .iter()
        .cloned()
        .zip(totals.into_iter().map(|t| t / nb))
        .collect();
    Ok(MetabenchOutput {
        ranking: rank_models(scores)?,
        selected: selected_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ModelRecord, QuestionRecord};

    fn matrix(cols: &[Vec<u8>]) -> ResponseMatrix {
        let n = cols[0].len();
        let models = (0..n)
            .map(|i| ModelRecord {
                model_id: format!("m{i:02}"),
                param_count: None,
                excluded: false,
            })
            .collect();
        let questions = (0..cols.len())
            .map(|j| QuestionRecord {
                question_id: format!("q{j}"),
                benchmark: "B".into(),
                task: "t".into(),
                weight: 1.0,
            })
            .collect();
        let mut entries = Vec::new();
        for i in 0..n {
            for c in cols {
                entries.push(c[i]);
            }
        }
        ResponseMatrix::new(models, questions, entries).unwrap()
    }

    #[test]
    fn filters_constant_and_anticorrelated_items() {
        // 8 models; strength increases with row index.
        let easy = vec![1; 8];
        let good = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let good2 = vec![0, 0, 0, 1, 0, 1, 1, 1];
        let good3 = vec![0, 0, 1, 0, 1, 1, 1, 1];
        let anti = vec![1, 1, 1, 1, 0, 0, 0, 0];
        let ds = matrix(&[easy, good, anti, good2, good3]);
        let rows: Vec<usize> = (0..8).collect();
        let kept = metabench_preprocess(&ds, &rows, &MetabenchConfig::default()).unwrap();
        assert_eq!(kept, vec![1, 3, 4]);
    }

    #[test]
    fn retains_item_with_quarter_variance_and_half_correlation() {
        let cfg = MetabenchConfig::default();
        assert!(item_passes(0.25, 0.5, 0.5, &cfg));
        assert!(!item_passes(0.005, 0.995, 0.5, &cfg));
        assert!(!item_passes(0.25, 0.5, 0.05, &cfg));

        // Same statistics from data: mean 0.5 and correlation 1/sqrt(3) with the total.
        let item = vec![0, 0, 1, 1];
        let ds = matrix(&[item.clone(), vec![1, 0, 0, 1], vec![0, 1, 0, 1]]);
        let totals: Vec<f64> = (0..4).map(|r| ds.row(r).iter().map(|&v| v as f64).sum()).collect();
        let col: Vec<f64> = item.iter().map(|&v| v as f64).collect();
        assert!((pearson(&col, &totals) - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let kept = metabench_preprocess(&ds, &[0, 1, 2, 3], &cfg).unwrap();
        assert!(kept.contains(&0));
    }

    #[test]
    fn everything_dropped_is_an_error() {
        let ds = matrix(&[vec![1; 6], vec![0; 6]]);
        assert!(metabench_preprocess(&ds, &[0, 1, 2, 3, 4, 5], &MetabenchConfig::default()).is_err());
    }

    #[test]
    fn full_subset_wins_with_zero_error() {
        let mut rng = SplitMix64::new(11);
        let cols: Vec<Vec<u8>> = (0..12)
            .map(|_| (0..30).map(|_| rng.bernoulli(0.5) as u8).collect())
            .collect();
        let ds = matrix(&cols);
        let all: Vec<usize> = (0..12).collect();
        let full: Vec<f64> = (0..30).map(|r| mean_over(&ds, r, &all)).collect();
        let cfg = MetabenchConfig {
            k_grid: vec![4, 12],
            candidates_per_k: 3,
            ridge: 1e-9,
            ..MetabenchConfig::default()
        };
        let res = metabench_subsample(&ds, &all, &full, &cfg, 1).unwrap();
        assert_eq!(res.selected, all);
        assert!(res.cv_rmse < 1e-6, "{}", res.cv_rmse);
        assert_eq!(res, metabench_subsample(&ds, &all, &full, &cfg, 1).unwrap());

        let too_big = MetabenchConfig {
            k_grid: vec![50],
            ..cfg
        };
        assert!(metabench_subsample(&ds, &all, &full, &too_big, 1).is_err());
    }
}
