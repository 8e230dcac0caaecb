use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ModelRecord, QuestionRecord, ResponseMatrix, TargetRanking};
use crate::error::{Error, Result};
use crate::irt::{irf_2pl, ItemParams};
use crate::ltr::WeightVector;
use crate::rng::SplitMix64;
use crate::scoring::{weighted_score, WeightedBenchmark};

/// Parameters of a synthetic 2PL world with a planted benchmark weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_models: usize,
    pub n_questions: usize,
    pub planted_fraction: f64,
    /// Standard deviation of Gaussian noise added to target scores.
    pub noise_sd: f64,
    pub theta_sd: f64,
    pub log_a_sd: f64,
    pub b_sd: f64,
    pub n_benchmarks: usize,
    pub tasks_per_benchmark: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_models: 600,
            n_questions: 1500,
            planted_fraction: 0.1,
            noise_sd: 0.0,
            theta_sd: 1.0,
            log_a_sd: 0.25,
            b_sd: 1.0,
            n_benchmarks: 5,
            tasks_per_benchmark: 4,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_models < 4 {
            return Err(Error::invalid("synthetic world needs at least 4 models"));
        }
        if self.n_questions < 10 {
            return Err(Error::invalid("synthetic world needs at least 10 questions"));
        }
        if !(self.planted_fraction > 0.0 && self.planted_fraction <= 1.0) {
            return Err(Error::invalid("planted_fraction must lie in (0, 1]"));
        }
        if !(self.noise_sd >= 0.0 && self.theta_sd >= 0.0 && self.log_a_sd >= 0.0 && self.b_sd >= 0.0) {
            return Err(Error::invalid("standard deviations must be nonnegative"));
        }
        if self.n_benchmarks == 0 || self.tasks_per_benchmark == 0 || self.n_benchmarks > self.n_questions {
            return Err(Error::invalid("need 1..=n_questions benchmarks and at least one task each"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    pub dataset: ResponseMatrix,
    /// Binary planted weights over all questions.
    pub planted_weights: WeightVector,
    pub target: TargetRanking,
    pub abilities: Vec<f64>,
    pub items: Vec<ItemParams>,
}

impl SynthWorld {
    pub fn planted_benchmark(&self) -> WeightedBenchmark {
        self.planted_weights
            .to_benchmark()
            .expect("planted weights are finite and aligned")
    }

    pub fn planted_weights_csv(&self) -> String {
        let mut out = String::from("question_id,weight\n");
        for (id, w) in self.planted_weights.question_ids.iter().zip(&self.planted_weights.weights) {
            out.push_str(&format!("{id},{w}\n"));
        }
        out
    }

    /// Dataset files plus `target.csv` and `planted_weights.csv`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        self.dataset.write_to_dir(dir)?;
        for (name, body) in [
            ("target.csv", self.target.to_csv()),
            ("planted_weights.csv", self.planted_weights_csv()),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn width(n: usize) -> usize {
    n.to_string().len().max(4)
}

/// Builds a world whose target ranking is exactly the ranking under the
/// planted weights (plus optional score noise).
///
/// Each component draws from its own generator forked from the seed, in
/// the order: abilities, items, responses, parameter counts, planted set,
/// target noise.
pub fn synth_generate(config: &SynthConfig) -> Result<SynthWorld> {
    config.validate()?;
    let (nm, nq) = (config.n_models, config.n_questions);
    let mut root = SplitMix64::new(config.seed);
    let mut ability_rng = root.fork();
    let mut item_rng = root.fork();
    let mut response_rng = root.fork();
    let mut size_rng = root.fork();
    let mut planted_rng = root.fork();
    let mut noise_rng = root.fork();

    let abilities: Vec<f64> = (0..nm).map(|_| config.theta_sd * ability_rng.normal()).collect();
    let items: Vec<ItemParams> = (0..nq)
        .map(|_| {
            let a = (config.log_a_sd * item_rng.normal()).exp();
            let b = config.b_sd * item_rng.normal();
            ItemParams { a, b }
        })
        .collect();
    let mut entries = Vec::with_capacity(nm * nq);
    for &theta in &abilities {
        for it in &items {
            entries.push(response_rng.bernoulli(irf_2pl(theta, it)) as u8);
        }
    }

    let mw = width(nm);
    let models: Vec<ModelRecord> = (0..nm)
        .map(|i| {
            let exponent = 9.0 + 2.0 * size_rng.next_f64();
            ModelRecord {
                model_id: format!("m{:0mw$}", i + 1),
                param_count: Some(10f64.powf(exponent).round() as u64),
                excluded: false,
            }
        })
        .collect();

    let qw = width(nq);
    let nb = config.n_benchmarks;
    let questions: Vec<QuestionRecord> = (0..nq)
        .map(|j| {
            let bench = j * nb / nq;
            let start = (bench * nq).div_ceil(nb);
            let end = ((bench + 1) * nq).div_ceil(nb);
            let task = (j - start) * config.tasks_per_benchmark / (end - start);
            QuestionRecord {
                question_id: format!("q{:0qw$}", j + 1),
                benchmark: format!("bench{}", bench + 1),
                task: format!("task{}", task + 1),
                weight: 1.0,
            }
        })
        .collect();
    let dataset = ResponseMatrix::new(models, questions, entries)?;

    let n_planted = (config.planted_fraction * nq as f64).round() as usize;
    if n_planted == 0 {
        return Err(Error::invalid("planted set is empty"));
    }
    let mut weights = vec![0.0; nq];
    for j in planted_rng.sample_indices(nq, n_planted) {
        weights[j] = 1.0;
    }
    let planted_weights = WeightVector {
        question_ids: dataset.question_ids(),
        weights,
    };
    let bench = planted_weights.to_benchmark()?;

    let mut scores = BTreeMap::new();
    for m in 0..nm {
        let mut s = weighted_score(&dataset.features(m), &bench)?;
        if config.noise_sd > 0.0 {
            s += config.noise_sd * noise_rng.normal();
        }
        scores.insert(dataset.models()[m].model_id.clone(), s);
    }
    let target = TargetRanking::from_scores(scores)?;

    Ok(SynthWorld {
        dataset,
        planted_weights,
        target,
        abilities,
        items,
    })
}
