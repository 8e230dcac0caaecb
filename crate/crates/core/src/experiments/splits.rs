use std::collections::HashSet;

use crate::dataset::{csv_field, ResponseMatrix};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Disjoint train/test model sets. Both lists follow dataset row order.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub descriptor: String,
}

impl Split {
    fn checked(train_ids: Vec<String>, test_ids: Vec<String>, descriptor: String) -> Result<Self> {
        if test_ids.is_empty() {
            return Err(Error::invalid(format!("split {descriptor}: empty holdout")));
        }
        if train_ids.is_empty() {
            return Err(Error::invalid(format!("split {descriptor}: empty training set")));
        }
        let train: HashSet<&String> = train_ids.iter().collect();
        if let Some(dup) = test_ids.iter().find(|id| train.contains(id)) {
            return Err(Error::invalid(format!("split {descriptor}: {dup} is in both sides")));
        }
        Ok(Self {
            train_ids,
            test_ids,
            descriptor,
        })
    }

    /// CSV `model_id,role`, train rows first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_id,role\n");
        for id in &self.train_ids {
            out.push_str(&format!("{},train\n", csv_field(id)));
        }
        for id in &self.test_ids {
            out.push_str(&format!("{},test\n", csv_field(id)));
        }
        out
    }
}

/// Reads a split file. Every id must be a dataset model when `dataset` is given.
pub fn parse_split_csv(text: &str, file: &str, dataset: Option<&ResponseMatrix>) -> Result<Split> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(file, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["model_id", "role"] {
        return Err(Error::parse(file, 1, "expected header model_id,role"));
    }
    let mut seen = HashSet::new();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(file, e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 2 {
            return Err(Error::parse(file, line, "expected 2 fields"));
        }
        let id = rec[0].to_string();
        if id.is_empty() || !seen.insert(id.clone()) {
            return Err(Error::parse(file, line, format!("empty or duplicate model_id {id:?}")));
        }
        if let Some(ds) = dataset {
            if ds.model_position(&id).is_none() {
                return Err(Error::parse(file, line, format!("model {id} is not in the dataset")));
            }
        }
        match &rec[1] {
            "train" => train.push(id),
            "test" => test.push(id),
            other => return Err(Error::parse(file, line, format!("role must be train or test, found {other:?}"))),
        }
    }
    Split::checked(train, test, format!("file:{file}"))
}

/// Models with more than `threshold_params` parameters are held out.
/// Models of unknown size are on neither side.
pub fn size_split(dataset: &ResponseMatrix, threshold_params: u64) -> Result<Split> {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for m in dataset.models() {
        match m.param_count {
            Some(p) if p > threshold_params => test.push(m.model_id.clone()),
            Some(_) => train.push(m.model_id.clone()),
            None => {}
        }
    }
    Split::checked(train, test, format!("gt-{}", human_params(threshold_params)))
}

fn human_params(p: u64) -> String {
    if p >= 1_000_000_000 && p.is_multiple_of(1_000_000_000) {
        format!("{}B", p / 1_000_000_000)
    } else if p >= 1_000_000 && p.is_multiple_of(1_000_000) {
        format!("{}M", p / 1_000_000)
    } else {
        p.to_string()
    }
}

/// Seeded uniform holdout of `round(fraction * K)` models.
pub fn random_split(dataset: &ResponseMatrix, holdout_fraction: f64, seed: u64) -> Result<Split> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::invalid("holdout fraction must lie in (0, 1)"));
    }
    let k = dataset.n_models();
    let n_test = (holdout_fraction * k as f64).round() as usize;
    if n_test < 2 {
        return Err(Error::invalid(format!(
            "holdout of {n_test} models is below the minimum of 2"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let chosen: HashSet<usize> = rng.sample_indices(k, n_test).into_iter().collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, m) in dataset.models().iter().enumerate() {
        if chosen.contains(&i) {
            test.push(m.model_id.clone());
        } else {
            train.push(m.model_id.clone());
        }
    }
    let pct = holdout_fraction * 100.0;
    let pct = (pct * 1e6).round() / 1e6;
    Split::checked(train, test, format!("random-{pct}pct-seed{seed}"))
}
