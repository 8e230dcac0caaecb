//! Benchmark scoring: normalized weighted accuracy, raw linear scores and
//! the rankings they induce.

use std::collections::BTreeMap;

use crate::dataset::{csv_field, ranks_from_scores};
use crate::error::{Error, Result};

/// A reweighted benchmark: one weight per question id.
///
/// The raw weights are always kept. `normalized` records whether they sum to
/// a positive value, in which case scores use the normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBenchmark {
    pub question_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub normalized: bool,
}

impl WeightedBenchmark {
    pub fn new(question_ids: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if question_ids.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} question ids but {} weights",
                question_ids.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("benchmark weights must be finite"));
        }
        let normalized = weights.iter().sum::<f64>() > 0.0;
        Ok(Self {
            question_ids,
            weights,
            normalized,
        })
    }

    /// All weights 1.
    pub fn uniform(question_ids: Vec<String>) -> Self {
        let n = question_ids.len();
        Self {
            question_ids,
            weights: vec![1.0; n],
            normalized: n > 0,
        }
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `w / sum(w)`, or `None` when the sum is not positive.
    pub fn normalized_weights(&self) -> Option<Vec<f64>> {
        let sum = self.weight_sum();
        (sum > 0.0).then(|| self.weights.iter().map(|w| w / sum).collect())
    }

    pub fn to_csv(&self) -> String {
        let norm = self.normalized_weights();
        let mut out = String::from("question_id,weight,normalized_weight\n");
        for (i, (id, w)) in self.question_ids.iter().zip(&self.weights).enumerate() {
            let n = norm.as_ref().map(|n| n[i].to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", csv_field(id), w, n));
        }
        out
    }

    /// Reads the export format back. The `normalized_weight` column is
    /// recomputed from the raw weights, not trusted.
    pub fn parse_csv(text: &str, file: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr
            .headers()
            .map_err(|e| Error::parse(file, 1, e.to_string()))?
            .clone();
        if header.iter().collect::<Vec<_>>() != ["question_id", "weight", "normalized_weight"] {
            return Err(Error::parse(
                file,
                1,
                "expected header question_id,weight,normalized_weight",
            ));
        }
        let mut ids = Vec::new();
        let mut weights = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                Error::parse(file, e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != 3 {
                return Err(Error::parse(file, line, "expected 3 fields"));
            }
            let id = rec[0].to_string();
            if id.is_empty() || !seen.insert(id.clone()) {
                return Err(Error::parse(file, line, format!("empty or duplicate question_id {id:?}")));
            }
            let w: f64 = rec[1]
                .parse()
                .ok()
                .filter(|w: &f64| w.is_finite())
                .ok_or_else(|| Error::parse(file, line, format!("invalid weight {:?}", &rec[1])))?;
            ids.push(id);
            weights.push(w);
        }
        Self::new(ids, weights)
    }
}

/// Model ranking induced by scores: 1 = best.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    ranks: BTreeMap<String, usize>,
    scores: BTreeMap<String, f64>,
}

impl Ranking {
    pub fn ranks(&self) -> &BTreeMap<String, usize> {
        &self.ranks
    }

    pub fn scores(&self) -> &BTreeMap<String, f64> {
        &self.scores
    }

    pub fn rank(&self, id: &str) -> Option<usize> {
        self.ranks.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Model ids from best to worst.
    pub fn ordered_ids(&self) -> Vec<String> {
        let mut v: Vec<(&String, &usize)> = self.ranks.iter().collect();
        v.sort_by_key(|(_, &r)| r);
        v.into_iter().map(|(id, _)| id.clone()).collect()
    }

    /// CSV `model_id,rank`, best first.
    pub fn ranks_csv(&self) -> String {
        let mut out = String::from("model_id,rank\n");
        for id in self.ordered_ids() {
            out.push_str(&format!("{},{}\n", csv_field(&id), self.ranks[&id]));
        }
        out
    }

    /// CSV `model_id,score`, best first.
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("model_id,score\n");
        for id in self.ordered_ids() {
            out.push_str(&format!("{},{}\n", csv_field(&id), self.scores[&id]));
        }
        out
    }
}

fn check_aligned(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!(
            "feature vector has {a} entries but weights have {b}"
        )));
    }
    Ok(())
}

/// Normalized weighted score `sum_q (w_q / sum w) x_q`.
pub fn weighted_score(x: &[f64], bench: &WeightedBenchmark) -> Result<f64> {
    check_aligned(x.len(), bench.weights.len())?;
    let sum = bench.weight_sum();
    if sum == 0.0 {
        return Err(Error::invalid("weight sum is zero; normalization undefined"));
    }
    Ok(x.iter().zip(&bench.weights).map(|(x, w)| w * x).sum::<f64>() / sum)
}

/// Unnormalized dot product of weights and features.
pub fn raw_score(x: &[f64], weights: &[f64]) -> Result<f64> {
    check_aligned(x.len(), weights.len())?;
    Ok(dot(x, weights))
}

/// Four independent accumulators so the loop vectorizes; the summation
/// order is fixed, so results stay deterministic.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Descending score order, ties by ascending model id.
pub fn rank_models(scores: BTreeMap<String, f64>) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot rank an empty model set"));
    }
    if let Some((id, _)) = scores.iter().find(|(_, s)| s.is_nan()) {
        return Err(Error::invalid(format!("score for {id} is NaN")));
    }
    Ok(Ranking {
        ranks: ranks_from_scores(&scores),
        scores,
    })
}

/// Plain accuracy: the mean of the entries.
pub fn mean_accuracy_score(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::invalid("mean accuracy of an empty vector"));
    }
    Ok(x.iter().sum::<f64>() / x.len() as f64)
}
