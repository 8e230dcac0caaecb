//! Ranking agreement metrics: pairwise accuracy and Spearman correlation,
//! each with a 95% half-width.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::TargetRanking;
use crate::error::{Error, Result};
use crate::scoring::Ranking;

const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub acc_pair: f64,
    pub acc_pair_halfwidth: f64,
    pub spearman: f64,
    pub spearman_halfwidth: f64,
    pub n_models: usize,
    pub n_pairs: usize,
}

impl EvalReport {
    /// Pretty JSON object with the six fields, newline-terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Rank vectors of both rankings over the same ordered model set.
fn aligned(predicted: &BTreeMap<String, usize>, target: &BTreeMap<String, usize>) -> Result<(Vec<f64>, Vec<f64>)> {
    if predicted.len() != target.len() || predicted.keys().zip(target.keys()).any(|(a, b)| a != b) {
        return Err(Error::invalid("predicted and target rankings cover different models"));
    }
    Ok((
        predicted.values().map(|&r| r as f64).collect(),
        target.values().map(|&r| r as f64).collect(),
    ))
}

/// 95% binomial half-width over `n` pairs.
pub fn binomial_halfwidth(p: f64, n_pairs: usize) -> f64 {
    Z95 * (p * (1.0 - p) / n_pairs as f64).sqrt()
}

/// Delta-method 95% half-width of a correlation over `k` items.
///
/// Needs at least 4 items; below that the interval is reported as 2, which
/// covers the whole range of the coefficient.
pub fn spearman_halfwidth(rho: f64, k: usize) -> f64 {
    if k < 4 {
        return 2.0;
    }
    Z95 * (1.0 - rho * rho) / ((k - 3) as f64).sqrt()
}

/// Fraction of unordered model pairs ordered the same way by both rankings.
pub fn acc_pair(predicted: &Ranking, target: &TargetRanking) -> Result<(f64, f64)> {
    let (p, t) = aligned(predicted.ranks(), target.ranks())?;
    let k = p.len();
    if k < 2 {
        return Err(Error::invalid("pairwise accuracy needs at least 2 models"));
    }
    let mut agree = 0usize;
    for i in 0..k {
        for j in (i + 1)..k {
            agree += ((p[i] < p[j]) == (t[i] < t[j])) as usize;
        }
    }
    let n = k * (k - 1) / 2;
    let value = agree as f64 / n as f64;
    Ok((value, binomial_halfwidth(value, n)))
}

/// Average ranks (1-based) with ties sharing the mean position.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation and its delta-method half-width.
pub fn spearman(predicted: &Ranking, target: &TargetRanking) -> Result<(f64, f64)> {
    let (p, t) = aligned(predicted.ranks(), target.ranks())?;
    if p.len() < 2 {
        return Err(Error::invalid("Spearman correlation needs at least 2 models"));
    }
    let rho = pearson(&average_ranks(&p), &average_ranks(&t));
    Ok((rho, spearman_halfwidth(rho, p.len())))
}

pub fn evaluate(predicted: &Ranking, target: &TargetRanking) -> Result<EvalReport> {
    let (acc, acc_hw) = acc_pair(predicted, target)?;
    let (rho, rho_hw) = spearman(predicted, target)?;
    let k = predicted.len();
    Ok(EvalReport {
        acc_pair: acc,
        acc_pair_halfwidth: acc_hw,
        spearman: rho,
        spearman_halfwidth: rho_hw,
        n_models: k,
        n_pairs: k * (k - 1) / 2,
    })
}
