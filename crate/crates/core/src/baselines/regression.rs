//! Polynomial ridge regression on standardized inputs, used as the score
//! predictor of the distillation baseline.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Exponent tuples of all monomials in `dims` variables with total degree
/// at most `degree`, constant term first.
fn monomials(dims: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(dims: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dims {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(dims, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dims, degree, &mut Vec::new(), &mut out);
    out.sort_by_key(|m| (m.iter().sum::<usize>(), std::cmp::Reverse(m.clone())));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyRidge {
    terms: Vec<Vec<usize>>,
    means: Vec<f64>,
    scales: Vec<f64>,
    coefficients: Vec<f64>,
}

impl PolyRidge {
    /// Fits `y ~ poly(x)` minimizing squared error plus `ridge * |beta|^2`
    /// over the non-constant terms.
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64], degree: usize, ridge: f64) -> Result<Self> {
        let n = inputs.len();
        if n == 0 || n != targets.len() {
            return Err(Error::invalid("regression needs matching, nonempty inputs and targets"));
        }
        let dims = inputs[0].len();
        if inputs.iter().any(|r| r.len() != dims) {
            return Err(Error::invalid("regression inputs have ragged rows"));
        }
        let mut means = vec![0.0; dims];
        let mut scales = vec![1.0; dims];
        for d in 0..dims {
            let m = inputs.iter().map(|r| r[d]).sum::<f64>() / n as f64;
            let var = inputs.iter().map(|r| (r[d] - m).powi(2)).sum::<f64>() / n as f64;
            means[d] = m;
            if var > 1e-24 {
                scales[d] = var.sqrt();
            }
        }
        let terms = monomials(dims, degree);
        let mut model = Self {
            terms,
            means,
            scales,
            coefficients: Vec::new(),
        };
        let p = model.terms.len();
        let design = DMatrix::from_fn(n, p, |i, j| model.basis(&inputs[i])[j]);
        let mut gram = design.transpose() * &design;
        for j in 1..p {
            gram[(j, j)] += ridge;
        }
        let rhs = design.transpose() * DVector::from_column_slice(targets);
        let beta = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::invalid("regression normal equations are singular"))?,
        };
        model.coefficients = beta.iter().copied().collect();
        Ok(model)
    }

    fn basis(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        self.terms
            .iter()
            .map(|t| t.iter().zip(&z).map(|(&e, &zi)| zi.powi(e as i32)).product())
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.basis(x)
            .iter()
            .zip(&self.coefficients)
            .map(|(b, c)| b * c)
            .sum()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}
