use super::{FeatureMatrix, LossConfig, OrderedPair};

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + e^z)`, stable for large `|z|`.
fn logistic_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Weighted logistic loss for one ordered pair:
/// `w * ln(1 + exp(-sigma * (y_i - y_j - margin)))`.
pub fn pair_loss(config: &LossConfig, y_hat_i: f64, y_hat_j: f64, pair_weight: f64) -> f64 {
    pair_weight * softplus(-config.sigma * (y_hat_i - y_hat_j - config.margin))
}

/// Mean weighted pair loss over `batch` with precomputed pair weights.
pub fn batch_loss(
    weights: &[f64],
    features: &FeatureMatrix,
    batch: &[OrderedPair],
    pair_weights: &[f64],
    config: &LossConfig,
) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let total: f64 = batch
        .iter()
        .zip(pair_weights)
        .map(|(p, &w)| {
            let yi = features.score(p.preferred, weights);
            let yj = features.score(p.other, weights);
            pair_loss(config, yi, yj, w)
        })
        .sum();
    total / batch.len() as f64
}

/// Gradient of [`batch_loss`] with respect to the weights, pair weights held
/// constant.
///
/// Pairs are first folded into one coefficient per model so the feature rows
/// are visited once each.
pub fn batch_gradient(
    weights: &[f64],
    features: &FeatureMatrix,
    batch: &[OrderedPair],
    pair_weights: &[f64],
    config: &LossConfig,
) -> Vec<f64> {
    let mut grad = vec![0.0; weights.len()];
    if batch.is_empty() {
        return grad;
    }
    let mut coef: Vec<(usize, f64)> = Vec::with_capacity(2 * batch.len());
    // Each model's score is computed once per batch.
    let mut cache: Vec<Option<f64>> = vec![None; features.rows()];
    let mut score = |m: usize| *cache[m].get_or_insert_with(|| features.score(m, weights));
    for (p, &w) in batch.iter().zip(pair_weights) {
        if w == 0.0 {
            continue;
        }
        let diff = score(p.preferred) - score(p.other);
        // d/d(diff) of softplus(-sigma (diff - m)) = -sigma / (1 + exp(sigma (diff - m)))
        let g = -w * config.sigma * logistic_neg(config.sigma * (diff - config.margin));
        coef.push((p.preferred, g));
        coef.push((p.other, -g));
    }
    coef.sort_by_key(|&(m, _)| m);
    let scale = 1.0 / batch.len() as f64;
    let mut idx = 0;
    while idx < coef.len() {
        let model = coef[idx].0;
        let mut c = 0.0;
        while idx < coef.len() && coef[idx].0 == model {
            c += coef[idx].1;
            idx += 1;
        }
        if c != 0.0 {
            let c = c * scale;
            for (g, x) in grad.iter_mut().zip(features.row(model)) {
                *g += c * x;
            }
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltr::LossConfig;

    #[test]
    fn loss_examples() {
        let c = LossConfig::default();
        assert!((pair_loss(&c, 0.3, 0.3, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((pair_loss(&c, 1.0, 0.0, 1.0) - 0.313_261_687_518_222_9).abs() < 1e-15);
        let big = pair_loss(&c, 1000.0, 0.0, 1.0);
        assert!(big.is_finite() && big < 1e-300);
        let neg = pair_loss(&c, -1000.0, 0.0, 1.0);
        assert!((neg - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn loss_at_margin_is_ln2_and_bias_free() {
        let c = LossConfig {
            margin: 0.7,
            ..LossConfig::default()
        };
        assert!((pair_loss(&c, 1.7, 1.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        for d in [-3.0, -0.1, 0.0, 2.5] {
            let a = pair_loss(&c, d, 0.0, 1.0);
            let b = pair_loss(&c, d + 41.0, 41.0, 1.0);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_features_give_zero_gradient() {
        let x = FeatureMatrix::new(2, 3, vec![1., 0., 1., 1., 0., 1.]);
        let batch = [OrderedPair { preferred: 0, other: 1 }];
        let g = batch_gradient(&[0.0; 3], &x, &batch, &[1.0], &LossConfig::default());
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let x = FeatureMatrix::new(3, 2, vec![1., 0., 0., 1., 1., 1.]);
        let w = [0.2, -0.4];
        let batch = [
            OrderedPair { preferred: 0, other: 1 },
            OrderedPair { preferred: 2, other: 1 },
        ];
        let doubled: Vec<_> = batch.iter().chain(batch.iter()).copied().collect();
        let c = LossConfig::default();
        let g1 = batch_gradient(&w, &x, &batch, &[1.0, 0.5], &c);
        let g2 = batch_gradient(&w, &x, &doubled, &[1.0, 0.5, 1.0, 0.5], &c);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
