//! Lambda weights: how much each ordered pair counts under the NDCG-style
//! schemes. Gains are linear in relevance and normalized by the ideal DCG.

use super::{LossConfig, LossVariant, OrderedPair};
use crate::error::{Error, Result};

/// Position discount `log2(1 + k)` for 1-based position `k`.
pub fn discount(position: usize) -> f64 {
    (1.0 + position as f64).log2()
}

/// 1-based positions under descending scores; ties go to the lower index.
pub fn current_rank_positions(scores: &[f64]) -> Result<Vec<usize>> {
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut pos = vec![0; scores.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p + 1;
    }
    Ok(pos)
}

/// Normalized gains `G_i = y_i / maxDCG` together with the discount function.
pub fn gains_and_discounts(relevance: &[f64]) -> (Vec<f64>, fn(usize) -> f64) {
    let mut sorted = relevance.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let max_dcg: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, y)| y / discount(k + 1))
        .sum();
    let gains = if max_dcg == 0.0 {
        vec![0.0; relevance.len()]
    } else {
        relevance.iter().map(|y| y / max_dcg).collect()
    };
    (gains, discount)
}

fn lambdarank(gains: &[f64], positions: &[usize], i: usize, j: usize) -> f64 {
    (gains[i] - gains[j]).abs() * (1.0 / discount(positions[i]) - 1.0 / discount(positions[j])).abs()
}

fn ndcg2(gains: &[f64], positions: &[usize], i: usize, j: usize) -> f64 {
    let delta = positions[i].abs_diff(positions[j]);
    if delta == 0 {
        return 0.0;
    }
    (gains[i] - gains[j]).abs() * (1.0 / discount(delta) - 1.0 / discount(delta + 1)).abs()
}

/// Nonnegative weight of `pair` under the configured scheme.
pub fn pair_weight(config: &LossConfig, gains: &[f64], positions: &[usize], pair: OrderedPair) -> f64 {
    let (i, j) = (pair.preferred, pair.other);
    match config.variant {
        LossVariant::RankNet => 1.0,
        LossVariant::LambdaRank => lambdarank(gains, positions, i, j),
        LossVariant::NDCGLoss1 => gains[i] / discount(positions[i]),
        LossVariant::NDCGLoss2 => ndcg2(gains, positions, i, j),
        LossVariant::NDCGLoss2pp => {
            config.mu * ndcg2(gains, positions, i, j) + lambdarank(gains, positions, i, j)
        }
    }
}

pub fn pair_weights(config: &LossConfig, gains: &[f64], positions: &[usize], batch: &[OrderedPair]) -> Vec<f64> {
    batch
        .iter()
        .map(|&p| pair_weight(config, gains, positions, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(i: usize, j: usize) -> OrderedPair {
        OrderedPair {
            preferred: i,
            other: j,
        }
    }

    #[test]
    fn positions_examples() {
        assert_eq!(current_rank_positions(&[0.1, 0.9]).unwrap(), vec![2, 1]);
        assert_eq!(current_rank_positions(&[0.5, 0.5]).unwrap(), vec![1, 2]);
        assert_eq!(current_rank_positions(&[3., 2., 1.]).unwrap(), vec![1, 2, 3]);
        assert!(current_rank_positions(&[f64::NAN]).is_err());
    }

    #[test]
    fn gains_examples() {
        let (g, d) = gains_and_discounts(&[1.0, 0.0]);
        assert_eq!(d(1), 1.0);
        assert_eq!(g, vec![1.0, 0.0]);
        let (g, _) = gains_and_discounts(&[0.0, 0.0, 0.0]);
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn weight_examples() {
        let ranknet = LossConfig::default();
        assert_eq!(pair_weight(&ranknet, &[0.3, 0.1], &[2, 1], pair(0, 1)), 1.0);

        let lr = LossConfig::with_variant(LossVariant::LambdaRank);
        assert_eq!(pair_weight(&lr, &[0.4, 0.4], &[1, 2], pair(0, 1)), 0.0);

        let n2 = LossConfig::with_variant(LossVariant::NDCGLoss2);
        let w = pair_weight(&n2, &[1.0, 0.0], &[1, 2], pair(0, 1));
        assert!((w - 0.369_070_246_428_542_5).abs() < 1e-12, "{w}");

        let pp = LossConfig::with_variant(LossVariant::NDCGLoss2pp);
        let gains = [0.7, 0.2, 0.1];
        let pos = [3, 1, 2];
        let expect = 10.0 * pair_weight(&n2, &gains, &pos, pair(0, 2))
            + pair_weight(&lr, &gains, &pos, pair(0, 2));
        assert_eq!(pair_weight(&pp, &gains, &pos, pair(0, 2)), expect);

        let n1 = LossConfig::with_variant(LossVariant::NDCGLoss1);
        assert_eq!(pair_weight(&n1, &gains, &pos, pair(0, 1)), 0.7 / 2.0);
    }
}
