use crate::dataset::TargetRanking;
use crate::error::{Error, Result};

/// Model `preferred` ranks strictly ahead of model `other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrderedPair {
    pub preferred: usize,
    pub other: usize,
}

/// All ordered pairs `(i, j)` with `ranks[i] < ranks[j]`, generated in
/// row-major `(i, j)` order.
pub fn generate_pairs(ranks: &[usize]) -> Vec<OrderedPair> {
    let k = ranks.len();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in 0..k {
            if ranks[i] < ranks[j] {
                out.push(OrderedPair {
                    preferred: i,
                    other: j,
                });
            }
        }
    }
    out
}

/// Pairs over `model_ids` (indices refer to positions in that slice).
pub fn generate_pairs_for<S: AsRef<str>>(target: &TargetRanking, model_ids: &[S]) -> Result<Vec<OrderedPair>> {
    let ranks = model_ids
        .iter()
        .map(|id| {
            target
                .rank(id.as_ref())
                .ok_or_else(|| Error::invalid(format!("model {} has no target rank", id.as_ref())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(generate_pairs(&ranks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn three_models() {
        let p = generate_pairs(&[1, 2, 3]);
        let got: Vec<_> = p.iter().map(|p| (p.preferred, p.other)).collect();
        assert_eq!(got, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn single_model_has_no_pairs() {
        assert!(generate_pairs(&[1]).is_empty());
    }

    #[test]
    fn pair_count_142() {
        let ranks: Vec<usize> = (1..=142).rev().collect();
        assert_eq!(generate_pairs(&ranks).len(), 10011);
    }

    #[test]
    fn random_orders_are_oriented() {
        let mut rng = SplitMix64::new(5);
        for k in 1..=50usize {
            let mut ranks: Vec<usize> = (1..=k).collect();
            rng.shuffle(&mut ranks);
            let pairs = generate_pairs(&ranks);
            assert_eq!(pairs.len(), k * (k - 1) / 2);
            assert!(pairs.iter().all(|p| ranks[p.preferred] < ranks[p.other]));
        }
    }
}
