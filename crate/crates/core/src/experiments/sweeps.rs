use crate::dataset::ResponseMatrix;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

fn prefixes<T: Clone>(items: &[T], step: usize) -> Result<Vec<Vec<T>>> {
    if step == 0 {
        return Err(Error::invalid("sweep step must be positive"));
    }
    let mut out = Vec::new();
    let mut size = step;
    while size < items.len() {
        out.push(items[..size].to_vec());
        size += step;
    }
    if !items.is_empty() {
        out.push(items.to_vec());
    }
    Ok(out)
}

/// Nested training subsets of the smallest models first: sizes `step`,
/// `2 * step`, ..., all. Models are ordered by `(param_count, model_id)`.
pub fn model_sweep(dataset: &ResponseMatrix, train_ids: &[String], step: usize) -> Result<Vec<Vec<String>>> {
    let mut keyed = Vec::with_capacity(train_ids.len());
    for id in train_ids {
        let pos = dataset
            .model_position(id)
            .ok_or_else(|| Error::invalid(format!("unknown model {id}")))?;
        let pc = dataset.models()[pos]
            .param_count
            .ok_or_else(|| Error::invalid(format!("model {id} has no parameter count to sort by")))?;
        keyed.push((pc, id.clone()));
    }
    keyed.sort();
    let ordered: Vec<String> = keyed.into_iter().map(|(_, id)| id).collect();
    prefixes(&ordered, step)
}

/// Nested question subsets over one seeded shuffle of `question_ids`.
pub fn question_sweep(question_ids: &[String], step: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    let mut order = question_ids.to_vec();
    SplitMix64::new(seed).shuffle(&mut order);
    prefixes(&order, step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_schedule() {
        let items: Vec<usize> = (0..250).collect();
        let sizes: Vec<usize> = prefixes(&items, 100).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![100, 200, 250]);
        let sizes: Vec<usize> = prefixes(&items, 250).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![250]);
        assert_eq!(prefixes(&items, 1000).unwrap().len(), 1);
        assert!(prefixes(&items, 0).is_err());
    }

    #[test]
    fn question_sweep_is_nested_and_seeded() {
        let ids: Vec<String> = (0..150).map(|i| format!("q{i}")).collect();
        let a = question_sweep(&ids, 100, 3).unwrap();
        assert_eq!(a.iter().map(Vec::len).collect::<Vec<_>>(), vec![100, 150]);
        assert_eq!(a[1][..100], a[0][..]);
        assert_eq!(a, question_sweep(&ids, 100, 3).unwrap());
        assert_ne!(a, question_sweep(&ids, 100, 4).unwrap());
    }
}
