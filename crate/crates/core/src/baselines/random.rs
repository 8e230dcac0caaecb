use std::collections::{BTreeMap, BTreeSet};

use crate::dataset::ResponseMatrix;
use crate::error::{Error, Result};
use crate::rng::{fnv1a64, SplitMix64};
use crate::scoring::{rank_models, Ranking};

/// Joins benchmark and task names in catalog entries.
pub const TASK_SEPARATOR: &str = " \u{2013} ";

/// Sorted, unique `benchmark – task` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCatalog {
    entries: Vec<(String, String)>,
}

impl TaskCatalog {
    /// All tasks of the dataset outside the excluded benchmarks.
    pub fn from_dataset(dataset: &ResponseMatrix, exclude_benchmarks: &BTreeSet<String>) -> Self {
        Self::from_pairs(
            dataset
                .questions()
                .iter()
                .filter(|q| !exclude_benchmarks.contains(&q.benchmark))
                .map(|q| (q.benchmark.clone(), q.task.clone())),
        )
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        let set: BTreeSet<(String, String)> = pairs.into_iter().collect();
        let mut entries: Vec<(String, String)> = set.into_iter().collect();
        entries.sort_by_key(|(b, t)| format!("{b}{TASK_SEPARATOR}{t}"));
        Self { entries }
    }

    pub fn entries(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(b, t)| format!("{b}{TASK_SEPARATOR}{t}"))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Seed derived from the catalog content: FNV-1a over the newline-joined
    /// entries.
    pub fn seed(&self) -> u64 {
        fnv1a64(self.entries().join("\n").as_bytes())
    }

    /// Index of the selected entry: first splitmix64 output of the seed,
    /// modulo the catalog size.
    pub fn selected_index(&self) -> Result<usize> {
        if self.entries.is_empty() {
            return Err(Error::invalid("task catalog is empty"));
        }
        let v = SplitMix64::new(self.seed()).next_u64();
        Ok((v % self.entries.len() as u64) as usize)
    }

    pub fn selected(&self) -> Result<(String, String)> {
        Ok(self.entries[self.selected_index()?].clone())
    }
}

/// Ranks the models of `dataset` by accuracy on one catalog task chosen
/// deterministically from the catalog content. Returns the entry name and
/// the ranking.
pub fn random_task_ranking(dataset: &ResponseMatrix, catalog: &TaskCatalog) -> Result<(String, Ranking)> {
    let (bench, task) = catalog.selected()?;
    let entry = format!("{bench}{TASK_SEPARATOR}{task}");
    let cols: Vec<usize> = dataset
        .questions()
        .iter()
        .enumerate()
        .filter(|(_, q)| q.benchmark == bench && q.task == task)
        .map(|(j, _)| j)
        .collect();
    if cols.is_empty() {
        return Err(Error::invalid(format!("selected task {entry} has no questions in the dataset")));
    }
    let scores: BTreeMap<String, f64> = dataset
        .models()
        .iter()
        .enumerate()
        .map(|(m, rec)| (rec.model_id.clone(), super::mean_over(dataset, m, &cols)))
        .collect();
    Ok((entry, rank_models(scores)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn selection_is_canonical() {
        let a = TaskCatalog::from_pairs(pairs(&[("MMLU Pro", "Math"), ("BBH", "dyck"), ("MuSR", "team")]));
        let b = TaskCatalog::from_pairs(pairs(&[("MuSR", "team"), ("MMLU Pro", "Math"), ("BBH", "dyck"), ("BBH", "dyck")]));
        assert_eq!(a, b);
        assert_eq!(a.selected().unwrap(), b.selected().unwrap());
        assert_eq!(a.entries()[1], "MMLU Pro \u{2013} Math");
    }

    #[test]
    fn seed_is_fnv_of_joined_entries() {
        let c = TaskCatalog::from_pairs(pairs(&[("B", "t2"), ("A", "t1")]));
        assert_eq!(c.seed(), fnv1a64("A \u{2013} t1\nB \u{2013} t2".as_bytes()));
        let expect = (SplitMix64::new(c.seed()).next_u64() % 2) as usize;
        assert_eq!(c.selected_index().unwrap(), expect);
    }

    #[test]
    fn singleton_catalog_selects_it() {
        let c = TaskCatalog::from_pairs(pairs(&[("GPQA", "main")]));
        assert_eq!(c.selected().unwrap(), ("GPQA".to_string(), "main".to_string()));
        assert!(TaskCatalog::from_pairs(Vec::new()).selected().is_err());
    }
}
