use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::warn;

use super::config::{ExperimentConfig, SplitSpec};
use super::output::{file_sha256, sha256_hex, Artifacts, Manifest};
use super::{BaselineName, SweepAxis};
use crate::baselines::{metabench_rank, no_ltr_ranking, random_task_ranking, tinybench_rank, TaskCatalog};
use crate::dataset::{
    csv_field, filter_benchmarks, filter_models, load_dataset, load_target_ranking, ResponseMatrix, TargetRanking,
};
use crate::error::{Error, Result};
use crate::experiments::{
    model_sweep, parse_split_csv, question_sweep, random_split, size_split, synth_generate, Split,
};
use crate::ltr::{apply_benchmark, train, LossConfig, LossVariant};
use crate::metrics::{evaluate, EvalReport};
use crate::scoring::{Ranking, WeightedBenchmark};

/// Inputs shared by every data-driven command.
pub struct Prepared {
    /// Corpus after benchmark and model exclusions.
    pub dataset: ResponseMatrix,
    pub split: Split,
    pub target: Option<TargetRanking>,
    /// File name -> sha256 of every file read.
    pub inputs: BTreeMap<String, String>,
}

impl Prepared {
    pub fn load(config: &ExperimentConfig, need_target: bool) -> Result<Self> {
        let paths = config.data()?;
        let raw = load_dataset(&paths.models, &paths.questions, &paths.responses)?;
        let mut inputs = BTreeMap::new();
        for p in [&paths.models, &paths.questions, &paths.responses] {
            inputs.insert(file_label(p), file_sha256(p)?);
        }

        let present: BTreeSet<String> = raw.benchmarks().into_iter().collect();
        let (exclude, absent): (BTreeSet<String>, BTreeSet<String>) = config
            .exclude_benchmarks
            .iter()
            .cloned()
            .partition(|b| present.contains(b));
        for b in absent {
            warn!("excluded benchmark {b} is not in the corpus");
        }
        let dataset = filter_benchmarks(&raw, &exclude)?;
        let mut drop_models = config.exclude_models.clone();
        drop_models.extend(dataset.flagged_excluded());
        let dataset = if drop_models.is_empty() {
            dataset
        } else {
            filter_models(&dataset, &drop_models)?
        };

        let target = match (&config.target, need_target) {
            (Some(p), _) => {
                inputs.insert(file_label(p), file_sha256(p)?);
                Some(load_target_ranking(p, &raw)?)
            }
            (None, true) => return Err(Error::invalid("config has no target ranking path")),
            (None, false) => None,
        };

        let split = match &config.split {
            SplitSpec::None => Split {
                train_ids: dataset.model_ids(),
                test_ids: dataset.model_ids(),
                descriptor: "all".into(),
            },
            SplitSpec::Size { threshold } => size_split(&dataset, *threshold)?,
            SplitSpec::Random { fraction, seed } => random_split(&dataset, *fraction, seed.unwrap_or(config.seed))?,
            SplitSpec::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                inputs.insert(file_label(path), sha256_hex(text.as_bytes()));
                parse_split_csv(&text, &path.display().to_string(), Some(&dataset))?
            }
        };
        Ok(Self {
            dataset,
            split,
            target,
            inputs,
        })
    }

    pub fn train_set(&self) -> Result<ResponseMatrix> {
        self.dataset.select_model_ids(&self.split.train_ids)
    }

    pub fn test_set(&self) -> Result<ResponseMatrix> {
        self.dataset.select_model_ids(&self.split.test_ids)
    }

    fn target(&self) -> Result<&TargetRanking> {
        self.target
            .as_ref()
            .ok_or_else(|| Error::invalid("config has no target ranking path"))
    }
}

fn file_label(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Corpus counts as printed by `validate`.
pub fn cmd_validate(config: &ExperimentConfig) -> Result<String> {
    let p = Prepared::load(config, false)?;
    let ds = &p.dataset;
    let mut out = String::new();
    let tasks: BTreeSet<(&str, &str)> = ds
        .questions()
        .iter()
        .map(|q| (q.benchmark.as_str(), q.task.as_str()))
        .collect();
    writeln!(out, "models: {}", ds.n_models()).unwrap();
    writeln!(out, "questions: {}", ds.n_questions()).unwrap();
    writeln!(out, "benchmarks: {}", ds.benchmarks().len()).unwrap();
    writeln!(out, "tasks: {}", tasks.len()).unwrap();
    for (name, cols) in ds.columns_by_benchmark() {
        let n_tasks = tasks.iter().filter(|(b, _)| *b == name).count();
        writeln!(out, "  {name}: {} questions, {n_tasks} tasks", cols.len()).unwrap();
    }
    writeln!(
        out,
        "split {}: {} train, {} test",
        p.split.descriptor,
        p.split.train_ids.len(),
        p.split.test_ids.len()
    )
    .unwrap();
    if let Some(t) = &p.target {
        writeln!(out, "target: {} models", t.len()).unwrap();
    }
    Ok(out)
}

/// `benchmark.csv`, `trace.csv`, `split.csv` and `manifest.json`.
pub fn cmd_train(config: &ExperimentConfig, config_sha256: &str) -> Result<Artifacts> {
    let p = Prepared::load(config, true)?;
    let train_ds = p.train_set()?;
    let target = p.target()?.restrict(&p.split.train_ids)?;
    let out = train(&train_ds, &target, &config.ltr.loss, &config.ltr.train)?;

    let mut a = Artifacts::new();
    a.add("benchmark.csv", out.weights.to_benchmark()?.to_csv());
    a.add("trace.csv", out.trace_csv());
    a.add("split.csv", p.split.to_csv());
    let outputs = a
        .paths()
        .map(|path| (path.display().to_string(), sha256_hex(a.get(path).unwrap().as_bytes())))
        .collect();
    let manifest = Manifest {
        command: "train".into(),
        config_sha256: config_sha256.into(),
        seed: config.seed,
        inputs: p.inputs,
        outputs,
    };
    a.add("manifest.json", manifest.to_json());
    Ok(a)
}

fn ranking_artifacts(ranking: &Ranking) -> Artifacts {
    let mut a = Artifacts::new();
    a.add("ranking.csv", ranking.ranks_csv());
    a.add("scores.csv", ranking.scores_csv());
    a
}

/// Applies a weighted benchmark file to the test models.
pub fn cmd_evaluate(config: &ExperimentConfig, benchmark: &Path) -> Result<(Artifacts, EvalReport)> {
    let text = std::fs::read_to_string(benchmark).map_err(|e| Error::io(benchmark, e))?;
    let bench = WeightedBenchmark::parse_csv(&text, &benchmark.display().to_string())?;
    let p = Prepared::load(config, true)?;
    let ranking = apply_benchmark(&bench, &p.test_set()?)?;
    let report = evaluate(&ranking, &p.target()?.restrict(&p.split.test_ids)?)?;
    let mut a = Artifacts::new();
    a.nest("evaluate", ranking_artifacts(&ranking));
    a.add("evaluate/report.json", report.to_json());
    Ok((a, report))
}

/// Runs one baseline on the test side. The target ranking is read only to
/// write `report.json`; the ranking itself never depends on it.
pub fn cmd_baseline(config: &ExperimentConfig, name: BaselineName) -> Result<Artifacts> {
    let p = Prepared::load(config, false)?;
    let mut a = Artifacts::new();
    let ranking = match name {
        BaselineName::NoLtr => no_ltr_ranking(&p.test_set()?)?,
        BaselineName::Random => {
            // Exclusions are already applied to the dataset.
            let catalog = TaskCatalog::from_dataset(&p.dataset, &BTreeSet::new());
            let (entry, ranking) = random_task_ranking(&p.test_set()?, &catalog)?;
            a.add("selected_task.txt", format!("{entry}\n"));
            ranking
        }
        BaselineName::Metabench => {
            let out = metabench_rank(&p.dataset, &p.split, &config.baselines.metabench)?;
            a.add("selected.csv", per_benchmark_csv(&out.selected));
            out.ranking
        }
        BaselineName::Tinybenchmarks => {
            let out = tinybench_rank(&p.dataset, &p.split, &config.baselines.tinybenchmarks)?;
            a.add("anchors.csv", per_benchmark_csv(&out.anchors));
            out.ranking
        }
    };
    a.nest("", ranking_artifacts(&ranking));
    if let Some(t) = &p.target {
        let report = evaluate(&ranking, &t.restrict(&p.split.test_ids)?)?;
        a.add("report.json", report.to_json());
    }
    let mut root = Artifacts::new();
    root.nest(Path::new("baselines").join(name.as_str()), a);
    Ok(root)
}

fn per_benchmark_csv(items: &BTreeMap<String, Vec<String>>) -> String {
    let mut out = String::from("benchmark,question_id\n");
    for (b, ids) in items {
        for id in ids {
            out.push_str(&format!("{},{}\n", csv_field(b), csv_field(id)));
        }
    }
    out
}

pub const SWEEP_HEADER: &str = "subset_size,variant,acc_pair,acc_halfwidth,spearman,spearman_halfwidth";

struct Cell {
    size: usize,
    variant: LossVariant,
    train_ids: Vec<String>,
    question_ids: Option<Vec<String>>,
}

impl Cell {
    fn dir(&self, axis: SweepAxis) -> PathBuf {
        PathBuf::from(format!("sweep_{}", axis.as_str())).join(format!("{}-{}", self.size, self.variant.name()))
    }
}

fn run_cell(p: &Prepared, config: &ExperimentConfig, target: &TargetRanking, cell: &Cell) -> Result<(Artifacts, EvalReport)> {
    let mut train_ds = p.dataset.select_model_ids(&cell.train_ids)?;
    let mut test_ds = p.test_set()?;
    if let Some(q) = &cell.question_ids {
        let cols: Vec<usize> = q
            .iter()
            .map(|id| p.dataset.question_position(id).expect("sweep ids come from the dataset"))
            .collect();
        train_ds = train_ds.select_questions(&cols)?;
        test_ds = test_ds.select_questions(&cols)?;
    }
    let loss = LossConfig {
        variant: cell.variant,
        ..config.ltr.loss
    };
    let out = train(&train_ds, &target.restrict(&cell.train_ids)?, &loss, &config.ltr.train)?;
    let bench = out.weights.to_benchmark()?;
    let report = evaluate(&apply_benchmark(&bench, &test_ds)?, &target.restrict(&p.split.test_ids)?)?;
    let mut a = Artifacts::new();
    a.add("benchmark.csv", bench.to_csv());
    a.add("trace.csv", out.trace_csv());
    a.add("report.json", report.to_json());
    Ok((a, report))
}

/// Trains every (subset, variant) cell and writes one plot-data row per
/// cell, plus each cell's artifacts in its own subdirectory. Up to `jobs`
/// cells run concurrently; the output does not depend on `jobs`.
pub fn cmd_sweep(config: &ExperimentConfig, axis: SweepAxis, jobs: usize) -> Result<Artifacts> {
    let p = Prepared::load(config, true)?;
    let target = p.target()?;
    let step = config.sweep.step;
    let mut cells = Vec::new();
    let subsets: Vec<(usize, Vec<String>, Option<Vec<String>>)> = match axis {
        SweepAxis::Models => model_sweep(&p.dataset, &p.split.train_ids, step)?
            .into_iter()
            .map(|m| (m.len(), m, None))
            .collect(),
        SweepAxis::Questions => question_sweep(&p.dataset.question_ids(), step, config.seed)?
            .into_iter()
            .map(|q| (q.len(), p.split.train_ids.clone(), Some(q)))
            .collect(),
    };
    for (size, train_ids, question_ids) in subsets {
        for &variant in &config.sweep.variants {
            cells.push(Cell {
                size,
                variant,
                train_ids: train_ids.clone(),
                question_ids: question_ids.clone(),
            });
        }
    }

    let results: Mutex<Vec<Option<Result<(Artifacts, EvalReport)>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(cells.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let r = run_cell(&p, config, target, &cells[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });

    let mut a = Artifacts::new();
    let mut csv = format!("{SWEEP_HEADER}\n");
    for (cell, r) in cells.iter().zip(results.into_inner().unwrap()) {
        let (cell_artifacts, report) = r.expect("every cell ran")?;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cell.size,
            cell.variant.name(),
            report.acc_pair,
            report.acc_pair_halfwidth,
            report.spearman,
            report.spearman_halfwidth
        ));
        a.nest(cell.dir(axis), cell_artifacts);
    }
    a.add(format!("sweep_{}.csv", axis.as_str()), csv);
    Ok(a)
}

/// World files, `target.csv`, `planted_weights.csv` and a ready-to-run
/// `config.json` pointing at them.
pub fn cmd_synth(config: &ExperimentConfig) -> Result<Artifacts> {
    let world = synth_generate(&config.synth)?;
    let mut a = Artifacts::new();
    a.add("models.csv", world.dataset.models_csv());
    a.add("questions.csv", world.dataset.questions_csv());
    a.add("responses.csv", world.dataset.responses_csv());
    a.add("target.csv", world.target.to_csv());
    a.add("planted_weights.csv", world.planted_weights_csv());
    a.add("planted_benchmark.csv", world.planted_benchmark().to_csv());
    let runnable = serde_json::json!({
        "data": {"models": "models.csv", "questions": "questions.csv", "responses": "responses.csv"},
        "target": "target.csv",
        "exclude_benchmarks": [],
        "split": {"kind": "random", "fraction": 0.1},
        "output_dir": "out",
        "seed": config.seed,
    });
    a.add(
        "config.json",
        format!("{}\n", serde_json::to_string_pretty(&runnable).expect("json")),
    );
    Ok(a)
}
