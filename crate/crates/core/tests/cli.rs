use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use prefweight::metrics::EvalReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prefweight"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small synthetic world written by the `synth` verb, plus an experiment
/// config for it.
fn world(dir: &Path, seed: u64) -> PathBuf {
    let synth_cfg = dir.join("synth.json");
    fs::write(
        &synth_cfg,
        format!(
            r#"{{"seed": {seed}, "synth": {{"n_models": 60, "n_questions": 120, "n_benchmarks": 2}}, "output_dir": "world"}}"#
        ),
    )
    .unwrap();
    ok(&["synth", "--config", s(&synth_cfg)]);
    let world = dir.join("world");
    let cfg = world.join("experiment.json");
    fs::write(
        &cfg,
        r#"{
  "data": {"models": "models.csv", "questions": "questions.csv", "responses": "responses.csv"},
  "target": "target.csv",
  "split": {"kind": "random", "fraction": 0.2},
  "ltr": {"train": {"epochs": 3, "batch_size": 64, "learning_rate": 0.001}},
  "baselines": {
    "metabench": {"k_grid": [10, 20], "candidates_per_k": 3},
    "tinybenchmarks": {"n_anchors": 10}
  },
  "sweep": {"step": 25, "variants": ["RankNet", "LambdaRank"]},
  "output_dir": "out",
  "seed": 1
}
"#,
    )
    .unwrap();
    cfg
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn synth_is_deterministic_and_writes_a_runnable_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    world(a.path(), 9);
    world(b.path(), 9);
    for f in ["models.csv", "questions.csv", "responses.csv", "target.csv", "planted_weights.csv", "config.json"] {
        assert_eq!(read(a.path().join("world").join(f)), read(b.path().join("world").join(f)), "{f}");
    }
    let out = ok(&["validate", "--config", s(&a.path().join("world/config.json"))]);
    assert!(out.contains("models: 60"), "{out}");
}

#[test]
fn validate_prints_counts_and_names_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = world(dir.path(), 1);
    let out = ok(&["validate", "--config", s(&cfg)]);
    assert!(out.contains("models: 60"));
    assert!(out.contains("questions: 120"));
    assert!(out.contains("benchmarks: 2"));
    assert!(out.contains("tasks: 8"), "{out}");

    let responses = dir.path().join("world/responses.csv");
    let text = read(&responses);
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[3] = lines[3].replacen(",1", ",7", 1).replacen(",0", ",7", 1);
    fs::write(&responses, lines.join("\n") + "\n").unwrap();
    let out = run(&["validate", "--config", s(&cfg)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("responses.csv:4"), "{err}");
}

#[test]
fn train_is_reproducible_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = world(dir.path(), 2);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    ok(&["train", "--config", s(&cfg), "--out", s(&out_a)]);
    ok(&["train", "--config", s(&cfg), "--out", s(&out_b)]);
    for f in ["benchmark.csv", "trace.csv", "split.csv", "manifest.json"] {
        assert_eq!(read(out_a.join(f)), read(out_b.join(f)), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(out_a.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 4);
    assert_eq!(read(out_a.join("trace.csv")).lines().count(), 5);

    // A different seed changes the weights.
    let out_c = dir.path().join("c");
    ok(&["train", "--config", s(&cfg), "--out", s(&out_c), "--seed", "2"]);
    assert_ne!(read(out_a.join("benchmark.csv")), read(out_c.join("benchmark.csv")));

    let stdout = ok(&[
        "evaluate",
        "--config",
        s(&cfg),
        "--out",
        s(&out_a),
        "--benchmark",
        s(&out_a.join("benchmark.csv")),
    ]);
    let report = EvalReport::from_json(&read(out_a.join("evaluate/report.json"))).unwrap();
    assert_eq!(stdout, report.to_json());
    assert_eq!(report.n_models, 12);
}

#[test]
fn planted_benchmark_is_perfect_and_reversal_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = world(dir.path(), 3);
    let planted = dir.path().join("world/planted_benchmark.csv");
    let out = dir.path().join("o");
    ok(&["evaluate", "--config", s(&cfg), "--out", s(&out), "--benchmark", s(&planted)]);
    let r = EvalReport::from_json(&read(out.join("evaluate/report.json"))).unwrap();
    assert_eq!((r.acc_pair, r.spearman), (1.0, 1.0));

    let target = dir.path().join("world/target.csv");
    let reversed = prefweight::dataset::parse_target_ranking(&read(&target), "t", None)
        .unwrap()
        .reversed();
    fs::write(&target, reversed.to_csv()).unwrap();
    ok(&["evaluate", "--config", s(&cfg), "--out", s(&out), "--benchmark", s(&planted)]);
    let r = EvalReport::from_json(&read(out.join("evaluate/report.json"))).unwrap();
    assert_eq!(r.acc_pair, 0.0);
}

#[test]
fn missing_target_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = world(dir.path(), 4);
    fs::remove_file(dir.path().join("world/target.csv")).unwrap();
    let out = dir.path().join("o");
    let res = run(&["train", "--config", s(&cfg), "--out", s(&out)]);
    assert!(!res.status.success());
    assert!(!out.exists());
}

#[test]
fn baselines_ignore_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = world(dir.path(), 5);
    for name in ["random", "metabench", "tinybenchmarks", "no_ltr"] {
        let with = dir.path().join(format!("with-{name}"));
        ok(&["baseline", name, "--config", s(&cfg), "--out", s(&with)]);
        assert!(with.join("baselines").join(name).join("report.json").exists());
        let again = dir.path().join(format!("again-{name}"));
        ok(&["baseline", name, "--config", s(&cfg), "--out", s(&again)]);

        let text = read(&cfg);
        let no_target = dir.path().join("world/no_target.json");
        fs::write(&no_target, text.replace("\"target\": \"target.csv\",", "")).unwrap();
        let without = dir.path().join(format!("without-{name}"));
        ok(&["baseline", name, "--config", s(&no_target), "--out", s(&without)]);
        assert!(!without.join("baselines").join(name).join("report.json").exists());
        for f in ["ranking.csv", "scores.csv"] {
            let rel = Path::new("baselines").join(name).join(f);
            assert_eq!(read(with.join(&rel)), read(without.join(&rel)), "{name} {f}");
            assert_eq!(read(with.join(&rel)), read(again.join(&rel)), "{name} {f}");
        }
    }
}

#[test]
fn unknown_baseline_lists_valid_names() {
    let out = run(&["baseline", "oracle", "--config", "unused.json"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["random", "metabench", "tinybenchmarks", "no_ltr"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn sweep_rows_and_parallel_cells_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = world(dir.path(), 6);
    let seq = dir.path().join("seq");
    let par = dir.path().join("par");
    ok(&["sweep", "questions", "--config", s(&cfg), "--out", s(&seq)]);
    ok(&["sweep", "questions", "--config", s(&cfg), "--out", s(&par), "--jobs", "4"]);
    let csv = read(seq.join("sweep_questions.csv"));
    assert_eq!(csv, read(par.join("sweep_questions.csv")));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "subset_size,variant,acc_pair,acc_halfwidth,spearman,spearman_halfwidth");
    // 120 questions in steps of 25: 25, 50, 75, 100, 120; two variants each.
    assert_eq!(lines.len(), 1 + 5 * 2);
    assert!(lines[1].starts_with("25,RankNet,"));
    assert!(lines[10].starts_with("120,LambdaRank,"));
    assert!(seq.join("sweep_questions/50-LambdaRank/report.json").exists());
}

#[test]
fn model_sweep_collapses_with_a_large_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = world(dir.path(), 7);
    let text = read(&cfg).replace("\"step\": 25", "\"step\": 1000");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("o");
    ok(&["sweep", "models", "--config", s(&cfg), "--out", s(&out)]);
    let csv = read(out.join("sweep_models.csv"));
    assert_eq!(csv.lines().count(), 1 + 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("48,RankNet,"));
}
