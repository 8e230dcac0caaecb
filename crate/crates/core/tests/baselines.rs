use std::collections::BTreeMap;

use prefweight::baselines::*;
use prefweight::dataset::{ModelRecord, ResponseMatrix};
use prefweight::experiments::{random_split, synth_generate, Split, SynthConfig, SynthWorld};
use prefweight::irt::IrtFitConfig;
use prefweight::scoring::Ranking;

fn world(planted_fraction: f64) -> SynthWorld {
    synth_generate(&SynthConfig {
        n_models: 240,
        n_questions: 600,
        n_benchmarks: 2,
        planted_fraction,
        seed: 21,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn split(w: &SynthWorld) -> Split {
    random_split(&w.dataset, 0.25, 4).unwrap()
}

fn metabench_config() -> MetabenchConfig {
    MetabenchConfig {
        k_grid: vec![60, 120],
        candidates_per_k: 5,
        seed: 8,
        ..MetabenchConfig::default()
    }
}

fn tinybench_config() -> TinybenchConfig {
    TinybenchConfig {
        n_anchors: 60,
        seed: 8,
        ..TinybenchConfig::default()
    }
}

fn bytes(r: &Ranking) -> String {
    r.ranks_csv() + &r.scores_csv()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn baselines_are_deterministic() {
    let w = world(0.1);
    let s = split(&w);
    let test = w.dataset.select_model_ids(&s.test_ids).unwrap();
    let catalog = TaskCatalog::from_dataset(&w.dataset, &Default::default());
    let r1 = random_task_ranking(&test, &catalog).unwrap();
    let r2 = random_task_ranking(&test, &catalog).unwrap();
    assert_eq!(r1.0, r2.0);
    assert_eq!(bytes(&r1.1), bytes(&r2.1));

    let m1 = metabench_rank(&w.dataset, &s, &metabench_config()).unwrap();
    let m2 = metabench_rank(&w.dataset, &s, &metabench_config()).unwrap();
    assert_eq!(bytes(&m1.ranking), bytes(&m2.ranking));
    assert_eq!(m1.selected, m2.selected);

    let t1 = tinybench_rank(&w.dataset, &s, &tinybench_config()).unwrap();
    let t2 = tinybench_rank(&w.dataset, &s, &tinybench_config()).unwrap();
    assert_eq!(bytes(&t1.ranking), bytes(&t2.ranking));
    assert_eq!(t1.anchors, t2.anchors);
}

/// Rankings depend only on training responses and the test models' own
/// responses: altering the responses of other test models leaves a test
/// model's score unchanged.
#[test]
fn test_models_do_not_influence_each_other() {
    let w = world(0.1);
    let s = split(&w);
    let ds = &w.dataset;
    let flipped_row = ds.model_position(&s.test_ids[1]).unwrap();
    let mut entries = Vec::new();
    for m in 0..ds.n_models() {
        for q in 0..ds.n_questions() {
            let v = ds.get(m, q);
            entries.push(if m == flipped_row { 1 - v } else { v });
        }
    }
    let changed = ResponseMatrix::new(ds.models().to_vec(), ds.questions().to_vec(), entries).unwrap();
    let probe = &s.test_ids[0];
    let a = tinybench_rank(ds, &s, &tinybench_config()).unwrap();
    let b = tinybench_rank(&changed, &s, &tinybench_config()).unwrap();
    assert_eq!(a.ranking.scores()[probe], b.ranking.scores()[probe]);
    let a = metabench_rank(ds, &s, &metabench_config()).unwrap();
    let b = metabench_rank(&changed, &s, &metabench_config()).unwrap();
    assert_eq!(a.ranking.scores()[probe], b.ranking.scores()[probe]);
}

#[test]
fn metabench_tracks_accuracy_when_it_is_the_preference() {
    let w = world(1.0);
    let s = split(&w);
    let out = metabench_rank(&w.dataset, &s, &metabench_config()).unwrap();
    let target = w.target.restrict(&s.test_ids).unwrap();
    let (rho, _) = prefweight::metrics::spearman(&out.ranking, &target).unwrap();
    assert!(rho >= 0.9, "rho = {rho}");
}

#[test]
fn copies_of_a_training_model_score_alike() {
    let w = world(0.1);
    let ds = &w.dataset;
    let s = split(&w);
    // Two extra test models that answer exactly like a training model.
    let src = ds.model_position(&s.train_ids[0]).unwrap();
    let mut models = ds.models().to_vec();
    let mut entries: Vec<u8> = (0..ds.n_models())
        .flat_map(|m| (0..ds.n_questions()).map(move |q| ds.get(m, q)))
        .collect();
    for id in ["zz-copy-a", "zz-copy-b"] {
        models.push(ModelRecord {
            model_id: id.into(),
            param_count: None,
            excluded: false,
        });
        entries.extend((0..ds.n_questions()).map(|q| ds.get(src, q)));
    }
    let ext = ResponseMatrix::new(models, ds.questions().to_vec(), entries).unwrap();
    let mut s2 = s.clone();
    s2.test_ids.extend(["zz-copy-a".to_string(), "zz-copy-b".to_string()]);
    let m = metabench_rank(&ext, &s2, &metabench_config()).unwrap();
    assert_eq!(m.ranking.scores()["zz-copy-a"], m.ranking.scores()["zz-copy-b"]);
    let t = tinybench_rank(&ext, &s2, &tinybench_config()).unwrap();
    assert_eq!(t.ranking.scores()["zz-copy-a"], t.ranking.scores()["zz-copy-b"]);
}

#[test]
fn tinybench_estimates_track_true_accuracy() {
    let w = synth_generate(&SynthConfig {
        n_models: 300,
        n_questions: 400,
        n_benchmarks: 1,
        seed: 5,
        ..SynthConfig::default()
    })
    .unwrap();
    let s = random_split(&w.dataset, 0.2, 1).unwrap();
    let out = tinybench_rank(&w.dataset, &s, &TinybenchConfig {
        n_anchors: 100,
        ..TinybenchConfig::default()
    })
    .unwrap();
    let truth: BTreeMap<&String, f64> = s
        .test_ids
        .iter()
        .map(|id| {
            let r = w.dataset.model_position(id).unwrap();
            (id, w.dataset.features(r).iter().sum::<f64>() / 400.0)
        })
        .collect();
    let est: Vec<f64> = truth.keys().map(|id| out.ranking.scores()[*id]).collect();
    let tru: Vec<f64> = truth.values().copied().collect();
    assert!(pearson(&est, &tru) >= 0.95, "r = {}", pearson(&est, &tru));
    assert!(est.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn tinybench_with_all_items_as_anchors_is_accuracy() {
    let w = synth_generate(&SynthConfig {
        n_models: 120,
        n_questions: 40,
        n_benchmarks: 1,
        b_sd: 0.3,
        seed: 2,
        ..SynthConfig::default()
    })
    .unwrap();
    let s = random_split(&w.dataset, 0.2, 1).unwrap();
    let out = tinybench_rank(&w.dataset, &s, &TinybenchConfig {
        n_anchors: 40,
        irt: IrtFitConfig::default(),
        ..TinybenchConfig::default()
    })
    .unwrap();
    for id in &s.test_ids {
        let r = w.dataset.model_position(id).unwrap();
        let acc = w.dataset.features(r).iter().sum::<f64>() / 40.0;
        assert!((out.ranking.scores()[id] - acc).abs() < 1e-12);
    }
}

#[test]
fn no_ltr_is_accuracy_ranking() {
    let w = world(1.0);
    let r = no_ltr_ranking(&w.dataset).unwrap();
    assert_eq!(r.ranks(), w.target.ranks());
}
