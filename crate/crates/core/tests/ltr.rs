use prefweight::dataset::{ModelRecord, QuestionRecord, ResponseMatrix, TargetRanking};
use prefweight::ltr::*;
use prefweight::rng::SplitMix64;

fn matrix(rows: &[Vec<u8>]) -> ResponseMatrix {
    let models = (0..rows.len())
        .map(|i| ModelRecord {
            model_id: format!("m{i}"),
            param_count: None,
            excluded: false,
        })
        .collect();
    let questions = (0..rows[0].len())
        .map(|j| QuestionRecord {
            question_id: format!("q{j}"),
            benchmark: "B".into(),
            task: "t".into(),
            weight: 1.0,
        })
        .collect();
    ResponseMatrix::new(models, questions, rows.concat()).unwrap()
}

fn target(order: &[usize]) -> TargetRanking {
    TargetRanking::from_ranks(
        order
            .iter()
            .enumerate()
            .map(|(r, &m)| (format!("m{m}"), r + 1))
            .collect(),
    )
    .unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central differences of the batch loss with the pair weights held fixed.
fn numeric_gradient(w: &[f64], x: &FeatureMatrix, batch: &[OrderedPair], pw: &[f64], cfg: &LossConfig) -> Vec<f64> {
    let h = 1e-6;
    (0..w.len())
        .map(|k| {
            let mut up = w.to_vec();
            let mut down = w.to_vec();
            up[k] += h;
            down[k] -= h;
            (batch_loss(&up, x, batch, pw, cfg) - batch_loss(&down, x, batch, pw, cfg)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = SplitMix64::new(2024);
    for variant in LossVariant::ALL {
        for instance in 0..20 {
            let (m, n) = (5, 8);
            let data: Vec<f64> = (0..m * n).map(|_| rng.bernoulli(0.5) as u8 as f64).collect();
            let x = FeatureMatrix::new(m, n, data);
            let w: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let mut order: Vec<usize> = (0..m).collect();
            rng.shuffle(&mut order);
            let mut ranks = vec![0; m];
            for (r, &i) in order.iter().enumerate() {
                ranks[i] = r + 1;
            }
            let cfg = LossConfig {
                sigma: rng.uniform(0.5, 2.0),
                margin: rng.uniform(0.0, 0.5),
                ..LossConfig::with_variant(variant)
            };
            let pairs = generate_pairs(&ranks);
            let (gains, _) = gains_and_discounts(&relevance_labels(&ranks));
            let positions = current_rank_positions(&x.scores(&w)).unwrap();
            let pw = pair_weights(&cfg, &gains, &positions, &pairs);

            let analytic = batch_gradient(&w, &x, &pairs, &pw, &cfg);
            let numeric = numeric_gradient(&w, &x, &pairs, &pw, &cfg);
            let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
            let scale = norm(&analytic).max(norm(&numeric));
            let rel = if scale == 0.0 { 0.0 } else { norm(&diff) / scale };
            assert!(rel <= 1e-5, "{variant} instance {instance}: relative error {rel}");
        }
    }
}

#[test]
fn separable_toy_is_learned() {
    // Correctness on q0 splits the top two models from the rest; q1 and q2
    // only break ties inside the groups, so a perfect order needs
    // w0 > w1 > w2 > 0.
    let ds = matrix(&[
        vec![1, 1, 0],
        vec![1, 0, 0],
        vec![0, 1, 0],
        vec![0, 0, 1],
        vec![0, 0, 0],
    ]);
    let t = target(&[0, 1, 2, 3, 4]);
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        epochs: 2000,
        batch_size: 10,
        ..TrainConfig::default()
    };
    let out = train(&ds, &t, &LossConfig::default(), &cfg).unwrap();
    assert_eq!(out.trace.last().unwrap().train_acc_pair, 1.0);
    let w = &out.weights.weights;
    let largest = (0..w.len()).max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs())).unwrap();
    assert_eq!(largest, 0);
    assert!(w[0] > 0.0);

    // Exhaustive check of the induced order.
    let ranking = apply_benchmark(&out.weights.to_benchmark().unwrap(), &ds).unwrap();
    assert_eq!(ranking.ordered_ids(), vec!["m0", "m1", "m2", "m3", "m4"]);
}

fn small_world() -> (ResponseMatrix, TargetRanking) {
    let mut rng = SplitMix64::new(11);
    let rows: Vec<Vec<u8>> = (0..12)
        .map(|_| (0..20).map(|_| rng.bernoulli(0.5) as u8).collect())
        .collect();
    let mut order: Vec<usize> = (0..12).collect();
    rng.shuffle(&mut order);
    (matrix(&rows), target(&order))
}

#[test]
fn zero_epochs_returns_initialization() {
    let (ds, t) = small_world();
    let cfg = TrainConfig {
        epochs: 0,
        seed: 9,
        ..TrainConfig::default()
    };
    let out = train(&ds, &t, &LossConfig::default(), &cfg).unwrap();
    let mut rng = SplitMix64::new(9);
    let init: Vec<f64> = (0..20).map(|_| rng.uniform(-0.01, 0.01)).collect();
    assert_eq!(out.weights.weights, init);
    assert_eq!(out.trace.len(), 1);
}

#[test]
fn training_is_deterministic() {
    let (ds, t) = small_world();
    for variant in LossVariant::ALL {
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 7,
            seed: 3,
            ..TrainConfig::default()
        };
        let loss = LossConfig::with_variant(variant);
        let a = train(&ds, &t, &loss, &cfg).unwrap();
        let b = train(&ds, &t, &loss, &cfg).unwrap();
        assert_eq!(a.weights.to_benchmark().unwrap().to_csv(), b.weights.to_benchmark().unwrap().to_csv());
        assert_eq!(a.trace_csv(), b.trace_csv());
    }
}

#[test]
fn full_batch_ranknet_loss_decreases() {
    let (ds, t) = small_world();
    let cfg = TrainConfig {
        learning_rate: 1e-3,
        epochs: 50,
        batch_size: 66,
        ..TrainConfig::default()
    };
    let out = train(&ds, &t, &LossConfig::default(), &cfg).unwrap();
    for w in out.trace.windows(2) {
        assert!(w[1].mean_loss <= w[0].mean_loss + 1e-12, "{:?}", w);
    }
}

#[test]
fn target_must_match_models() {
    let (ds, _) = small_world();
    let t = target(&[0, 1, 2]);
    assert!(train(&ds, &t, &LossConfig::default(), &TrainConfig::default()).is_err());
}

#[test]
fn disjoint_models_can_be_ranked() {
    let (ds, t) = small_world();
    let train_ds = ds.select_models(&(0..8).collect::<Vec<_>>()).unwrap();
    let test_ds = ds.select_models(&(8..12).collect::<Vec<_>>()).unwrap();
    let ids = train_ds.model_ids();
    let out = train(&train_ds, &t.restrict(&ids).unwrap(), &LossConfig::default(), &TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    })
    .unwrap();
    let r = apply_benchmark(&out.weights.to_benchmark().unwrap(), &test_ds).unwrap();
    assert_eq!(r.len(), 4);
}
