use mtkit::sampling::chi2_divergence;
use mtkit::trainer::{
    average_checkpoints, compute_baselines, initial_params, staged_recipe, train_from, Baselines,
    LeastSquaresTask, Stage, TrainMode,
};
use mtkit::{temperature_distribution, train, Checkpoint, TaskSuite, Temperature, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture() -> TaskSuite {
    TaskSuite::imbalanced_fixture(7)
}

fn max_and_spread(losses: &[f64]) -> (f64, f64) {
    let max = losses.iter().copied().fold(f64::MIN, f64::max);
    let min = losses.iter().copied().fold(f64::MAX, f64::min);
    (max, max - min)
}

#[test]
fn gradients_match_central_differences() {
    let suite = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    for _ in 0..50 {
        let theta: Vec<f64> = (0..suite.shared_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        for task in &suite.tasks {
            let g = task.gradient(&theta);
            for j in 0..theta.len() {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[j] += h;
                down[j] -= h;
                let fd = (task.loss(&up) - task.loss(&down)) / (2.0 * h);
                let rel = (fd - g[j]).abs() / g[j].abs().max(1.0);
                assert!(rel < 1e-5, "{}: coord {j} analytic {} numeric {fd}", task.name, g[j]);
            }
        }
    }
}

#[test]
fn erm_loss_is_non_increasing() {
    let suite = fixture();
    let cfg = TrainConfig {
        steps: 300,
        lr: 0.2,
        ..Default::default()
    };
    let out = train(&suite, &cfg).unwrap();
    let weights = temperature_distribution(&suite.sizes(), cfg.tau).unwrap().probs;
    let objective = |l: &[f64]| l.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>();
    let objs: Vec<f64> = out.history.iter().map(|r| objective(&r.losses)).collect();
    assert!(objs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn dro_weights_are_feasible_and_dominant() {
    let suite = fixture();
    let cfg = TrainConfig {
        mode: TrainMode::Dro,
        steps: 200,
        ..Default::default()
    };
    let out = train(&suite, &cfg).unwrap();
    let p = temperature_distribution(&suite.sizes(), Temperature::from_exponent(0.3).unwrap())
        .unwrap()
        .probs;
    for row in &out.history {
        let q = &row.weights;
        assert!(q.iter().all(|x| *x >= 0.0));
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let div = chi2_divergence(q, &p).unwrap();
        assert!(div <= cfg.rho + 1e-8, "step {}: {div}", row.step);
        let eq: f64 = q.iter().zip(&row.losses).map(|(a, b)| a * b).sum();
        let ep: f64 = p.iter().zip(&row.losses).map(|(a, b)| a * b).sum();
        assert!(eq >= ep - 1e-12);
        assert!(row.robust_gain.unwrap() >= -1e-12);
    }
}

#[test]
fn identical_configs_repeat_exactly() {
    let suite = fixture();
    for mode in [TrainMode::ErmTemperature, TrainMode::Dro] {
        let cfg = TrainConfig {
            mode,
            steps: 100,
            seed: 42,
            ..Default::default()
        };
        let a = train(&suite, &cfg).unwrap();
        let b = train(&suite, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.final_checkpoint, b.final_checkpoint);
    }
}

#[test]
fn single_task_modes_agree() {
    let full = fixture();
    let suite = TaskSuite {
        shared_dim: full.shared_dim,
        tasks: vec![full.tasks[2].clone()],
    };
    let run = |mode| {
        train(
            &suite,
            &TrainConfig {
                mode,
                steps: 150,
                ..Default::default()
            },
        )
        .unwrap()
        .final_checkpoint
        .per_task_loss[0]
    };
    assert!((run(TrainMode::ErmTemperature) - run(TrainMode::Dro)).abs() < 1e-10);
}

#[test]
fn identical_tasks_keep_training_weights() {
    let base = fixture().tasks[3].clone();
    let suite = TaskSuite {
        shared_dim: 8,
        tasks: (0..4)
            .map(|i| LeastSquaresTask {
                name: format!("copy{i}"),
                ..base.clone()
            })
            .collect(),
    };
    let p = temperature_distribution(&suite.sizes(), Temperature::from_exponent(0.3).unwrap())
        .unwrap()
        .probs;
    let out = train(
        &suite,
        &TrainConfig {
            mode: TrainMode::Dro,
            steps: 50,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(out.history.iter().all(|r| r.weights == p));
}

#[test]
fn self_baseline_keeps_training_weights() {
    let suite = fixture();
    let p = temperature_distribution(&suite.sizes(), Temperature::from_exponent(0.3).unwrap())
        .unwrap()
        .probs;
    let out = train(
        &suite,
        &TrainConfig {
            mode: TrainMode::Dro,
            steps: 30,
            baselines: Baselines::Current,
            ..Default::default()
        },
    )
    .unwrap();
    for row in &out.history {
        for (q, pi) in row.weights.iter().zip(&p) {
            assert!((q - pi).abs() < 1e-12);
        }
    }
}

#[test]
fn baselines_from_origin_are_mean_squared_targets() {
    let suite = fixture();
    let origin = Checkpoint::at(&suite, vec![0.0; suite.shared_dim], 0);
    let b = compute_baselines(&suite, &origin);
    for (task, bi) in suite.tasks.iter().zip(&b) {
        let closed = task.y.iter().map(|y| y * y).sum::<f64>() / task.y.len() as f64;
        assert!((bi - closed).abs() < 1e-12);
    }
}

#[test]
fn checkpoints_store_their_losses() {
    let suite = fixture();
    let out = train(
        &suite,
        &TrainConfig {
            steps: 100,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(out.checkpoints.len(), 10);
    for c in &out.checkpoints {
        assert_eq!(c.params.len(), suite.shared_dim);
        for (stored, fresh) in c.per_task_loss.iter().zip(suite.losses(&c.params)) {
            assert!((stored - fresh).abs() < 1e-8);
        }
    }
}

#[test]
fn averaging_last_ten() {
    let suite = fixture();
    let out = train(
        &suite,
        &TrainConfig {
            steps: 200,
            lr: 0.05,
            checkpoint_every: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let avg = average_checkpoints(&out.checkpoints, 10, &suite).unwrap();
    let tail = &out.checkpoints[out.checkpoints.len() - 10..];
    assert_eq!(avg.step, 200);
    for i in 0..suite.tasks.len() {
        let worst = tail.iter().map(|c| c.per_task_loss[i]).fold(f64::MIN, f64::max);
        assert!(avg.per_task_loss[i] <= worst + 1e-12);
    }

    let v = Checkpoint::at(&suite, vec![1.0; 8], 3);
    let w = Checkpoint::at(&suite, vec![2.0, 0.0, 4.0, 1.0, 1.0, 1.0, 1.0, 1.0], 9);
    let mid = average_checkpoints(&[v.clone(), w], 2, &suite).unwrap();
    assert_eq!(mid.params, vec![1.5, 0.5, 2.5, 1.0, 1.0, 1.0, 1.0, 1.0]);
    assert_eq!(mid.step, 9);
    let same = average_checkpoints(&vec![v.clone(); 4], 4, &suite).unwrap();
    assert_eq!(same.params, v.params);
    assert!(average_checkpoints(&[v.clone()], 0, &suite).is_err());
    assert!(average_checkpoints(&[v], 2, &suite).is_err());
}

#[test]
fn staging_identical_suites_is_one_run() {
    let suite = fixture();
    let cfg = TrainConfig::default();
    let staged = staged_recipe([&suite, &suite, &suite], &cfg, [100, 60, 40]).unwrap();
    let single = train(
        &suite,
        &TrainConfig {
            steps: 200,
            ..cfg.clone()
        },
    )
    .unwrap();
    for (a, b) in staged
        .final_checkpoint
        .per_task_loss
        .iter()
        .zip(&single.final_checkpoint.per_task_loss)
    {
        assert!((a - b).abs() < 1e-8);
    }
    let steps: Vec<usize> = staged.history.iter().map(|r| r.step).collect();
    assert_eq!(steps, (0..200).collect::<Vec<_>>());
    assert_eq!(staged.history[99].stage, Stage::PretrainLarge);
    assert_eq!(staged.history[100].stage, Stage::FinetuneClean);
    assert_eq!(staged.history[160].stage, Stage::FinetuneEval);

    let only_first = staged_recipe([&suite, &suite, &suite], &cfg, [120, 0, 0]).unwrap();
    let direct = train(
        &suite,
        &TrainConfig {
            steps: 120,
            ..cfg
        },
    )
    .unwrap();
    assert_eq!(only_first.final_checkpoint, direct.final_checkpoint);
}

#[test]
fn train_from_continues_step_numbers() {
    let suite = fixture();
    let start = Checkpoint::at(&suite, initial_params(8, 1), 40);
    let out = train_from(
        &suite,
        &TrainConfig {
            steps: 10,
            ..Default::default()
        },
        &start,
    )
    .unwrap();
    assert_eq!(out.history[0].step, 40);
    assert_eq!(out.final_checkpoint.step, 50);
}

#[test]
fn dro_lowers_worst_task_loss() {
    let suite = fixture();
    let erm = train(&suite, &TrainConfig::default()).unwrap();
    let dro = train(
        &suite,
        &TrainConfig {
            mode: TrainMode::Dro,
            ..Default::default()
        },
    )
    .unwrap();
    let (erm_max, erm_spread) = max_and_spread(&erm.final_checkpoint.per_task_loss);
    let (dro_max, dro_spread) = max_and_spread(&dro.final_checkpoint.per_task_loss);
    assert!(dro_max <= erm_max, "{dro_max} > {erm_max}");
    assert!(dro_spread <= erm_spread, "{dro_spread} > {erm_spread}");
}

#[test]
fn clean_finetune_beats_noisy_only() {
    let clean = fixture();
    let noisy = clean.with_label_noise(3, 0.5, 0.5);
    let cfg = TrainConfig::default();
    let staged = staged_recipe([&noisy, &clean, &clean], &cfg, [300, 200, 0]).unwrap();
    let noisy_only = staged_recipe([&noisy, &noisy, &noisy], &cfg, [500, 0, 0]).unwrap();
    let mean = |c: &Checkpoint| {
        let l = clean.losses(&c.params);
        l.iter().sum::<f64>() / l.len() as f64
    };
    let a = mean(&staged.final_checkpoint);
    let b = mean(&noisy_only.final_checkpoint);
    assert!(a <= b, "{a} > {b}");
}
