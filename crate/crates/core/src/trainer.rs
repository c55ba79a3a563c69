//! A desk-scale multi-task trainer over shared-parameter least-squares tasks.
//!
//! Each task `i` has loss `ℒ_i(θ) = ‖A_i θ − y_i‖² / n_i`. Training runs
//! full-batch gradient descent on a weighted sum of task losses, with
//! weights either fixed by temperature sampling or refreshed every step to
//! the χ²-robust worst case.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{
    chi2_divergence, dro_worst_case, temperature_distribution, DroConfig, SamplingError,
    Temperature,
};
use crate::synth::mix_seed;

/// Losses above this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("steps must be positive")]
    ZeroSteps,
    #[error("learning rate must be positive and finite, got {0}")]
    BadLearningRate(f64),
    #[error("task suite is empty")]
    EmptySuite,
    #[error("task {task}: {reason}")]
    BadTask { task: usize, reason: String },
    #[error("parameter length {got} does not match shared_dim {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },
    #[error("checkpoint averaging needs 1 ≤ k ≤ {available}, got {k}")]
    BadAverage { k: usize, available: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresTask {
    pub name: String,
    /// Design matrix, one row per example.
    pub a: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl LeastSquaresTask {
    pub fn size(&self) -> usize {
        self.y.len()
    }

    fn residual(&self, theta: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.y)
            .map(|(row, y)| row.iter().zip(theta).map(|(a, t)| a * t).sum::<f64>() - y)
            .collect()
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let r = self.residual(theta);
        r.iter().map(|x| x * x).sum::<f64>() / self.size() as f64
    }

    /// `2 Aᵀ(Aθ − y) / n`.
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let r = self.residual(theta);
        let scale = 2.0 / self.size() as f64;
        let mut g = vec![0.0; theta.len()];
        for (row, ri) in self.a.iter().zip(&r) {
            for (gj, aj) in g.iter_mut().zip(row) {
                *gj += aj * ri;
            }
        }
        g.iter_mut().for_each(|x| *x *= scale);
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSuite {
    pub shared_dim: usize,
    pub tasks: Vec<LeastSquaresTask>,
}

impl TaskSuite {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.tasks.is_empty() {
            return Err(TrainError::EmptySuite);
        }
        for (i, t) in self.tasks.iter().enumerate() {
            let bad = |reason: &str| TrainError::BadTask {
                task: i,
                reason: reason.to_string(),
            };
            if t.y.is_empty() {
                return Err(bad("no examples"));
            }
            if t.a.len() != t.y.len() {
                return Err(bad("row count differs from target count"));
            }
            if t.a.iter().any(|r| r.len() != self.shared_dim) {
                return Err(bad("row length differs from shared_dim"));
            }
            if t.a.iter().flatten().chain(&t.y).any(|x| !x.is_finite()) {
                return Err(bad("non-finite entry"));
            }
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.size() as f64).collect()
    }

    pub fn losses(&self, theta: &[f64]) -> Vec<f64> {
        self.tasks.par_iter().map(|t| t.loss(theta)).collect()
    }

    /// `Σ w_i ∇ℒ_i(θ)`, reduced in task order.
    pub fn weighted_gradient(&self, theta: &[f64], weights: &[f64]) -> Vec<f64> {
        let grads: Vec<Vec<f64>> = self.tasks.par_iter().map(|t| t.gradient(theta)).collect();
        let mut g = vec![0.0; self.shared_dim];
        for (gi, w) in grads.iter().zip(weights) {
            for (acc, x) in g.iter_mut().zip(gi) {
                *acc += w * x;
            }
        }
        g
    }

    /// Six tasks sharing an 8-dimensional parameter, with 2000 down to 20
    /// examples. Smaller tasks have optima further from the common one, so
    /// size-proportional weighting leaves them badly fit.
    pub fn imbalanced_fixture(seed: u64) -> TaskSuite {
        const SIZES: [usize; 6] = [2000, 800, 300, 120, 50, 20];
        const SHIFTS: [f64; 6] = [0.0, 0.3, 0.6, 0.9, 1.2, 1.5];
        let dim = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let common: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tasks = SIZES
            .iter()
            .zip(SHIFTS)
            .enumerate()
            .map(|(i, (&n, shift))| {
                let mut trng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64 + 1));
                let dir: Vec<f64> = (0..dim).map(|_| trng.random_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                let truth: Vec<f64> = common
                    .iter()
                    .zip(&dir)
                    .map(|(c, d)| c + shift * d / norm)
                    .collect();
                synth_task(&format!("task{i}"), &truth, n, 0.1, &mut trng)
            })
            .collect();
        TaskSuite {
            shared_dim: dim,
            tasks,
        }
    }

    /// Copy of `self` with the targets corrupted: every target is shifted
    /// by a task-specific bias and gets extra noise.
    pub fn with_label_noise(&self, seed: u64, bias: f64, noise: f64) -> TaskSuite {
        let tasks = self
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 100 + i as u64));
                let b = bias * if i % 2 == 0 { 1.0 } else { -1.0 };
                LeastSquaresTask {
                    name: format!("{}-noisy", t.name),
                    a: t.a.clone(),
                    y: t
                        .y
                        .iter()
                        .map(|y| y + b + noise * rng.random_range(-1.0..1.0))
                        .collect(),
                }
            })
            .collect();
        TaskSuite {
            shared_dim: self.shared_dim,
            tasks,
        }
    }
}

fn synth_task(
    name: &str,
    truth: &[f64],
    n: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> LeastSquaresTask {
    let mut a = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..truth.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let clean: f64 = row.iter().zip(truth).map(|(x, t)| x * t).sum();
        y.push(clean + noise * rng.random_range(-1.0..1.0));
        a.push(row);
    }
    LeastSquaresTask {
        name: name.to_string(),
        a,
        y,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    ErmTemperature,
    Dro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    PretrainLarge,
    FinetuneClean,
    FinetuneEval,
}

impl Stage {
    pub const ORDER: [Stage; 3] = [Stage::PretrainLarge, Stage::FinetuneClean, Stage::FinetuneEval];
}

/// Baseline losses subtracted before the robust step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baselines {
    #[default]
    Zero,
    Fixed(Vec<f64>),
    /// The current model's own losses, refreshed every step.
    Current,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// Temperature of the ERM weights.
    pub tau: Temperature,
    pub rho: f64,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    pub stage: Stage,
    /// 0 keeps only the final checkpoint.
    pub checkpoint_every: usize,
    #[serde(default)]
    pub baselines: Baselines,
    /// Exponent of the temperature distribution used as the robust
    /// reference distribution.
    #[serde(default = "default_alpha")]
    pub reference_alpha: f64,
}

fn default_alpha() -> f64 {
    0.3
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::ErmTemperature,
            tau: Temperature::Finite(1.0),
            rho: 0.1,
            steps: 500,
            lr: 0.5,
            seed: 0,
            stage: Stage::PretrainLarge,
            checkpoint_every: 10,
            baselines: Baselines::Zero,
            reference_alpha: default_alpha(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.steps == 0 {
            return Err(TrainError::ZeroSteps);
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(TrainError::BadLearningRate(self.lr));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: Vec<f64>,
    pub step: usize,
    pub per_task_loss: Vec<f64>,
}

impl Checkpoint {
    pub fn at(suite: &TaskSuite, params: Vec<f64>, step: usize) -> Checkpoint {
        let per_task_loss = suite.losses(&params);
        Checkpoint {
            params,
            step,
            per_task_loss,
        }
    }
}

/// One optimizer step: losses before the update and the weights applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub step: usize,
    pub stage: Stage,
    pub losses: Vec<f64>,
    pub weights: Vec<f64>,
    /// χ² divergence of the weights from the reference (robust mode only).
    pub divergence: Option<f64>,
    /// `Σ q_i e_i − Σ p_i e_i` (robust mode only).
    pub robust_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub final_checkpoint: Checkpoint,
    pub history: Vec<HistoryRow>,
    pub checkpoints: Vec<Checkpoint>,
}

/// Small seeded initial parameters.
pub fn initial_params(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(-0.01..0.01)).collect()
}

pub fn train(suite: &TaskSuite, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    suite.validate()?;
    let init = Checkpoint::at(suite, initial_params(suite.shared_dim, config.seed), 0);
    train_from(suite, config, &init)
}

/// Continues training from `start`; steps are numbered after `start.step`.
pub fn train_from(
    suite: &TaskSuite,
    config: &TrainConfig,
    start: &Checkpoint,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    run(suite, config, start, config.steps)
}

fn run(
    suite: &TaskSuite,
    config: &TrainConfig,
    start: &Checkpoint,
    steps: usize,
) -> Result<TrainOutcome, TrainError> {
    suite.validate()?;
    if start.params.len() != suite.shared_dim {
        return Err(TrainError::DimensionMismatch {
            expected: suite.shared_dim,
            got: start.params.len(),
        });
    }
    let sizes = suite.sizes();
    let n = sizes.len();
    let erm_weights = temperature_distribution(&sizes, config.tau)?.probs;
    let p_train = temperature_distribution(&sizes, Temperature::from_exponent(config.reference_alpha)?)?.probs;
    if let Baselines::Fixed(b) = &config.baselines {
        if b.len() != n {
            return Err(SamplingError::DimensionMismatch {
                left: b.len(),
                right: n,
            }
            .into());
        }
    }

    let mut theta = start.params.clone();
    let mut history = Vec::with_capacity(steps);
    let mut checkpoints = Vec::new();
    for k in 0..steps {
        let step = start.step + k;
        let losses = suite.losses(&theta);
        if let Some(&loss) = losses.iter().find(|l| !(l.is_finite() && **l <= DIVERGENCE_LIMIT)) {
            return Err(TrainError::Diverged { step, loss });
        }
        let (weights, divergence, robust_gain) = match config.mode {
            TrainMode::ErmTemperature => (erm_weights.clone(), None, None),
            TrainMode::Dro => {
                let baselines = match &config.baselines {
                    Baselines::Zero => vec![0.0; n],
                    Baselines::Fixed(b) => b.clone(),
                    Baselines::Current => losses.clone(),
                };
                let dro = DroConfig {
                    rho: config.rho,
                    baselines,
                    p_train: p_train.clone(),
                };
                let excess = dro.excess(&losses)?;
                let w = dro_worst_case(&excess, &dro)?;
                let reference: f64 = p_train.iter().zip(&excess).map(|(p, e)| p * e).sum();
                let gain = w.objective(&excess) - reference;
                let div = chi2_divergence(&w.q, &p_train)?;
                (w.q, Some(div), Some(gain))
            }
        };
        let g = suite.weighted_gradient(&theta, &weights);
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t -= config.lr * gi;
        }
        history.push(HistoryRow {
            step,
            stage: config.stage,
            losses,
            weights,
            divergence,
            robust_gain,
        });
        let done = k + 1;
        if config.checkpoint_every > 0 && done % config.checkpoint_every == 0 && done < steps {
            checkpoints.push(Checkpoint::at(suite, theta.clone(), start.step + done));
        }
    }
    let final_checkpoint = Checkpoint::at(suite, theta, start.step + steps);
    if let Some(&loss) = final_checkpoint
        .per_task_loss
        .iter()
        .find(|l| !(l.is_finite() && **l <= DIVERGENCE_LIMIT))
    {
        return Err(TrainError::Diverged {
            step: final_checkpoint.step,
            loss,
        });
    }
    checkpoints.push(final_checkpoint.clone());
    Ok(TrainOutcome {
        final_checkpoint,
        history,
        checkpoints,
    })
}

/// `b_i = ℒ_i(reference)`.
pub fn compute_baselines(suite: &TaskSuite, reference: &Checkpoint) -> Vec<f64> {
    suite.losses(&reference.params)
}

/// Mean parameters of the last `k` checkpoints; losses are recomputed on
/// `suite`.
pub fn average_checkpoints(
    checkpoints: &[Checkpoint],
    k: usize,
    suite: &TaskSuite,
) -> Result<Checkpoint, TrainError> {
    if k == 0 || k > checkpoints.len() {
        return Err(TrainError::BadAverage {
            k,
            available: checkpoints.len(),
        });
    }
    let tail = &checkpoints[checkpoints.len() - k..];
    let dim = suite.shared_dim;
    if let Some(c) = tail.iter().find(|c| c.params.len() != dim) {
        return Err(TrainError::DimensionMismatch {
            expected: dim,
            got: c.params.len(),
        });
    }
    let mut params = vec![0.0; dim];
    for c in tail {
        for (p, x) in params.iter_mut().zip(&c.params) {
            *p += x;
        }
    }
    params.iter_mut().for_each(|p| *p /= k as f64);
    let step = tail.iter().map(|c| c.step).max().unwrap_or(0);
    Ok(Checkpoint::at(suite, params, step))
}

/// Trains on the large suite, then continues on the clean suite and the
/// evaluation suite with the given step budgets. A zero budget skips its
/// stage. History rows carry their stage.
pub fn staged_recipe(
    suites: [&TaskSuite; 3],
    config: &TrainConfig,
    budgets: [usize; 3],
) -> Result<TrainOutcome, TrainError> {
    if !(config.lr.is_finite() && config.lr > 0.0) {
        return Err(TrainError::BadLearningRate(config.lr));
    }
    for s in &suites[1..] {
        if s.shared_dim != suites[0].shared_dim {
            return Err(TrainError::DimensionMismatch {
                expected: suites[0].shared_dim,
                got: s.shared_dim,
            });
        }
    }
    suites[0].validate()?;
    let mut current = Checkpoint::at(
        suites[0],
        initial_params(suites[0].shared_dim, config.seed),
        0,
    );
    let mut history = Vec::new();
    let mut checkpoints = Vec::new();
    for ((suite, budget), stage) in suites.iter().zip(budgets).zip(Stage::ORDER) {
        if budget == 0 {
            continue;
        }
        let cfg = TrainConfig {
            stage,
            steps: budget,
            ..config.clone()
        };
        let start = Checkpoint::at(suite, current.params.clone(), current.step);
        let out = run(suite, &cfg, &start, budget)?;
        history.extend(out.history);
        checkpoints.extend(out.checkpoints);
        current = out.final_checkpoint;
    }
    Ok(TrainOutcome {
        final_checkpoint: current,
        history,
        checkpoints,
    })
}
