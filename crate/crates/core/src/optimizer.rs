//! Full-batch Adam training with learning-rate decay, L1 regularization,
//! and validation-based early stopping.
//!
//! Each epoch computes the regularized loss and gradient over the whole
//! training set, scores the current weights on the validation split by
//! relative L2 error, then applies one Adam step. The weights achieving the
//! best validation score are checkpointed and returned, so the result is
//! never worse than the initial store on the validation data. Since scoring
//! happens before stepping, the initial weights are the epoch-1 candidate.

#![allow(clippy::needless_range_loop)]

use std::fmt;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::autodiff::{loss_and_grad, AutodiffError};
use crate::datasets::DataSlice;
use crate::graph::{ProgramGraph, WeightStore};
use crate::metrics;

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub initial_lr: f64,
    /// Learning rate is multiplied by this factor every `lr_decay_every`
    /// epochs.
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub l1_coefficient: f64,
    /// Stop when the validation score has not improved for this many
    /// epochs; 0 disables early stopping.
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100_000,
            initial_lr: 1e-2,
            lr_decay_factor: 0.1,
            lr_decay_every: 25_000,
            l1_coefficient: 1e-5,
            early_stop_patience: 5_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let ok = self.initial_lr > 0.0
            && self.lr_decay_factor > 0.0
            && self.lr_decay_factor <= 1.0
            && self.max_epochs >= 1
            && self.lr_decay_every >= 1
            && self.l1_coefficient >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(TrainError::InvalidConfig)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::MaxEpochs => write!(f, "max_epochs"),
            StopReason::EarlyStop => write!(f, "early_stop"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_score: f64,
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_validation_score: f64,
    pub history: Vec<EpochStats>,
    pub stop_reason: StopReason,
}

#[derive(Debug)]
pub enum TrainError {
    InvalidConfig,
    EmptyData,
    Diverged { epoch: usize, source: AutodiffError },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::InvalidConfig => write!(f, "invalid training configuration"),
            TrainError::EmptyData => write!(f, "training requires non-empty train and validation sets"),
            TrainError::Diverged { epoch, source } => {
                write!(f, "training diverged at epoch {epoch}: {source}")
            }
        }
    }
}

impl std::error::Error for TrainError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            TrainError::Diverged { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Glorot-uniform initialization: each node's weights are drawn from
/// `U(-b, b)` with `b = sqrt(6 / (fan_in + fan_out))`, where `fan_in` is the
/// summand count of that node and `fan_out` is 1. Deterministic in `seed`.
pub fn glorot_init(graph: &ProgramGraph, seed: u64) -> WeightStore {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut store = WeightStore::zeros(graph.weight_count());
    for node in graph.nodes() {
        let fan_in = node.summands.len();
        let bound = (6.0 / (fan_in as f64 + 1.0)).sqrt();
        for s in &node.summands {
            store.set(s.weight_index, rng.random_range(-bound..bound));
        }
    }
    store
}

/// Effective learning rate at a 1-based epoch under the multiplicative
/// decay schedule.
pub fn lr_at_epoch(config: &TrainConfig, epoch: usize) -> f64 {
    let steps = (epoch - 1) / config.lr_decay_every;
    config.initial_lr * config.lr_decay_factor.powi(steps as i32)
}

/// Validation score: relative L2 error of the predictions on `data`. When
/// the target norm is zero (where relative error is undefined) the absolute
/// residual norm is used instead, so scoring stays total and deterministic.
pub fn validation_score(graph: &ProgramGraph, weights: &WeightStore, data: &DataSlice) -> f64 {
    let preds = match graph.batch_forward(weights, &data.inputs) {
        Ok(p) => p,
        Err(_) => return f64::INFINITY,
    };
    match metrics::relative_l2(&preds, &data.targets) {
        Ok(s) => s,
        Err(metrics::MetricsError::ZeroNormTruth) => {
            let diff: Vec<f64> = preds.iter().zip(&data.targets).map(|(p, t)| p - t).collect();
            metrics::l2_norm(&diff)
        }
        Err(_) => f64::INFINITY,
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One Adam step; pruned weights are left untouched.
    fn step(&mut self, weights: &mut WeightStore, grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t);
        for i in 0..grad.len() {
            if weights.is_pruned(i) {
                continue;
            }
            let g = grad[i];
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            let w = weights.value(i) - lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            weights.set(i, w);
        }
    }
}

/// Trains `weights` on `train_data`, checkpointing on `validation_data`.
/// Returns the best-scoring weights and the per-epoch report.
pub fn train(
    graph: &ProgramGraph,
    weights: WeightStore,
    train_data: &DataSlice,
    validation_data: &DataSlice,
    config: &TrainConfig,
) -> Result<(WeightStore, TrainReport), TrainError> {
    config.validate()?;
    if train_data.inputs.is_empty() || validation_data.inputs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let mut w = weights;
    let mut adam = Adam::new(w.len());
    let mut best_score = f64::INFINITY;
    let mut best_weights = w.clone();
    let mut since_improvement = 0usize;
    let mut history = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    let mut epochs_run = config.max_epochs;

    for epoch in 1..=config.max_epochs {
        let (loss, grad) =
            loss_and_grad(graph, &w, &train_data.inputs, &train_data.targets, config.l1_coefficient)
                .map_err(|source| TrainError::Diverged { epoch, source })?;
        let val = validation_score(graph, &w, validation_data);
        let lr = lr_at_epoch(config, epoch);
        history.push(EpochStats { epoch, train_loss: loss, val_score: val, lr });
        if val < best_score {
            best_score = val;
            best_weights.clone_from(&w);
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if config.early_stop_patience > 0 && since_improvement >= config.early_stop_patience {
                stop_reason = StopReason::EarlyStop;
                epochs_run = epoch;
                break;
            }
        }
        adam.step(&mut w, &grad.values, lr);
    }

    Ok((
        best_weights,
        TrainReport { epochs_run, best_validation_score: best_score, history, stop_reason },
    ))
}

/// Fixed-epoch Adam refinement of the unpruned weights, used between prune
/// attempts. No validation, no decay, no regularization.
pub fn finetune(
    graph: &ProgramGraph,
    weights: &mut WeightStore,
    data: &DataSlice,
    epochs: usize,
    lr: f64,
) -> Result<(), TrainError> {
    if data.inputs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let mut adam = Adam::new(weights.len());
    for epoch in 1..=epochs {
        let (_, grad) = loss_and_grad(graph, weights, &data.inputs, &data.targets, 0.0)
            .map_err(|source| TrainError::Diverged { epoch, source })?;
        adam.step(weights, &grad.values, lr);
    }
    Ok(())
}
