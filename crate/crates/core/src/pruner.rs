//! Depth-first, magnitude-ordered pruning with fine-tuning.
//!
//! Starting from the root, each node's summands are ordered by ascending
//! absolute weight (ties broken toward the lower summand index, so the
//! traversal is deterministic). Terminal and constant edges are tested
//! immediately; operator edges are tested after their subtree has been
//! processed, and an accepted operator prune zeroes and freezes everything
//! beneath it. A test consists of zeroing the edge, fine-tuning the
//! remaining unpruned weights, and re-scoring: the prune is kept when the
//! score is no worse than the best score seen so far (plus a configurable
//! slack), otherwise the pre-attempt weights are restored exactly. Every
//! edge is visited at most once.
//!
//! The greedy order makes no optimality claim; it visits each edge once.

use std::fmt;

use crate::datasets::DataSlice;
use crate::graph::{ProgramGraph, SummandKind, WeightStore};
use crate::metrics::{self, MetricsError};
use crate::optimizer::{self, TrainError};

#[derive(Clone, Debug)]
pub struct PruneConfig {
    /// Adam epochs applied to the surviving weights after each tentative
    /// prune.
    pub finetune_epochs: usize,
    pub finetune_lr: f64,
    /// Additive slack on the accept rule `new <= best + tolerance`.
    pub score_tolerance: f64,
    pub seed: u64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig { finetune_epochs: 500, finetune_lr: 1e-3, score_tolerance: 0.0, seed: 0 }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<(), PruneError> {
        if self.finetune_lr > 0.0 && self.score_tolerance >= 0.0 {
            Ok(())
        } else {
            Err(PruneError::InvalidConfig)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneAttempt {
    pub weight_index: usize,
    pub accepted: bool,
    /// Score after fine-tuning this attempt; +inf when fine-tuning diverged.
    pub score_after_finetune: f64,
}

#[derive(Clone, Debug)]
pub struct PruneResult {
    pub weights: WeightStore,
    pub initial_score: f64,
    pub final_score: f64,
    pub attempts: Vec<PruneAttempt>,
    pub surviving_count: usize,
}

#[derive(Debug)]
pub enum PruneError {
    InvalidConfig,
    EmptyData,
    Metrics(MetricsError),
    Train(TrainError),
}

impl fmt::Display for PruneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PruneError::InvalidConfig => write!(f, "invalid prune configuration"),
            PruneError::EmptyData => write!(f, "pruning requires non-empty data"),
            PruneError::Metrics(e) => write!(f, "{e}"),
            PruneError::Train(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PruneError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            PruneError::Metrics(e) => Some(e),
            PruneError::Train(e) => Some(e),
            _ => None,
        }
    }
}

/// Relative L2 error of the model on `data` (the pruning score).
pub fn score(graph: &ProgramGraph, weights: &WeightStore, data: &DataSlice) -> Result<f64, PruneError> {
    if data.inputs.is_empty() {
        return Err(PruneError::EmptyData);
    }
    let preds = graph
        .batch_forward(weights, &data.inputs)
        .map_err(|e| PruneError::Train(TrainError::Diverged {
            epoch: 0,
            source: crate::autodiff::AutodiffError::Eval(e),
        }))?;
    metrics::relative_l2(&preds, &data.targets).map_err(PruneError::Metrics)
}

struct Pruner<'a> {
    graph: &'a ProgramGraph,
    train_data: &'a DataSlice,
    score_data: &'a DataSlice,
    config: &'a PruneConfig,
    weights: WeightStore,
    best_score: f64,
    attempts: Vec<PruneAttempt>,
}

impl Pruner<'_> {
    fn visit_node(&mut self, node_id: usize) -> Result<(), PruneError> {
        // Order is fixed on arrival: ascending |weight|, lower summand index
        // first on ties. Later fine-tunes shift magnitudes but do not reorder
        // a node already being traversed.
        let node = self.graph.node(node_id);
        let mut order: Vec<usize> = (0..node.summands.len()).collect();
        order.sort_by(|&a, &b| {
            let wa = self.weights.value(node.summands[a].weight_index).abs();
            let wb = self.weights.value(node.summands[b].weight_index).abs();
            wa.partial_cmp(&wb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        for idx in order {
            let summand = &self.graph.node(node_id).summands[idx];
            let weight_index = summand.weight_index;
            let children = summand.children.clone();
            if self.weights.is_pruned(weight_index) {
                continue; // already gone, along with its subtree
            }
            let is_operator =
                matches!(summand.kind, SummandKind::Unary(_) | SummandKind::Binary(_));
            if is_operator {
                for &child in &children {
                    self.visit_node(child)?;
                }
            }
            self.attempt(weight_index, &children)?;
        }
        Ok(())
    }

    fn attempt(&mut self, weight_index: usize, children: &[usize]) -> Result<(), PruneError> {
        let snapshot = self.weights.clone();
        self.weights.prune(weight_index);
        for &child in children {
            for wi in self.graph.subtree_weight_indices(child) {
                self.weights.prune(wi);
            }
        }
        let finetuned = optimizer::finetune(
            self.graph,
            &mut self.weights,
            self.train_data,
            self.config.finetune_epochs,
            self.config.finetune_lr,
        );
        let new_score = match finetuned {
            Ok(()) => score(self.graph, &self.weights, self.score_data)?,
            // Divergence during fine-tuning rejects the attempt; anything
            // else would also have failed the initial scoring.
            Err(TrainError::Diverged { .. }) => f64::INFINITY,
            Err(e) => return Err(PruneError::Train(e)),
        };
        // NaN fails this comparison and is rejected.
        let accepted = new_score <= self.best_score + self.config.score_tolerance;
        if accepted {
            self.best_score = self.best_score.min(new_score);
        } else {
            self.weights = snapshot;
        }
        self.attempts.push(PruneAttempt { weight_index, accepted, score_after_finetune: new_score });
        Ok(())
    }
}

/// Runs the full depth-first pruning pass. Fine-tuning runs on
/// `train_data`; scoring runs on `score_data` (typically the validation
/// split).
pub fn prune(
    graph: &ProgramGraph,
    weights: WeightStore,
    train_data: &DataSlice,
    score_data: &DataSlice,
    config: &PruneConfig,
) -> Result<PruneResult, PruneError> {
    config.validate()?;
    if train_data.inputs.is_empty() || score_data.inputs.is_empty() {
        return Err(PruneError::EmptyData);
    }
    let initial_score = score(graph, &weights, score_data)?;
    let mut pruner = Pruner {
        graph,
        train_data,
        score_data,
        config,
        weights,
        best_score: initial_score,
        attempts: Vec::new(),
    };
    pruner.visit_node(0)?;
    let final_score = score(graph, &pruner.weights, score_data)?;
    let surviving_count = pruner.weights.surviving_count();
    Ok(PruneResult {
        weights: pruner.weights,
        initial_score,
        final_score,
        attempts: pruner.attempts,
        surviving_count,
    })
}
