//! Evaluation metrics shared by training, pruning, and reporting.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricsError {
    Empty,
    LengthMismatch { pred: usize, truth: usize },
    /// Relative error is undefined when the reference has zero norm.
    ZeroNormTruth,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::Empty => write!(f, "metric over empty arrays"),
            MetricsError::LengthMismatch { pred, truth } => {
                write!(f, "prediction has {pred} entries, truth has {truth}")
            }
            MetricsError::ZeroNormTruth => write!(f, "relative error undefined: truth has zero norm"),
        }
    }
}

impl std::error::Error for MetricsError {}

fn check(pred: &[f64], truth: &[f64]) -> Result<(), MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||pred - truth||_2 / ||truth||_2`.
pub fn relative_l2(pred: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    check(pred, truth)?;
    let denom = l2_norm(truth);
    if denom == 0.0 {
        return Err(MetricsError::ZeroNormTruth);
    }
    let diff: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(diff.sqrt() / denom)
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    check(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Per-output evaluation summary for the results table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub variable: String,
    /// Headline metric name for this system ("relative_l2" or "mae").
    pub headline_metric: String,
    pub unpruned_relative_l2: f64,
    pub pruned_relative_l2: f64,
    pub unpruned_mae: f64,
    pub pruned_mae: f64,
    pub unpruned_params: usize,
    pub surviving_params: usize,
    pub reduction_fraction: f64,
    pub expression_text: String,
    /// Times the exp clamp fired while evaluating the pruned model on the
    /// test sample, zero in healthy runs.
    pub exp_clamp_events: u64,
}

impl EvalReport {
    pub fn reduction_fraction(unpruned: usize, surviving: usize) -> f64 {
        if unpruned == 0 {
            0.0
        } else {
            1.0 - surviving as f64 / unpruned as f64
        }
    }
}
