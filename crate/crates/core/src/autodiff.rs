//! Reverse-mode differentiation of the training loss.
//!
//! The loss is mean squared error over a batch plus an L1 penalty on the
//! unpruned weights. Because the architecture is a pure tree, every node has
//! exactly one parent edge, so the backward pass is a single ascending sweep
//! over the node tape: a node's adjoint is fully known before its children
//! are visited. Per-sample contributions accumulate in a fixed order, which
//! keeps gradients bitwise reproducible.

#![allow(clippy::needless_range_loop)]

use std::fmt;

use crate::graph::{EvalError, ProgramGraph, SummandKind, WeightStore, CHUNK_ROWS};
use crate::grammar::OperatorKind;
use crate::matrix::Matrix;
use crate::ops;

#[derive(Debug)]
pub enum AutodiffError {
    Eval(EvalError),
    EmptyBatch,
    LengthMismatch { inputs: usize, targets: usize },
    /// The first sample whose prediction (or squared error) is not finite.
    NonFinitePrediction { sample: usize },
    /// The total loss is not finite even though every prediction is, e.g.
    /// an overflowing L1 term.
    NonFiniteLoss,
}

impl fmt::Display for AutodiffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutodiffError::Eval(e) => write!(f, "{e}"),
            AutodiffError::EmptyBatch => write!(f, "loss over an empty batch"),
            AutodiffError::LengthMismatch { inputs, targets } => {
                write!(f, "{inputs} input rows but {targets} targets")
            }
            AutodiffError::NonFinitePrediction { sample } => {
                write!(f, "non-finite loss at sample {sample}")
            }
            AutodiffError::NonFiniteLoss => write!(f, "non-finite loss"),
        }
    }
}

impl std::error::Error for AutodiffError {}

impl From<EvalError> for AutodiffError {
    fn from(e: EvalError) -> Self {
        AutodiffError::Eval(e)
    }
}

/// Gradient with respect to every weight; entries at pruned indices are
/// exactly zero.
#[derive(Clone, Debug)]
pub struct GradientVector {
    pub values: Vec<f64>,
}

impl GradientVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// MSE + L1 loss and its exact reverse-mode gradient.
///
/// Derivatives follow the protected operator semantics: `d sin = cos`,
/// `d exp` is the exponential inside the clamp and zero outside,
/// `d log(|a|+eps) = sign(a)/(|a|+eps)` with `sign(0) = 0`, and the L1
/// subgradient at zero is taken as zero.
pub fn loss_and_grad(
    graph: &ProgramGraph,
    weights: &WeightStore,
    inputs: &Matrix,
    targets: &[f64],
    l1_coefficient: f64,
) -> Result<(f64, GradientVector), AutodiffError> {
    let n_rows = inputs.rows();
    if n_rows == 0 {
        return Err(AutodiffError::EmptyBatch);
    }
    if n_rows != targets.len() {
        return Err(AutodiffError::LengthMismatch { inputs: n_rows, targets: targets.len() });
    }
    let n_terminals = graph.spec().terminals().len();
    if inputs.cols() != n_terminals {
        return Err(EvalError::TerminalCount { expected: n_terminals, got: inputs.cols() }.into());
    }
    for r in 0..n_rows {
        for (c, v) in inputs.row(r).iter().enumerate() {
            if !v.is_finite() {
                return Err(EvalError::NonFiniteInput { row: r, col: c }.into());
            }
        }
    }

    let cols = inputs.to_col_major();
    let live = graph.live_nodes(weights);
    let n_nodes = graph.node_count();
    let chunk_cap = CHUNK_ROWS.min(n_rows);
    let mut values = vec![0.0; n_nodes * chunk_cap];
    let mut adjoints = vec![0.0; n_nodes * chunk_cap];
    let mut grad = vec![0.0; weights.len()];
    let mut sse = 0.0;
    let inv_n = 1.0 / n_rows as f64;

    let mut row0 = 0;
    while row0 < n_rows {
        let k = chunk_cap.min(n_rows - row0);
        graph.forward_chunk(weights, &cols, n_rows, row0, k, chunk_cap, &mut values, &live);
        for r in 0..k {
            let pred = values[r];
            let err = pred - targets[row0 + r];
            let sq = err * err;
            if !sq.is_finite() {
                return Err(AutodiffError::NonFinitePrediction { sample: row0 + r });
            }
            sse += sq;
            adjoints[r] = 2.0 * err * inv_n;
        }
        backward_chunk(graph, weights, &cols, n_rows, row0, k, chunk_cap, &values, &mut adjoints, &live, &mut grad);
        row0 += k;
    }

    let mut loss = sse * inv_n;
    if l1_coefficient != 0.0 {
        loss += l1_coefficient * weights.l1_norm_unpruned();
        for i in 0..weights.len() {
            if !weights.is_pruned(i) {
                grad[i] += l1_coefficient * ops::sign0(weights.value(i));
            }
        }
    }
    if !loss.is_finite() {
        return Err(AutodiffError::NonFiniteLoss);
    }
    Ok((loss, GradientVector { values: grad }))
}

/// Propagates adjoints from parents to children and accumulates per-weight
/// gradients for one chunk. `adjoints[0..k]` must hold d(loss)/d(pred).
#[allow(clippy::too_many_arguments)]
fn backward_chunk(
    graph: &ProgramGraph,
    weights: &WeightStore,
    cols: &[f64],
    n_rows: usize,
    row0: usize,
    k: usize,
    stride: usize,
    values: &[f64],
    adjoints: &mut [f64],
    live: &[bool],
    grad: &mut [f64],
) {
    for id in 0..graph.node_count() {
        if !live[id] {
            continue;
        }
        let (head, tail) = adjoints.split_at_mut((id + 1) * stride);
        let adj = &head[id * stride..id * stride + k];
        for s in &graph.node(id).summands {
            let wi = s.weight_index;
            let pruned = weights.is_pruned(wi);
            let w = weights.effective(wi);
            match s.kind {
                SummandKind::Terminal(t) => {
                    if !pruned {
                        let col = &cols[t * n_rows + row0..t * n_rows + row0 + k];
                        let mut acc = 0.0;
                        for r in 0..k {
                            acc += adj[r] * col[r];
                        }
                        grad[wi] += acc;
                    }
                }
                SummandKind::Constant => {
                    if !pruned {
                        let mut acc = 0.0;
                        for r in 0..k {
                            acc += adj[r];
                        }
                        grad[wi] += acc;
                    }
                }
                SummandKind::Unary(op) => {
                    let c = s.children[0];
                    let base = (c - id - 1) * stride;
                    let child_vals = &values[c * stride..c * stride + k];
                    let child_adj = &mut tail[base..base + k];
                    let mut acc = 0.0;
                    match op {
                        OperatorKind::Sin => {
                            for r in 0..k {
                                let a = child_vals[r];
                                acc += adj[r] * a.sin();
                                child_adj[r] = adj[r] * w * a.cos();
                            }
                        }
                        OperatorKind::Exp => {
                            for r in 0..k {
                                let a = child_vals[r];
                                let inside = a.abs() <= ops::EXP_CLAMP;
                                let e = ops::protected_exp(a);
                                acc += adj[r] * e;
                                child_adj[r] = if inside { adj[r] * w * e } else { 0.0 };
                            }
                        }
                        OperatorKind::Log => {
                            for r in 0..k {
                                let a = child_vals[r];
                                let guarded = a.abs() + ops::LOG_EPSILON;
                                acc += adj[r] * guarded.ln();
                                child_adj[r] = adj[r] * w * ops::sign0(a) / guarded;
                            }
                        }
                        OperatorKind::Pow2 => {
                            for r in 0..k {
                                let a = child_vals[r];
                                acc += adj[r] * a * a;
                                child_adj[r] = adj[r] * w * 2.0 * a;
                            }
                        }
                        OperatorKind::Pow3 => {
                            for r in 0..k {
                                let a = child_vals[r];
                                acc += adj[r] * a * a * a;
                                child_adj[r] = adj[r] * w * 3.0 * a * a;
                            }
                        }
                        _ => unreachable!("binary operator in unary summand"),
                    }
                    if !pruned {
                        grad[wi] += acc;
                    }
                    if w == 0.0 {
                        child_adj.fill(0.0);
                    }
                }
                SummandKind::Binary(op) => {
                    let c0 = s.children[0];
                    let c1 = s.children[1];
                    let a_vals = &values[c0 * stride..c0 * stride + k];
                    let b_vals = &values[c1 * stride..c1 * stride + k];
                    let (t0, t1) = tail.split_at_mut((c1 - id - 1) * stride);
                    let a_adj = &mut t0[(c0 - id - 1) * stride..(c0 - id - 1) * stride + k];
                    let b_adj = &mut t1[..k];
                    let mut acc = 0.0;
                    match op {
                        OperatorKind::Add => {
                            for r in 0..k {
                                acc += adj[r] * (a_vals[r] + b_vals[r]);
                                a_adj[r] = adj[r] * w;
                                b_adj[r] = adj[r] * w;
                            }
                        }
                        OperatorKind::Multiply => {
                            for r in 0..k {
                                acc += adj[r] * (a_vals[r] * b_vals[r]);
                                a_adj[r] = adj[r] * w * b_vals[r];
                                b_adj[r] = adj[r] * w * a_vals[r];
                            }
                        }
                        _ => unreachable!("unary operator in binary summand"),
                    }
                    if !pruned {
                        grad[wi] += acc;
                    }
                    if w == 0.0 {
                        a_adj.fill(0.0);
                        b_adj.fill(0.0);
                    }
                }
            }
        }
    }
}
