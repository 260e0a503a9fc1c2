//! Depth-bounded program derivation trees and their forward evaluation.
//!
//! A [`ProgramGraph`] expands a [`GrammarSpec`] to a fixed depth: every
//! internal node carries one weighted summand per production (unary
//! operators, binary operators, terminals, constant, in that order) and each
//! operator summand owns fresh child nodes one level down. Nodes at the
//! maximum depth carry only terminal and constant summands. Children are
//! never shared, so the parameter count of a depth-`D` expansion follows the
//! recurrence
//!
//! ```text
//! P(D) = n_t + c
//! P(d) = (n_u + n_b + n_t + c) + (n_u + 2 n_b) * P(d + 1)
//! ```
//!
//! The value of a node is the weighted sum of its summands, evaluated
//! bottom-up with the protected operator semantics of [`crate::ops`].
//!
//! Nodes are stored flat in pre-order, which gives the evaluator a simple
//! cache-friendly schedule: iterating ids in reverse visits children before
//! parents, ascending order visits parents before children.

#![allow(clippy::needless_range_loop)]

use crate::grammar::{GrammarSpec, OperatorKind};
use crate::matrix::Matrix;
use crate::ops;
use std::fmt;

/// Architectures above this many parameters are rejected at build time.
pub const DEFAULT_PARAM_LIMIT: u64 = 10_000_000;

/// Rows processed per evaluation chunk; bounds scratch-buffer memory.
pub(crate) const CHUNK_ROWS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    TooLarge { parameters: u128, limit: u64 },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::TooLarge { parameters, limit } => write!(
                f,
                "architecture has {parameters} parameters, above the limit of {limit}"
            ),
        }
    }
}

impl std::error::Error for GraphError {}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    TerminalCount { expected: usize, got: usize },
    NonFiniteInput { row: usize, col: usize },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::TerminalCount { expected, got } => {
                write!(f, "input provides {got} coordinates but the grammar has {expected} terminals")
            }
            EvalError::NonFiniteInput { row, col } => {
                write!(f, "non-finite input at row {row}, column {col}")
            }
        }
    }
}

impl std::error::Error for EvalError {}

/// What a summand contributes before its weight is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SummandKind {
    Unary(OperatorKind),
    Binary(OperatorKind),
    /// Index into the grammar's terminal list.
    Terminal(usize),
    Constant,
}

/// One weighted production at a node. Operator summands own one or two child
/// nodes (by id); terminal and constant summands own none.
#[derive(Clone, Debug)]
pub struct Summand {
    pub kind: SummandKind,
    pub weight_index: usize,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TapeNode {
    pub depth: u32,
    pub summands: Vec<Summand>,
}

/// Flat array of edge weights plus a pruned mask. A pruned weight reads as
/// exactly zero during evaluation and is excluded from gradient updates and
/// regularization.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightStore {
    values: Vec<f64>,
    pruned: Vec<bool>,
}

impl WeightStore {
    pub fn zeros(len: usize) -> Self {
        WeightStore { values: vec![0.0; len], pruned: vec![false; len] }
    }

    pub fn from_parts(values: Vec<f64>, pruned: Vec<bool>) -> Self {
        assert_eq!(values.len(), pruned.len());
        WeightStore { values, pruned }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Value with the mask applied: zero if pruned.
    pub fn effective(&self, i: usize) -> f64 {
        if self.pruned[i] {
            0.0
        } else {
            self.values[i]
        }
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.values[i] = v;
    }

    pub fn is_pruned(&self, i: usize) -> bool {
        self.pruned[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pruned_mask(&self) -> &[bool] {
        &self.pruned
    }

    /// Marks a weight pruned and zeroes it.
    pub fn prune(&mut self, i: usize) {
        self.pruned[i] = true;
        self.values[i] = 0.0;
    }

    /// Forces every pruned value back to exactly zero.
    pub fn apply_mask(&mut self) {
        for i in 0..self.values.len() {
            if self.pruned[i] {
                self.values[i] = 0.0;
            }
        }
    }

    pub fn surviving_count(&self) -> usize {
        self.pruned.iter().filter(|&&p| !p).count()
    }

    pub fn l1_norm_unpruned(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.pruned)
            .filter(|&(_, &p)| !p)
            .map(|(v, _)| v.abs())
            .sum()
    }
}

/// Counters reported by evaluation: how often the exp clamp fired and the
/// smallest |argument| seen by a protected log.
#[derive(Clone, Copy, Debug)]
pub struct EvalStats {
    pub exp_clamped: u64,
    pub min_abs_log_arg: f64,
}

impl Default for EvalStats {
    fn default() -> Self {
        EvalStats { exp_clamped: 0, min_abs_log_arg: f64::INFINITY }
    }
}

impl EvalStats {
    fn merge(&mut self, other: EvalStats) {
        self.exp_clamped += other.exp_clamped;
        self.min_abs_log_arg = self.min_abs_log_arg.min(other.min_abs_log_arg);
    }
}

/// Number of weights in the depth-`depth` expansion of `spec`.
///
/// Saturating in u128; callers that build graphs enforce a much smaller
/// limit.
pub fn count_parameters(spec: &GrammarSpec, depth: u32) -> u128 {
    let n_u = spec.unary().len() as u128;
    let n_b = spec.binary().len() as u128;
    let leaf = spec.leaf_summands() as u128;
    let full = leaf + n_u + n_b;
    let branch = n_u + 2 * n_b;
    let mut p = leaf;
    for _ in 0..depth {
        p = full.saturating_add(branch.saturating_mul(p));
    }
    p
}

/// The trainable differentiable program architecture: an immutable tree of
/// weighted productions. Evaluation is read-only and thread-safe; weights
/// live in a separate [`WeightStore`].
#[derive(Clone, Debug)]
pub struct ProgramGraph {
    spec: GrammarSpec,
    depth: u32,
    nodes: Vec<TapeNode>,
    weight_count: usize,
}

impl ProgramGraph {
    pub fn build(spec: &GrammarSpec, depth: u32) -> Result<Self, GraphError> {
        Self::build_with_limit(spec, depth, DEFAULT_PARAM_LIMIT)
    }

    pub fn build_with_limit(spec: &GrammarSpec, depth: u32, limit: u64) -> Result<Self, GraphError> {
        let total = count_parameters(spec, depth);
        if total > u128::from(limit) {
            return Err(GraphError::TooLarge { parameters: total, limit });
        }
        let mut nodes = Vec::new();
        let mut counter = 0usize;
        build_node(spec, depth, 0, &mut nodes, &mut counter);
        debug_assert_eq!(counter as u128, total);
        Ok(ProgramGraph { spec: spec.clone(), depth, nodes, weight_count: counter })
    }

    pub fn spec(&self) -> &GrammarSpec {
        &self.spec
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn weight_count(&self) -> usize {
        self.weight_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node 0 is the root; ids are assigned in pre-order.
    pub fn node(&self, id: usize) -> &TapeNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &TapeNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[TapeNode] {
        &self.nodes
    }

    /// Weight indices of every summand at `node_id` and below.
    pub fn subtree_weight_indices(&self, node_id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_subtree(node_id, &mut out);
        out
    }

    fn collect_subtree(&self, node_id: usize, out: &mut Vec<usize>) {
        for s in &self.nodes[node_id].summands {
            out.push(s.weight_index);
            for &c in &s.children {
                self.collect_subtree(c, out);
            }
        }
    }

    /// Finds the first root summand of the given kind (handy for building
    /// weight assignments by hand).
    pub fn root_summand(&self, kind: SummandKind) -> Option<&Summand> {
        self.nodes[0].summands.iter().find(|s| s.kind == kind)
    }

    /// Reachability of each node under the current mask: a node is live when
    /// its parent summand is unpruned and the parent node is live. Dead
    /// subtrees are skipped during evaluation.
    pub(crate) fn live_nodes(&self, weights: &WeightStore) -> Vec<bool> {
        let mut live = vec![false; self.nodes.len()];
        live[0] = true;
        for id in 0..self.nodes.len() {
            if !live[id] {
                continue;
            }
            for s in &self.nodes[id].summands {
                if !weights.is_pruned(s.weight_index) {
                    for &c in &s.children {
                        live[c] = true;
                    }
                }
            }
        }
        live
    }

    /// Evaluates the graph at a single coordinate record (one value per
    /// terminal, in grammar order).
    pub fn forward(&self, weights: &WeightStore, coords: &[f64]) -> Result<f64, EvalError> {
        let inputs = Matrix::from_rows(&[coords.to_vec()], coords.len());
        Ok(self.batch_forward(weights, &inputs)?[0])
    }

    /// Row-wise evaluation; element `i` equals `forward` on row `i` exactly.
    pub fn batch_forward(&self, weights: &WeightStore, inputs: &Matrix) -> Result<Vec<f64>, EvalError> {
        self.batch_forward_with_stats(weights, inputs).map(|(v, _)| v)
    }

    pub fn batch_forward_with_stats(
        &self,
        weights: &WeightStore,
        inputs: &Matrix,
    ) -> Result<(Vec<f64>, EvalStats), EvalError> {
        assert_eq!(weights.len(), self.weight_count, "weight store size mismatch");
        let n_terminals = self.spec.terminals().len();
        if inputs.cols() != n_terminals {
            return Err(EvalError::TerminalCount { expected: n_terminals, got: inputs.cols() });
        }
        for r in 0..inputs.rows() {
            for (c, v) in inputs.row(r).iter().enumerate() {
                if !v.is_finite() {
                    return Err(EvalError::NonFiniteInput { row: r, col: c });
                }
            }
        }
        let n_rows = inputs.rows();
        let cols = inputs.to_col_major();
        let live = self.live_nodes(weights);
        let mut values = vec![0.0; self.nodes.len() * CHUNK_ROWS.min(n_rows.max(1))];
        let chunk_cap = CHUNK_ROWS.min(n_rows.max(1));
        let mut out = Vec::with_capacity(n_rows);
        let mut stats = EvalStats::default();
        let mut row0 = 0;
        while row0 < n_rows {
            let k = chunk_cap.min(n_rows - row0);
            let chunk_stats =
                self.forward_chunk(weights, &cols, n_rows, row0, k, chunk_cap, &mut values, &live);
            stats.merge(chunk_stats);
            out.extend_from_slice(&values[..k]);
            row0 += k;
        }
        Ok((out, stats))
    }

    /// Computes node values for rows `[row0, row0 + k)` into `values`, which
    /// is laid out node-major with stride `stride`. `cols` is the
    /// column-major input; node 0's slice holds the outputs.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn forward_chunk(
        &self,
        weights: &WeightStore,
        cols: &[f64],
        n_rows: usize,
        row0: usize,
        k: usize,
        stride: usize,
        values: &mut [f64],
        live: &[bool],
    ) -> EvalStats {
        let mut stats = EvalStats::default();
        for id in (0..self.nodes.len()).rev() {
            if !live[id] {
                continue;
            }
            let (head, tail) = values.split_at_mut((id + 1) * stride);
            let out = &mut head[id * stride..id * stride + k];
            out.fill(0.0);
            for s in &self.nodes[id].summands {
                let w = weights.effective(s.weight_index);
                // A zero weight contributes exactly zero, even if the child
                // value is not finite.
                if w == 0.0 {
                    continue;
                }
                match s.kind {
                    SummandKind::Terminal(t) => {
                        let col = &cols[t * n_rows + row0..t * n_rows + row0 + k];
                        for r in 0..k {
                            out[r] += w * col[r];
                        }
                    }
                    SummandKind::Constant => {
                        for v in out.iter_mut() {
                            *v += w;
                        }
                    }
                    SummandKind::Unary(op) => {
                        let c = s.children[0];
                        let child = &tail[(c - id - 1) * stride..(c - id - 1) * stride + k];
                        match op {
                            OperatorKind::Exp => {
                                for r in 0..k {
                                    let a = child[r];
                                    if a.abs() > ops::EXP_CLAMP {
                                        stats.exp_clamped += 1;
                                    }
                                    out[r] += w * ops::protected_exp(a);
                                }
                            }
                            OperatorKind::Log => {
                                for r in 0..k {
                                    let a = child[r].abs();
                                    if a < stats.min_abs_log_arg {
                                        stats.min_abs_log_arg = a;
                                    }
                                    out[r] += w * (a + ops::LOG_EPSILON).ln();
                                }
                            }
                            _ => {
                                for r in 0..k {
                                    out[r] += w * ops::unary_value(op, child[r]);
                                }
                            }
                        }
                    }
                    SummandKind::Binary(op) => {
                        let c0 = s.children[0];
                        let c1 = s.children[1];
                        let a = &tail[(c0 - id - 1) * stride..(c0 - id - 1) * stride + k];
                        let b = &tail[(c1 - id - 1) * stride..(c1 - id - 1) * stride + k];
                        match op {
                            OperatorKind::Add => {
                                for r in 0..k {
                                    out[r] += w * (a[r] + b[r]);
                                }
                            }
                            _ => {
                                for r in 0..k {
                                    out[r] += w * (a[r] * b[r]);
                                }
                            }
                        }
                    }
                }
            }
        }
        stats
    }
}

fn build_node(
    spec: &GrammarSpec,
    max_depth: u32,
    node_depth: u32,
    nodes: &mut Vec<TapeNode>,
    counter: &mut usize,
) -> usize {
    let id = nodes.len();
    nodes.push(TapeNode { depth: node_depth, summands: Vec::new() });

    // Summand order is fixed: unary, binary, terminals, constant. All of a
    // node's weight indices are assigned before any child's, depth-first
    // across children.
    let mut summands = Vec::with_capacity(if node_depth < max_depth {
        spec.summands_per_node()
    } else {
        spec.leaf_summands()
    });
    let mut bump = || {
        let i = *counter;
        *counter += 1;
        i
    };
    if node_depth < max_depth {
        for &op in spec.unary() {
            summands.push(Summand {
                kind: SummandKind::Unary(op),
                weight_index: bump(),
                children: Vec::new(),
            });
        }
        for &op in spec.binary() {
            summands.push(Summand {
                kind: SummandKind::Binary(op),
                weight_index: bump(),
                children: Vec::new(),
            });
        }
    }
    for t in 0..spec.terminals().len() {
        summands.push(Summand {
            kind: SummandKind::Terminal(t),
            weight_index: bump(),
            children: Vec::new(),
        });
    }
    if spec.include_constant() {
        summands.push(Summand { kind: SummandKind::Constant, weight_index: bump(), children: Vec::new() });
    }

    for s in summands.iter_mut() {
        let arity = match s.kind {
            SummandKind::Unary(_) => 1,
            SummandKind::Binary(_) => 2,
            _ => 0,
        };
        for _ in 0..arity {
            let child = build_node(spec, max_depth, node_depth + 1, nodes, counter);
            s.children.push(child);
        }
    }
    nodes[id].summands = summands;
    id
}
